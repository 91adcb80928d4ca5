"""Compiled inner loops for the preset experiment pipeline.

The experiment horizon divided by the coloured-noise stability step makes
per-step Python dispatch infeasible, so truth simulation, observation
generation, the closed-form damped-cubic filter, and the open-loop
predictor run fused in one numba kernel, parallel over runs.

Randomness: per-run substreams of xoshiro256++ generators, seeded from the
master seed through a splitmix64 chain (run index and channel select the
stream); normals via Box-Muller.  Every run's stream is independent of
thread scheduling, so results are reproducible and order-independent.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _splitmix64(z):
    z = (z + _GOLDEN) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def _init_stream(master, index):
    """xoshiro256++ state for stream ``index`` of ``master``."""
    s = np.empty(4, dtype=np.uint64)
    z = _splitmix64(master ^ (np.uint64(index) * _GOLDEN))
    for i in range(4):
        z = _splitmix64(z)
        s[i] = z
    return s


@njit(cache=True, inline="always")
def _next_u64(s):
    result = _rotl(s[0] + s[3], 23) + s[0]
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, inline="always")
def _uniform(s):
    # (0, 1): offset by half an ulp so Box-Muller never sees log(0)
    return (np.float64(_next_u64(s) >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _normal_pair(s):
    u1 = _uniform(s)
    u2 = _uniform(s)
    r = np.sqrt(-2.0 * np.log(u1))
    ang = 6.283185307179586 * u2
    return r * np.cos(ang), r * np.sin(ang)


@njit(cache=True, parallel=True)
def duffing_experiment_kernel(
    n_runs,
    n_steps,
    stride,
    dt,
    alpha,
    beta,
    a_cubic,
    D,
    tau_cor,
    phi_eta,
    mu2_filter,
    P0,
    x0,
    sample_xhat0,
    variance_floor,
    seed,
    rec_stride,
    out_rmse_f,
    out_rmse_ol,
    out_nees,
    out_clamps,
    out_diverged,
    out_traj,
    record_dz,
    out_dz,
):
    """Fused truth/observation/filter/open-loop loop over runs.

    out_traj has shape (n_traj_runs, n_rows, 4) holding (t, x_true, x_hat, P)
    sampled every ``rec_stride`` truth steps (rec_stride must be a multiple
    of ``stride`` so recorded filter values sit on filter-step boundaries).
    out_dz, used by the consistency tests, holds one increment per filter
    step for the trajectory-recorded runs.
    """
    mu1 = 2.0 * D
    c1 = -alpha / beta
    c3 = a_cubic / beta
    g_scale = 1.0 / beta
    noise_c = np.sqrt(2.0 * D) / tau_cor
    sq_dt = np.sqrt(dt)
    delta = stride * dt
    obs_sd = np.sqrt(phi_eta * delta)
    xi_sd = np.sqrt(D / tau_cor)
    n_traj_runs = out_traj.shape[0]
    master = np.uint64(seed)

    for run in prange(n_runs):
        proc = _init_stream(master, 4 * run + 0)
        obs = _init_stream(master, 4 * run + 1)
        init = _init_stream(master, 4 * run + 2)

        z_init, z_init2 = _normal_pair(init)
        xi = xi_sd * z_init2
        x = x0
        if sample_xhat0:
            xhat = x0 + np.sqrt(P0) * z_init
        else:
            xhat = x0
        P = P0
        x_ol = xhat
        P_ol = P0

        sse_f = 0.0
        sse_ol = 0.0
        nees_sum = 0.0
        clamps = 0
        n_obs = 0
        z_acc = 0.0
        spare = 0.0
        have_spare = False
        obs_spare = 0.0
        obs_have = False

        if run < n_traj_runs:
            out_traj[run, 0, 0] = 0.0
            out_traj[run, 0, 1] = x
            out_traj[run, 0, 2] = xhat
            out_traj[run, 0, 3] = P
        row = 1

        for k in range(n_steps):
            # observation integrand uses the state at the step start
            z_acc += x * dt
            # truth: coloured Euler step, then OU noise update
            f_val = x * (c1 + c3 * x * x)
            x = x + (f_val + (x * g_scale) * xi) * dt
            if have_spare:
                z = spare
                have_spare = False
            else:
                z, spare = _normal_pair(proc)
                have_spare = True
            xi = xi + (-xi / tau_cor) * dt + noise_c * (sq_dt * z)

            if (k + 1) % stride == 0:
                if not (-1e300 < x < 1e300):
                    out_diverged[run] = k + 1
                    break
                if obs_have:
                    zo = obs_spare
                    obs_have = False
                else:
                    zo, obs_spare = _normal_pair(obs)
                    obs_have = True
                dz = z_acc + obs_sd * zo
                z_acc = 0.0
                n_obs += 1
                if record_dz and run < n_traj_runs:
                    out_dz[run, n_obs - 1] = dz

                # closed-form second-order filter (linear observation)
                xh2 = xhat * xhat
                mean_br = (
                    c1 * xhat
                    + c3 * xhat * xh2
                    - (2.0 * a_cubic * mu2_filter / beta**3) * xhat * xh2
                    + 0.5
                    * P
                    * (6.0 * a_cubic * xhat / beta - 12.0 * a_cubic * mu2_filter * xhat / beta**3)
                )
                var_br = (
                    2.0 * P * (c1 + 3.0 * c3 * xh2 - 6.0 * a_cubic * mu2_filter * xh2 / beta**3)
                    + (mu1 * xh2 / beta**2)
                    * (1.0 + 4.0 * mu2_filter * a_cubic * xh2 / (beta * mu1))
                    + 0.5 * P * (2.0 * mu1 / beta**2 + 48.0 * a_cubic * mu2_filter * xh2 / beta**3)
                    - P * P / phi_eta
                )
                innovation = dz - xhat * delta
                xhat = xhat + mean_br * delta + (P / phi_eta) * innovation
                P = P + var_br * delta
                if P < variance_floor:
                    P = variance_floor
                    if n_obs > 10:
                        clamps += 1

                # open loop: same equations, measurement gain forced to zero
                xo2 = x_ol * x_ol
                mean_ol = (
                    c1 * x_ol
                    + c3 * x_ol * xo2
                    - (2.0 * a_cubic * mu2_filter / beta**3) * x_ol * xo2
                    + 0.5
                    * P_ol
                    * (6.0 * a_cubic * x_ol / beta - 12.0 * a_cubic * mu2_filter * x_ol / beta**3)
                )
                var_ol = (
                    2.0 * P_ol * (c1 + 3.0 * c3 * xo2 - 6.0 * a_cubic * mu2_filter * xo2 / beta**3)
                    + (mu1 * xo2 / beta**2)
                    * (1.0 + 4.0 * mu2_filter * a_cubic * xo2 / (beta * mu1))
                    + 0.5
                    * P_ol
                    * (2.0 * mu1 / beta**2 + 48.0 * a_cubic * mu2_filter * xo2 / beta**3)
                )
                x_ol = x_ol + mean_ol * delta
                P_ol = P_ol + var_ol * delta
                if P_ol < variance_floor:
                    P_ol = variance_floor

                if not (-1e300 < xhat < 1e300 and -1e300 < P < 1e300 and -1e300 < x_ol < 1e300):
                    out_diverged[run] = k + 1
                    break

                e_f = x - xhat
                e_ol = x - x_ol
                sse_f += e_f * e_f
                sse_ol += e_ol * e_ol
                nees_sum += e_f * e_f / P

            if run < n_traj_runs and (k + 1) % rec_stride == 0:
                out_traj[run, row, 0] = (k + 1) * dt
                out_traj[run, row, 1] = x
                out_traj[run, row, 2] = xhat
                out_traj[run, row, 3] = P
                row += 1

        out_rmse_f[run] = np.sqrt(sse_f / n_obs)
        out_rmse_ol[run] = np.sqrt(sse_ol / n_obs)
        out_nees[run] = nees_sum / n_obs
        out_clamps[run] = clamps
