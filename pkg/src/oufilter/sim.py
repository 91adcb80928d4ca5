"""Seedable Euler-Maruyama simulation of the coloured system, the equivalent
Ito SDE, and the observation process.

Randomness comes from counter-based Philox streams.  The master seed is
expanded with ``numpy.random.SeedSequence`` and per-path substreams are
``jumped`` copies of one Philox state (path index -> jump count), so an
ensemble member is bitwise identical to the corresponding single-path run
and results do not depend on chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equivalence import EquivalentIto, SystemModel
from .errors import NonFiniteStateError, StabilityError, WeakColourValidityError
from .noise import OUParams

_PROCESS_STREAM = 0
_OBSERVATION_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    seed: int = 0
    n_paths: int = 1

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be finite and > 0, got {self.t_end}")
        if self.dt > self.t_end:
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class Path:
    """A single realisation on a uniform time grid."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class ColouredPath(Path):
    """State path together with the driving noise path."""

    noise_states: np.ndarray = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ObservationSeries:
    """Integrated observation increments dz over each step [t_k, t_k + dt)."""

    times: np.ndarray
    increments: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.increments):
            raise ValueError("times and increments must have equal length")


def _master_bitgen(seed: int, stream: int) -> np.random.Philox:
    return np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,)))


def path_rng(seed: int, path_index: int, stream: int = _PROCESS_STREAM) -> np.random.Generator:
    """Generator for one path's substream of the master seed."""
    bg = _master_bitgen(seed, stream)
    if path_index:
        bg = bg.jumped(path_index)
    return np.random.Generator(bg)


def _check_finite(x: np.ndarray, step: int, what: str) -> None:
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFiniteStateError(f"{what} became non-finite at step {step} (path {bad})")


def _normal_increments(seed: int, first_path: int, n_paths: int, n_steps: int) -> np.ndarray:
    """Standard-normal increments, one row per path, from per-path substreams."""
    master = _master_bitgen(seed, _PROCESS_STREAM)
    out = np.empty((n_paths, n_steps))
    for k in range(n_paths):
        gen = np.random.Generator(master.jumped(first_path + k))
        out[k] = gen.standard_normal(n_steps)
    return out


def _coloured_chunk(m, p, xi0, x0, dt, n_steps, raw, keep_path):
    n = raw.shape[0]
    sqdt = math.sqrt(dt)
    c_noise = math.sqrt(2.0 * p.D) / p.tau_cor
    x = np.full(n, float(x0))
    xi = np.full(n, float(xi0))
    xs = np.empty((n, n_steps + 1)) if keep_path else None
    xis = np.empty((n, n_steps + 1)) if keep_path else None
    if keep_path:
        xs[:, 0] = x
        xis[:, 0] = xi
    for k in range(n_steps):
        x = x + (m.f.values(x) + m.g.values(x) * xi) * dt
        xi = xi + (-xi / p.tau_cor) * dt + c_noise * (sqdt * raw[:, k])
        _check_finite(x, k + 1, "coloured state")
        if keep_path:
            xs[:, k + 1] = x
            xis[:, k + 1] = xi
    return (x, xi, xs, xis)


def simulate_coloured(
    m: SystemModel, p: OUParams, xi0: float, x0: float, cfg: SimConfig
) -> ColouredPath:
    """One path of the coloured system via the augmented state (x, xi).

    x is advanced with the current noise value; xi is advanced by an
    explicit Euler-Maruyama step of the OU equation.  Requires
    dt <= tau_cor/10 for stability of the stiff noise relaxation.
    """
    _require_ou_dt(cfg.dt, p)
    raw = _normal_increments(cfg.seed, 0, 1, cfg.n_steps)
    _, _, xs, xis = _coloured_chunk(m, p, xi0, x0, cfg.dt, cfg.n_steps, raw, keep_path=True)
    return ColouredPath(times=cfg.times(), states=xs[0], noise_states=xis[0])


def ensemble_coloured(
    m: SystemModel,
    p: OUParams,
    xi0: float,
    x0: float,
    cfg: SimConfig,
    chunk_size: int = 8192,
) -> np.ndarray:
    """Terminal states of cfg.n_paths coloured paths (per-path substreams)."""
    _require_ou_dt(cfg.dt, p)
    out = np.empty(cfg.n_paths)
    for start in range(0, cfg.n_paths, chunk_size):
        stop = min(start + chunk_size, cfg.n_paths)
        raw = _normal_increments(cfg.seed, start, stop - start, cfg.n_steps)
        out[start:stop] = _coloured_chunk(
            m, p, xi0, x0, cfg.dt, cfg.n_steps, raw, keep_path=False
        )[0]
    return out


def _require_ou_dt(dt: float, p: OUParams) -> None:
    if dt > p.tau_cor / 10.0 + 1e-15 * p.tau_cor:
        raise StabilityError(
            f"dt={dt} violates dt <= tau_cor/10 = {p.tau_cor / 10.0} for coloured simulation"
        )


def _ito_chunk(eq, x0, dt, n_steps, raw, keep_path, first_step_offset=0):
    n = raw.shape[0]
    sqdt = math.sqrt(dt)
    x = np.full(n, float(x0))
    xs = np.empty((n, n_steps + 1)) if keep_path else None
    if keep_path:
        xs[:, 0] = x
    for k in range(n_steps):
        k2 = eq.diffusion_sq(x)
        if np.any(k2 < 0.0):
            i = int(np.argmin(k2))
            raise WeakColourValidityError(
                f"diffusion radicand negative at state x={x[i]:.6g}, step {k + first_step_offset}"
            )
        x = x + eq.a(x) * dt + np.sqrt(k2) * (sqdt * raw[:, k])
        _check_finite(x, k + 1, "Ito state")
        if keep_path:
            xs[:, k + 1] = x
    return x, xs


def simulate_ito(eq: EquivalentIto, x0: float, cfg: SimConfig) -> Path:
    """One Euler-Maruyama path of dx = a(x) dt + b(x) dB."""
    raw = _normal_increments(cfg.seed, 0, 1, cfg.n_steps)
    _, xs = _ito_chunk(eq, x0, cfg.dt, cfg.n_steps, raw, keep_path=True)
    return Path(times=cfg.times(), states=xs[0])


def ensemble_ito(
    eq: EquivalentIto, x0: float, cfg: SimConfig, chunk_size: int = 8192
) -> np.ndarray:
    """Terminal states of cfg.n_paths Ito paths (per-path substreams)."""
    out = np.empty(cfg.n_paths)
    for start in range(0, cfg.n_paths, chunk_size):
        stop = min(start + chunk_size, cfg.n_paths)
        raw = _normal_increments(cfg.seed, start, stop - start, cfg.n_steps)
        out[start:stop] = _ito_chunk(eq, x0, cfg.dt, cfg.n_steps, raw, keep_path=False)[0]
    return out


def simulate_observations(path: Path, obs, seed: int) -> ObservationSeries:
    """Observation increments dz_k = h(x_k) dt + sqrt(phi_eta dt) N(0,1).

    Uses a dedicated observation stream of ``seed``, disjoint from every
    process stream, so changing it never perturbs state paths.
    """
    dts = np.diff(path.times)
    if dts.size == 0:
        raise ValueError("path must contain at least one step")
    if not np.allclose(dts, dts[0], rtol=1e-12, atol=0.0):
        raise ValueError("path must be uniformly spaced")
    dt = float(dts[0])
    rng = path_rng(seed, 0, stream=_OBSERVATION_STREAM)
    h_vals = obs.h.values(path.states[:-1])
    noise = rng.standard_normal(dts.size) if obs.phi_eta > 0.0 else np.zeros(dts.size)
    dz = h_vals * dt + math.sqrt(obs.phi_eta * dt) * noise
    return ObservationSeries(times=path.times[:-1].copy(), increments=dz)
