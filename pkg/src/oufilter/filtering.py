"""Second-order approximate filtering for coloured-noise scalar systems.

The filter propagates the conditional mean and variance of the state given
observation increments dz = h(x) dt + d(eta), var(d eta) = phi_eta dt.
Drift and diffusion corrections of the coloured-noise expansion enter
through the equivalent Ito coefficients a(x) and b(x)^2:

    mean drift      a(xh) + (P/2) a''(xh)
    variance drift  2 P a'(xh) + b^2(xh) + (P/2) (b^2)''(xh) - P^2 h'(xh)^2 / phi_eta

with the innovation gain P h'/phi_eta on the mean and the stochastic
variance forcing P^2 h''/phi_eta (zero for linear h).  With mu2 = 0 these
are the classical second-order filtering equations.  The closed-form filter
for the damped cubic (Duffing) reduction is implemented separately as an
exactness oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .equivalence import SystemModel, drift_derivatives, diffusion_sq_derivatives
from .errors import NonFiniteStateError
from .jets import SmoothFn
from .noise import ColouredStats

FilterMode = Literal["second_order_coloured", "second_order_classical", "duffing_closed_form"]


@dataclass(frozen=True)
class ObservationModel:
    """Observation increments dz = h(x) dt + noise, var = phi_eta dt.

    phi_eta = 0 is legal for simulation (noiseless observations) but the
    filtering operations refuse it: with no observation noise the filter
    gain is unbounded and the equations degenerate.
    """

    h: SmoothFn
    phi_eta: float

    def __post_init__(self):
        if not (self.phi_eta >= 0.0 and math.isfinite(self.phi_eta)):
            raise ValueError(f"phi_eta must be finite and >= 0, got {self.phi_eta}")

    def require_noisy(self) -> None:
        if self.phi_eta <= 0.0:
            raise ValueError("phi_eta must be > 0 for filtering (noiseless observations)")


@dataclass(frozen=True)
class FilterState:
    t: float
    x_hat: float
    P: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.t, self.x_hat, self.P)):
            raise NonFiniteStateError(f"non-finite filter state {self!r}")
        if self.P < 0.0:
            raise ValueError(f"conditional variance must be >= 0, got {self.P}")


@dataclass(frozen=True)
class DuffingParams:
    """Parameters of the damped cubic system dx/dt = -(alpha/beta)x + (a/beta)x^3 - (x/beta) xi."""

    alpha: float
    beta: float
    a: float
    D: float
    tau_cor: float
    phi_eta: float

    def __post_init__(self):
        if self.beta == 0.0:
            raise ValueError("beta must be nonzero")
        if self.phi_eta <= 0.0:
            raise ValueError("phi_eta must be > 0")

    @property
    def mu1(self) -> float:
        return 2.0 * self.D

    @property
    def mu2(self) -> float:
        return self.D * self.tau_cor


@dataclass(frozen=True)
class FilterOptions:
    variance_floor: float = 1e-12
    mode: FilterMode = "second_order_coloured"
    duffing: DuffingParams | None = None

    def __post_init__(self):
        if not (self.variance_floor > 0.0):
            raise ValueError("variance_floor must be > 0")
        if self.mode == "duffing_closed_form" and self.duffing is None:
            raise ValueError("duffing_closed_form mode requires DuffingParams")


def mean_drift(
    m: SystemModel, s: ColouredStats, obs: ObservationModel, st: FilterState
) -> float:
    """Deterministic drift of the conditional mean, excluding the innovation."""
    a0, _, a2 = drift_derivatives(m, s, st.x_hat)
    return a0 + 0.5 * st.P * a2


def variance_drift(
    m: SystemModel, s: ColouredStats, obs: ObservationModel, st: FilterState
) -> float:
    """Deterministic drift of the conditional variance."""
    obs.require_noisy()
    _, a1, _ = drift_derivatives(m, s, st.x_hat)
    k2, _, d2k2 = diffusion_sq_derivatives(m, s, st.x_hat)
    h1 = obs.h.jet(st.x_hat).d1
    return 2.0 * st.P * a1 + k2 + 0.5 * st.P * d2k2 - st.P * st.P * h1 * h1 / obs.phi_eta


def variance_guard(P: float, opts: FilterOptions) -> float:
    """Clamp the conditional variance at the configured floor."""
    return P if P >= opts.variance_floor else opts.variance_floor


def filter_step(
    st: FilterState,
    dz: float,
    dt: float,
    m: SystemModel,
    s: ColouredStats,
    obs: ObservationModel,
    opts: FilterOptions = FilterOptions(),
) -> FilterState:
    """One explicit Euler step of the filtering equations.

    The observation increment dz over [t, t+dt] is consumed once.  For
    nonlinear h the stochastic variance forcing is dropped whenever it would
    push P below the floor (modified approximate filter); the floor clamp
    applies regardless.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if opts.mode == "duffing_closed_form":
        return duffing_step(st, dz, dt, opts.duffing, opts)
    obs.require_noisy()
    s_eff = s.white() if opts.mode == "second_order_classical" else s

    a0, a1, a2 = drift_derivatives(m, s_eff, st.x_hat)
    k2, _, d2k2 = diffusion_sq_derivatives(m, s_eff, st.x_hat)
    hj = obs.h.jet(st.x_hat)

    predicted = (hj.value + 0.5 * st.P * hj.d2) * dt
    innovation = dz - predicted
    x_new = st.x_hat + (a0 + 0.5 * st.P * a2) * dt + st.P * hj.d1 / obs.phi_eta * innovation

    v_drift = 2.0 * st.P * a1 + k2 + 0.5 * st.P * d2k2 - st.P**2 * hj.d1**2 / obs.phi_eta
    p_det = st.P + v_drift * dt
    forcing = st.P**2 * hj.d2 / obs.phi_eta * innovation
    p_new = p_det + forcing
    if forcing != 0.0 and p_new < opts.variance_floor:
        p_new = p_det
    p_new = variance_guard(p_new, opts)

    for name, value in (("mean", x_new), ("variance", p_new)):
        if not math.isfinite(value):
            raise NonFiniteStateError(
                f"filter {name} update non-finite at t={st.t:.6g} (dz={dz!r})"
            )
    return FilterState(t=st.t + dt, x_hat=x_new, P=p_new)


def duffing_mean_bracket(x: float, P: float, prm: DuffingParams) -> float:
    """Closed-form deterministic mean drift of the damped cubic filter."""
    mu2 = prm.mu2
    b3 = prm.beta**3
    return (
        -(prm.alpha / prm.beta) * x
        + (prm.a / prm.beta) * x**3
        - (2.0 * prm.a * mu2 / b3) * x**3
        + 0.5 * P * (6.0 * prm.a * x / prm.beta - 12.0 * prm.a * mu2 * x / b3)
    )


def duffing_variance_bracket(x: float, P: float, prm: DuffingParams) -> float:
    """Closed-form deterministic variance drift of the damped cubic filter."""
    mu1, mu2 = prm.mu1, prm.mu2
    b2, b3 = prm.beta**2, prm.beta**3
    x2 = x * x
    return (
        2.0 * P * (-(prm.alpha / prm.beta) + 3.0 * prm.a * x2 / prm.beta - 6.0 * prm.a * mu2 * x2 / b3)
        + (mu1 * x2 / b2) * (1.0 + 4.0 * mu2 * prm.a * x2 / (prm.beta * mu1))
        + 0.5 * P * (2.0 * mu1 / b2 + 48.0 * prm.a * mu2 * x2 / b3)
        - P * P / prm.phi_eta
    )


def duffing_step(
    st: FilterState,
    dz: float,
    dt: float,
    params: DuffingParams,
    opts: FilterOptions = FilterOptions(),
) -> FilterState:
    """One step of the literal closed-form damped-cubic filter (h(x) = x).

    The variance evolves as an ordinary differential equation because the
    observation is linear; the mean is driven by the innovation dz - xh dt
    with gain P/phi_eta.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    innovation = dz - st.x_hat * dt
    x_new = st.x_hat + duffing_mean_bracket(st.x_hat, st.P, params) * dt
    x_new += st.P / params.phi_eta * innovation
    p_new = st.P + duffing_variance_bracket(st.x_hat, st.P, params) * dt
    p_new = variance_guard(p_new, opts)
    if not (math.isfinite(x_new) and math.isfinite(p_new)):
        raise NonFiniteStateError(f"closed-form filter state non-finite at t={st.t:.6g}")
    return FilterState(t=st.t + dt, x_hat=x_new, P=p_new)


def duffing_system(prm: DuffingParams) -> SystemModel:
    """The damped cubic SystemModel: f = -(alpha/beta)x + (a/beta)x^3, g = x/beta."""
    from .jets import Polynomial

    f = Polynomial([0.0, -prm.alpha / prm.beta, 0.0, prm.a / prm.beta])
    g = Polynomial([0.0, 1.0 / prm.beta])
    return SystemModel(f=f, g=g)


def run_filter(
    observations,
    initial: FilterState,
    m: SystemModel,
    s: ColouredStats,
    obs: ObservationModel,
    opts: FilterOptions = FilterOptions(),
    dt: float | None = None,
) -> list[FilterState]:
    """Consume an ObservationSeries and return the FilterState trajectory."""
    import numpy as np

    if dt is None:
        dts = np.diff(observations.times)
        if dts.size == 0:
            raise ValueError("cannot infer dt from a single observation; pass dt explicitly")
        if not np.allclose(dts, dts[0], rtol=1e-12, atol=0.0):
            raise ValueError("observation times must be uniformly spaced")
        dt = float(dts[0])
    states = [initial]
    st = initial
    for dz in observations.increments:
        st = filter_step(st, float(dz), dt, m, s, obs, opts)
        states.append(st)
    return states
