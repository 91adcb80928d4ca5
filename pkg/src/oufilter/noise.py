"""Ornstein-Uhlenbeck input noise and its correlation moments.

The whole equivalence theory is parameterised by two moments of the input
noise: the time-integrated autocorrelation ``mu1`` and the (absolute) first
moment of the autocorrelation ``mu2``.  For an OU process these are
``(2*D, D*tau_cor)``; for a generic stationary kernel they are obtained by
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ToolkitError

AutocorrelationFn = Callable[[float], float]
"""Stationary autocorrelation R(tau) evaluated at lags tau <= 0."""


@dataclass(frozen=True)
class OUParams:
    """Ornstein-Uhlenbeck noise: d xi = -(xi/tau_cor) dt + (sqrt(2D)/tau_cor) dB."""

    D: float
    tau_cor: float

    def __post_init__(self):
        if not (self.D >= 0.0 and math.isfinite(self.D)):
            raise ValueError(f"noise intensity D must be finite and >= 0, got {self.D}")
        if not (self.tau_cor > 0.0 and math.isfinite(self.tau_cor)):
            raise ValueError(f"correlation time must be finite and > 0, got {self.tau_cor}")

    @property
    def stationary_variance(self) -> float:
        return self.D / self.tau_cor


@dataclass(frozen=True)
class ColouredStats:
    """Correlation moments (mu1, mu2) of the input noise.

    ``mu2`` uses the positive sign convention, i.e. the absolute value of the
    first-moment integral, so the OU case gives ``mu2 = D * tau_cor``.
    """

    mu1: float
    mu2: float

    def __post_init__(self):
        if self.mu1 < 0.0 or self.mu2 < 0.0:
            raise ValueError(f"correlation moments must be >= 0, got {(self.mu1, self.mu2)}")

    @property
    def correlation_time(self) -> float:
        """Effective correlation time 2*mu2/mu1 (equals tau_cor for OU noise)."""
        if self.mu1 == 0.0:
            return 0.0
        return 2.0 * self.mu2 / self.mu1

    def white(self) -> "ColouredStats":
        """The white-noise limit with the same intensity: (mu1, 0)."""
        return ColouredStats(self.mu1, 0.0)


def ou_stats(p: OUParams) -> ColouredStats:
    """Correlation moments of OU noise: (2*D, D*tau_cor)."""
    return ColouredStats(2.0 * p.D, p.D * p.tau_cor)


def ou_autocorrelation(p: OUParams) -> AutocorrelationFn:
    """Stationary OU kernel R(tau) = (D/tau_cor) * exp(tau/tau_cor), tau <= 0."""

    def R(tau: float) -> float:
        return (p.D / p.tau_cor) * math.exp(-abs(tau) / p.tau_cor)

    return R


def _infer_cutoff(R: AutocorrelationFn) -> float:
    """Smallest probed lag at which |R| has decayed to 1e-12 of |R(0)|."""
    r0 = abs(R(0.0))
    if r0 == 0.0:
        return 1.0
    t = 1e-6
    while t < 1e12:
        if abs(R(-t)) < 1e-12 * r0:
            return t
        t *= 1.25
    raise ToolkitError("autocorrelation does not decay; supply tail_cutoff explicitly")


def stats_from_autocorrelation(
    R: AutocorrelationFn,
    tail_cutoff: float | None = None,
    quad_step: float | None = None,
) -> ColouredStats:
    """Correlation moments by composite-trapezoid quadrature over (-cutoff, 0].

    mu1 = 2 * integral of R, mu2 = |integral of tau * R(tau)|.  When
    ``tail_cutoff`` is omitted it is inferred from where |R| falls below
    1e-12 of R(0); the default step resolves that range with 2*10^4 panels.
    """
    if tail_cutoff is None:
        tail_cutoff = _infer_cutoff(R)
    if tail_cutoff <= 0.0:
        raise ValueError("tail_cutoff must be > 0")
    if quad_step is None:
        quad_step = tail_cutoff / 2e4
    if quad_step <= 0.0:
        raise ValueError("quad_step must be > 0")

    n = max(2, int(math.ceil(tail_cutoff / quad_step)) + 1)
    taus = np.linspace(-tail_cutoff, 0.0, n)
    vals = np.array([R(float(t)) for t in taus])
    if not np.all(np.isfinite(vals)):
        raise ToolkitError("autocorrelation evaluated to a non-finite value")
    mu1 = 2.0 * float(np.trapezoid(vals, taus))
    mu2 = abs(float(np.trapezoid(taus * vals, taus)))
    return ColouredStats(mu1, mu2)


def ou_step(xi: float, p: OUParams, dt: float, dB: float) -> float:
    """One Euler-Maruyama step of the OU noise; dB is the caller's Brownian increment."""
    return xi + (-xi / p.tau_cor) * dt + (math.sqrt(2.0 * p.D) / p.tau_cor) * dB
