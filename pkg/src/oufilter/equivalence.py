"""Stochastic equivalence transform for coloured-noise scalar systems.

A system  dx/dt = f(x) + g(x)*xi  driven by weakly coloured noise with
correlation moments (mu1, mu2) shares its Fokker-Planck equation with a
white-noise Ito SDE  dx = a(x) dt + b(x) dB.  This module computes the
kinetic coefficients (k1, k2) of that Fokker-Planck equation, the effective
drift a and diffusion b, and the flux-form decomposition (M, k) with
k1 = M + k'/4 used by the PDE validator.

Internally most quantities are assembled from the combination
u = f'g - f g' (= g^2 (f/g)'), which keeps every coefficient polynomial in
the jets of f and g; the public scalar operations still refuse to evaluate
at noise-coefficient zeros, where the underlying expansion is meaningless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularNoiseError, WeakColourValidityError
from .jets import SINGULARITY_THRESHOLD, Jet4, SmoothFn, ratio_jet
from .noise import ColouredStats


@dataclass(frozen=True)
class SystemModel:
    """Coloured system dx/dt = f(x) + g(x)*xi.

    If ``domain`` is given, f and g are probed on its interior at
    construction: jets must be finite and g must stay away from zero.
    """

    f: SmoothFn
    g: SmoothFn
    domain: tuple[float, float] | None = None
    _probes: int = field(default=33, repr=False)

    def __post_init__(self):
        if self.domain is None:
            return
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"empty domain {self.domain}")
        xs = np.linspace(lo, hi, self._probes + 2)[1:-1]
        for x in xs:
            fj, gj = self.f.jet(float(x)), self.g.jet(float(x))
            if not (fj.is_finite and gj.is_finite):
                raise ValueError(f"model jets are not finite at probe x={x:.6g}")
            if abs(gj.value) < SINGULARITY_THRESHOLD:
                raise SingularNoiseError(
                    f"g vanishes at probe x={x:.6g} inside the declared domain"
                )


def _check_g(gj: Jet4, x: float) -> None:
    if abs(gj.value) < SINGULARITY_THRESHOLD:
        raise SingularNoiseError(f"noise coefficient g({x:.6g}) = {gj.value:.3e} is singular")


def _u_stack(fj, gj):
    """u = f'g - fg' and its first three derivatives from order-4 jets."""
    f0, f1, f2, f3, f4 = fj
    g0, g1, g2, g3, g4 = gj
    u0 = f1 * g0 - f0 * g1
    u1 = f2 * g0 - f0 * g2
    u2 = f3 * g0 + f2 * g1 - f1 * g2 - f0 * g3
    u3 = f4 * g0 + 2.0 * f3 * g1 - 2.0 * f1 * g3 - f0 * g4
    return u0, u1, u2, u3


def _drift_terms(fj, gj, s: ColouredStats):
    """(a, a', a'') of the effective drift from component tuples.

    a = f - (mu2/2) * S with S = g u' - g' u; the derivatives follow from
    S' = g u'' - g'' u and S'' = g' u'' + g u''' - g''' u - g'' u'.
    """
    f0, f1, f2 = fj[0], fj[1], fj[2]
    g0, g1, g2, g3 = gj[0], gj[1], gj[2], gj[3]
    u0, u1, u2, u3 = _u_stack(fj, gj)
    half_mu2 = 0.5 * s.mu2
    a0 = f0 - half_mu2 * (g0 * u1 - g1 * u0)
    a1 = f1 - half_mu2 * (g0 * u2 - g2 * u0)
    a2 = f2 - half_mu2 * (g1 * u2 + g0 * u3 - g3 * u0 - g2 * u1)
    return a0, a1, a2


def _diffusion_sq_terms(fj, gj, s: ColouredStats):
    """(k2, k2', k2'') with k2 = b^2 = mu1 g^2 + 2 mu2 g u."""
    g0, g1, g2 = gj[0], gj[1], gj[2]
    u0, u1, u2, _ = _u_stack(fj, gj)
    k2 = s.mu1 * g0 * g0 + 2.0 * s.mu2 * g0 * u0
    dk2 = 2.0 * s.mu1 * g0 * g1 + 2.0 * s.mu2 * (g1 * u0 + g0 * u1)
    d2k2 = (
        2.0 * s.mu1 * (g1 * g1 + g0 * g2)
        + 2.0 * s.mu2 * (g2 * u0 + 2.0 * g1 * u1 + g0 * u2)
    )
    return k2, dk2, d2k2


def drift_derivatives(m: SystemModel, s: ColouredStats, x: float) -> tuple[float, float, float]:
    """Effective drift a(x) with its first and second derivatives."""
    fj, gj = m.f.jet(x), m.g.jet(x)
    _check_g(gj, x)
    return _drift_terms(fj.as_tuple(), gj.as_tuple(), s)


def diffusion_sq_derivatives(
    m: SystemModel, s: ColouredStats, x: float
) -> tuple[float, float, float]:
    """Squared effective diffusion b(x)^2 with its first two derivatives."""
    fj, gj = m.f.jet(x), m.g.jet(x)
    _check_g(gj, x)
    return _diffusion_sq_terms(fj.as_tuple(), gj.as_tuple(), s)


def effective_drift(m: SystemModel, s: ColouredStats, x: float) -> float:
    """Drift a(x) of the equivalent Ito SDE."""
    return drift_derivatives(m, s, x)[0]


def effective_diffusion(m: SystemModel, s: ColouredStats, x: float) -> float:
    """Diffusion b(x) = sqrt(mu1) g(x) sqrt(1 + (2 mu2/mu1) g (f/g)').

    Raises
    ------
    WeakColourValidityError
        If the radicand is negative: the correlation time is too large for
        the first-order colour expansion at this state.
    """
    fj, gj = m.f.jet(x), m.g.jet(x)
    _check_g(gj, x)
    if s.mu1 == 0.0:
        return 0.0 if s.mu2 == 0.0 else math.sqrt(2.0 * s.mu2 * gj.value * _u_stack(fj.as_tuple(), gj.as_tuple())[0])
    rj = ratio_jet(fj, gj)
    radicand = 1.0 + (2.0 * s.mu2 / s.mu1) * gj.value * rj.d1
    if radicand < 0.0:
        raise WeakColourValidityError(
            f"diffusion radicand {radicand:.6g} < 0 at x={x:.6g}; "
            "correlation time too large for the expansion here"
        )
    return math.sqrt(s.mu1) * abs(gj.value) * math.sqrt(radicand)


def kinetic_coefficients(m: SystemModel, s: ColouredStats, x: float) -> tuple[float, float]:
    """Kinetic coefficients (k1, k2) of the limiting Fokker-Planck equation.

    k1 = f + (mu1/2) g g' + mu2 g^2 g' (f/g)',  k2 = mu1 g^2 + 2 mu2 g^3 (f/g)'.
    """
    fj, gj = m.f.jet(x), m.g.jet(x)
    _check_g(gj, x)
    rj = ratio_jet(fj, gj)
    g0, g1 = gj.value, gj.d1
    k1 = fj.value + 0.5 * s.mu1 * g0 * g1 + s.mu2 * g0 * g0 * g1 * rj.d1
    k2 = s.mu1 * g0 * g0 + 2.0 * s.mu2 * g0**3 * rj.d1
    return k1, k2


def fpe_decomposition(m: SystemModel, s: ColouredStats, x: float) -> tuple[float, float]:
    """Flux-form coefficients (M, k) with k1 = M + k'/4 and k = k2.

    Computed through the kinetic-coefficient route, so the algebraic identity
    M == effective_drift is a genuine cross-check rather than a tautology.
    """
    fj, gj = m.f.jet(x), m.g.jet(x)
    _check_g(gj, x)
    rj = ratio_jet(fj, gj)
    g0, g1 = gj.value, gj.d1
    k1 = fj.value + 0.5 * s.mu1 * g0 * g1 + s.mu2 * g0 * g0 * g1 * rj.d1
    k2 = s.mu1 * g0 * g0 + 2.0 * s.mu2 * g0**3 * rj.d1
    dk2 = 2.0 * s.mu1 * g0 * g1 + 2.0 * s.mu2 * (3.0 * g0 * g0 * g1 * rj.d1 + g0**3 * rj.d2)
    return k1 - 0.25 * dk2, k2


class EquivalentIto:
    """Evaluators (a, b) of the equivalent Ito SDE dx = a dt + b dB.

    Methods accept scalars or arrays.  ``b`` is computed through
    b^2 = k2, which is polynomial in the jets of f and g and therefore
    remains finite through isolated zeros of g; a negative b^2 anywhere is
    reported as a validity failure of the colour expansion.
    """

    def __init__(self, m: SystemModel, s: ColouredStats):
        self.model = m
        self.stats = s

    def _jets(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return self.model.f.jet_columns(xs), self.model.g.jet_columns(xs)

    def a(self, x):
        fc, gc = self._jets(x)
        out = _drift_terms(fc, gc, self.stats)[0]
        return float(out[0]) if np.ndim(x) == 0 else out

    def diffusion_sq(self, x):
        fc, gc = self._jets(x)
        out = _diffusion_sq_terms(fc, gc, self.stats)[0]
        return float(out[0]) if np.ndim(x) == 0 else out

    def b(self, x):
        k2 = self.diffusion_sq(x)
        k2arr = np.atleast_1d(np.asarray(k2, dtype=float))
        if np.any(k2arr < 0.0):
            i = int(np.argmin(k2arr))
            xs = np.atleast_1d(np.asarray(x, dtype=float))
            raise WeakColourValidityError(
                f"b^2 = {k2arr[i]:.6g} < 0 at x={xs[i]:.6g}; "
                "correlation time too large for the expansion here"
            )
        out = np.sqrt(k2arr)
        return float(out[0]) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class KineticCoefficients:
    """Pointwise evaluators k1, k2 and the decomposition (M, k), k1 = M + k'/4."""

    model: SystemModel
    stats: ColouredStats

    def _columns(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return self.model.f.jet_columns(xs), self.model.g.jet_columns(xs), np.ndim(x) == 0

    def k2(self, x):
        fc, gc, scalar = self._columns(x)
        out = _diffusion_sq_terms(fc, gc, self.stats)[0]
        return float(out[0]) if scalar else out

    k = k2  # the decomposition's k coincides with k2

    def k1(self, x):
        fc, gc, scalar = self._columns(x)
        m_val, dk2 = self._m_dk2(fc, gc)
        out = m_val + 0.25 * dk2
        return float(out[0]) if scalar else out

    def M(self, x):
        fc, gc, scalar = self._columns(x)
        out = _drift_terms(fc, gc, self.stats)[0]
        return float(out[0]) if scalar else out

    def _m_dk2(self, fc, gc):
        m_val = _drift_terms(fc, gc, self.stats)[0]
        dk2 = _diffusion_sq_terms(fc, gc, self.stats)[1]
        return m_val, dk2


def equivalent_ito(m: SystemModel, s: ColouredStats) -> EquivalentIto:
    return EquivalentIto(m, s)
