"""Scalar functions carrying derivatives up to order four.

The filtering equations consume stacks of spatial derivatives of the model
functions f, g, h and of the quotient f/g.  A ``Jet4`` bundles a value with
its first four derivatives at a point; ``SmoothFn`` is the evaluation
contract every model function must satisfy.  Closed-form jets are provided
for polynomials, and ``from_callable`` builds jets for generic closed-form
expressions via truncated Taylor-series (forward-mode) arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularNoiseError

# |g| below this counts as a noise-coefficient zero crossing.
SINGULARITY_THRESHOLD = 1e-12

_FACTORIALS = (1.0, 1.0, 2.0, 6.0, 24.0)


@dataclass(frozen=True)
class Jet4:
    """Value and derivatives of orders 1..4 of a scalar function at a point."""

    value: float
    d1: float = 0.0
    d2: float = 0.0
    d3: float = 0.0
    d4: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.value, self.d1, self.d2, self.d3, self.d4)

    @property
    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in self.as_tuple())

    def __add__(self, other: "Jet4") -> "Jet4":
        return Jet4(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def __sub__(self, other: "Jet4") -> "Jet4":
        return Jet4(*(a - b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def __mul__(self, other):
        if isinstance(other, Jet4):
            return Jet4(*_product(self.as_tuple(), other.as_tuple()))
        return Jet4(*(other * c for c in self.as_tuple()))

    __rmul__ = __mul__


def _product(f, g):
    """Leibniz rule through order 4 on component tuples."""
    f0, f1, f2, f3, f4 = f
    g0, g1, g2, g3, g4 = g
    return (
        f0 * g0,
        f0 * g1 + f1 * g0,
        f0 * g2 + 2.0 * f1 * g1 + f2 * g0,
        f0 * g3 + 3.0 * f1 * g2 + 3.0 * f2 * g1 + f3 * g0,
        f0 * g4 + 4.0 * f1 * g3 + 6.0 * f2 * g2 + 4.0 * f3 * g1 + f4 * g0,
    )


def _quotient(f, g):
    """Exact quotient rule through order 4, solving f = r*g recursively."""
    f0, f1, f2, f3, f4 = f
    g0, g1, g2, g3, g4 = g
    r0 = f0 / g0
    r1 = (f1 - r0 * g1) / g0
    r2 = (f2 - r0 * g2 - 2.0 * r1 * g1) / g0
    r3 = (f3 - r0 * g3 - 3.0 * r1 * g2 - 3.0 * r2 * g1) / g0
    r4 = (f4 - r0 * g4 - 4.0 * r1 * g3 - 6.0 * r2 * g2 - 4.0 * r3 * g1) / g0
    return (r0, r1, r2, r3, r4)


def ratio_jet(fj: Jet4, gj: Jet4, threshold: float = SINGULARITY_THRESHOLD) -> Jet4:
    """Jet of f/g at the same point, by the exact quotient rule.

    Raises
    ------
    SingularNoiseError
        If ``|gj.value| < threshold`` (noise-coefficient zero crossing).
    """
    if abs(gj.value) < threshold:
        raise SingularNoiseError(
            f"denominator magnitude {abs(gj.value):.3e} below threshold {threshold:.3e}"
        )
    return Jet4(*_quotient(fj.as_tuple(), gj.as_tuple()))


class SmoothFn:
    """Evaluation contract: given x, return the Jet4 of the function at x.

    Subclasses implement ``jet``.  ``values`` and ``jet_columns`` have loop
    fallbacks; vector-friendly subclasses override them for speed.
    """

    def jet(self, x: float) -> Jet4:
        raise NotImplementedError

    def __call__(self, x: float) -> float:
        return self.jet(x).value

    def values(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return np.array([self.jet(float(x)).value for x in xs.ravel()]).reshape(xs.shape)

    def jet_columns(self, xs: np.ndarray) -> np.ndarray:
        """Shape (5, n): rows are value, d1, d2, d3, d4 over the points."""
        xs = np.asarray(xs, dtype=float).ravel()
        out = np.empty((5, xs.size))
        for i, x in enumerate(xs):
            out[:, i] = self.jet(float(x)).as_tuple()
        return out


class Polynomial(SmoothFn):
    """Polynomial with exact derivative jets.  Coefficients in ascending order."""

    def __init__(self, coefficients):
        c = np.asarray(coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        self.coefficients = c
        self._dcoeffs = [c]
        for _ in range(4):
            self._dcoeffs.append(np.polynomial.polynomial.polyder(self._dcoeffs[-1]))

    def jet(self, x: float) -> Jet4:
        pv = np.polynomial.polynomial.polyval
        return Jet4(*(float(pv(x, dc)) if dc.size else 0.0 for dc in self._dcoeffs))

    def values(self, xs: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(xs, dtype=float), self.coefficients)

    def jet_columns(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).ravel()
        pv = np.polynomial.polynomial.polyval
        out = np.zeros((5, xs.size))
        for k, dc in enumerate(self._dcoeffs):
            if dc.size:
                out[k] = pv(xs, dc)
        return out

    def __repr__(self) -> str:
        return f"Polynomial({self.coefficients.tolist()})"


def constant(c: float) -> Polynomial:
    return Polynomial([c])


class TaylorScalar:
    """Truncated degree-4 Taylor series used for forward differentiation.

    Coefficients are Taylor coefficients (derivative / k!) and may be scalars
    or numpy arrays, so one evaluation differentiates a whole batch of points.
    """

    __slots__ = ("c",)
    __array_ufunc__ = None  # keep numpy from broadcasting over this type

    def __init__(self, coeffs):
        self.c = list(coeffs)
        if len(self.c) != 5:
            raise ValueError("TaylorScalar needs exactly 5 coefficients")

    @classmethod
    def seed(cls, x):
        x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        one = np.ones_like(x) if np.ndim(x) else 1.0
        zero = np.zeros_like(x) if np.ndim(x) else 0.0
        return cls([x, one, zero, zero, zero])

    def jet(self) -> Jet4:
        return Jet4(*(float(ck) * fk for ck, fk in zip(self.c, _FACTORIALS)))

    def jet_columns(self) -> np.ndarray:
        return np.array([np.asarray(ck, dtype=float) * fk for ck, fk in zip(self.c, _FACTORIALS)])

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TaylorScalar):
            return other
        z = np.zeros_like(self.c[0]) if np.ndim(self.c[0]) else 0.0
        return TaylorScalar([other + z, z, z, z, z])

    def __add__(self, other):
        o = self._coerce(other)
        return TaylorScalar([a + b for a, b in zip(self.c, o.c)])

    __radd__ = __add__

    def __neg__(self):
        return TaylorScalar([-a for a in self.c])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        a, b = self.c, o.c
        return TaylorScalar(
            [sum(a[k] * b[n - k] for k in range(n + 1)) for n in range(5)]
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        a, b = self.c, o.c
        q = [a[0] / b[0]]
        for n in range(1, 5):
            q.append((a[n] - sum(q[k] * b[n - k] for k in range(n))) / b[0])
        return TaylorScalar(q)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p):
        if isinstance(p, int) or (isinstance(p, float) and p.is_integer()):
            n = int(p)
            if n < 0:
                return 1.0 / (self ** (-n))
            out = self._coerce(1.0)
            base = self
            while n:
                if n & 1:
                    out = out * base
                base = base * base
                n >>= 1
            return out
        return exp(p * log(self))

    def _compose(self, outer):
        """Compose with outer Taylor coefficients about self.c[0]."""
        v = TaylorScalar([np.zeros_like(self.c[0]) if np.ndim(self.c[0]) else 0.0] + self.c[1:])
        out = self._coerce(outer[0])
        power = self._coerce(1.0)
        for k in range(1, 5):
            power = power * v
            out = out + power * outer[k]
        return out


def _dispatch(ts_rule, np_fn):
    def wrapped(x):
        if isinstance(x, TaylorScalar):
            return x._compose(ts_rule(x.c[0]))
        return np_fn(x)

    return wrapped


exp = _dispatch(lambda u: [(e := np.exp(u)) / fk for fk in _FACTORIALS], np.exp)
sin = _dispatch(
    lambda u: [np.sin(u), np.cos(u), -np.sin(u) / 2.0, -np.cos(u) / 6.0, np.sin(u) / 24.0],
    np.sin,
)
cos = _dispatch(
    lambda u: [np.cos(u), -np.sin(u), -np.cos(u) / 2.0, np.sin(u) / 6.0, np.cos(u) / 24.0],
    np.cos,
)
log = _dispatch(
    lambda u: [np.log(u), 1.0 / u, -1.0 / (2.0 * u**2), 1.0 / (3.0 * u**3), -1.0 / (4.0 * u**4)],
    np.log,
)
sqrt = _dispatch(
    lambda u: [
        (s := np.sqrt(u)),
        0.5 / s,
        -1.0 / (8.0 * u * s),
        1.0 / (16.0 * u**2 * s),
        -5.0 / (128.0 * u**3 * s),
    ],
    np.sqrt,
)


class CallableFn(SmoothFn):
    """SmoothFn built from a plain callable via Taylor-mode differentiation.

    The callable must be written with arithmetic operators and the module's
    ``exp``/``log``/``sqrt``/``sin``/``cos`` so it evaluates on TaylorScalar.
    """

    def __init__(self, fn):
        self.fn = fn

    def jet(self, x: float) -> Jet4:
        return self.fn(TaylorScalar.seed(float(x))).jet()

    def values(self, xs: np.ndarray) -> np.ndarray:
        return self.jet_columns(xs)[0]

    def jet_columns(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).ravel()
        out = self.fn(TaylorScalar.seed(xs))
        if not isinstance(out, TaylorScalar):  # fn ignored its argument
            cols = np.zeros((5, xs.size))
            cols[0] = out
            return cols
        cols = out.jet_columns()
        return np.broadcast_to(cols.reshape(5, -1), (5, xs.size)).copy()


def from_callable(fn) -> CallableFn:
    return CallableFn(fn)


# 4th-order central stencils used as the independent derivative check.
_STENCILS = (
    (1, np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, (-2, -1, 0, 1, 2)),
    (2, np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, (-2, -1, 0, 1, 2)),
    (3, np.array([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]) / 8.0, (-3, -2, -1, 0, 1, 2, 3)),
    (4, np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]) / 6.0, (-3, -2, -1, 0, 1, 2, 3)),
)


def finite_difference_jet(value_fn, x: float, step: float | None = None) -> Jet4:
    """Jet estimated from the value function alone via central differences."""
    h = step if step is not None else 1e-2 * max(1.0, abs(x))
    ds = []
    for order, weights, offsets in _STENCILS:
        acc = sum(w * value_fn(x + k * h) for w, k in zip(weights, offsets))
        ds.append(acc / h**order)
    return Jet4(value_fn(x), *ds)


def validate_jet(fn: SmoothFn, x: float, tol: float, step: float | None = None) -> bool:
    """True iff d1..d4 of ``fn`` match central finite differences of its value.

    Comparison is relative where the component magnitude is >= 1 and absolute
    otherwise.
    """
    jet = fn.jet(x)
    fd = finite_difference_jet(lambda p: fn.jet(p).value, x, step)
    for claimed, estimated in zip(jet.as_tuple()[1:], fd.as_tuple()[1:]):
        err = abs(claimed - estimated)
        if abs(claimed) >= 1.0:
            err /= abs(claimed)
        if not (err <= tol):
            return False
    return True
