"""Fokker-Planck validation of the stochastic-equivalence claim.

Evolves the density equation  dp/dt = -d/dx(k1 p) + (1/2) d^2/dx^2 (k2 p)
in its conservative flux form

    dp/dt = -dJ/dx,   J = M p - (1/4) (k dp/dx + d(k p)/dx),

with zero-flux (reflecting) boundaries, and compares the result against
Monte-Carlo histograms of the coloured system and of the equivalent Ito
SDE.  The flux form makes mass conservation exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equivalence import KineticCoefficients, SystemModel, equivalent_ito
from .errors import CoverageError, GridMismatchError, StabilityError, ToolkitError
from .noise import OUParams, ou_stats
from .sim import SimConfig, ensemble_coloured, ensemble_ito

_NEGATIVE_DUST = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """A discretised probability density on [x_min, x_max], cell-centred."""

    x_min: float
    x_max: float
    n_cells: int
    values: np.ndarray

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"empty interval [{self.x_min}, {self.x_max}]")
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n_cells,):
            raise ValueError(f"values must have shape ({self.n_cells},), got {v.shape}")
        scale = float(np.max(np.abs(v))) if v.size else 0.0
        if scale > 0.0 and float(np.min(v)) < -_NEGATIVE_DUST * scale:
            raise ValueError("density has significantly negative entries")
        object.__setattr__(self, "values", np.maximum(v, 0.0))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    def faces(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx

    def mass(self) -> float:
        return float(np.sum(self.values) * self.dx)

    def normalized(self) -> "Grid1D":
        m = self.mass()
        if m <= 0.0:
            raise ValueError("cannot normalise a zero-mass density")
        return Grid1D(self.x_min, self.x_max, self.n_cells, self.values / m)

    def mean(self) -> float:
        return float(np.sum(self.centers() * self.values) * self.dx)

    def variance(self) -> float:
        mu = self.mean()
        return float(np.sum((self.centers() - mu) ** 2 * self.values) * self.dx)

    def same_geometry(self, other: "Grid1D") -> bool:
        return (
            self.n_cells == other.n_cells
            and math.isclose(self.x_min, other.x_min, rel_tol=0.0, abs_tol=1e-12 * max(1.0, abs(self.x_min)))
            and math.isclose(self.x_max, other.x_max, rel_tol=0.0, abs_tol=1e-12 * max(1.0, abs(self.x_max)))
        )


def delta_density(x_min: float, x_max: float, n_cells: int, x0: float) -> Grid1D:
    """Unit-mass density concentrated at x0, split linearly between two cells."""
    grid = Grid1D(x_min, x_max, n_cells, np.zeros(n_cells))
    dx = grid.dx
    pos = (x0 - x_min) / dx - 0.5
    i = int(np.floor(pos))
    w = pos - i
    values = np.zeros(n_cells)
    if not (-1 <= i <= n_cells - 1):
        raise ValueError(f"x0={x0} outside the grid")
    if i >= 0:
        values[i] += (1.0 - w) / dx
    if i + 1 <= n_cells - 1:
        values[i + 1] += w / dx
    return Grid1D(x_min, x_max, n_cells, values)


def fpe_evolve(kc: KineticCoefficients, grid0: Grid1D, dt: float, t_end: float) -> Grid1D:
    """Advance the density to t_end with the explicit flux-form scheme.

    Raises StabilityError when dt exceeds dx^2 / (2 max k2) and ToolkitError
    when k2 is negative anywhere on the grid.
    """
    if dt <= 0.0 or t_end < 0.0:
        raise ValueError("dt must be > 0 and t_end >= 0")
    centers = grid0.centers()
    faces = grid0.faces()
    k_c = np.asarray(kc.k(centers), dtype=float)
    k_f = np.asarray(kc.k(faces[1:-1]), dtype=float)
    m_f = np.asarray(kc.M(faces[1:-1]), dtype=float)
    if np.any(k_c < 0.0) or np.any(k_f < 0.0):
        raise ToolkitError("k2 is negative on the grid; expansion invalid there")
    k_max = max(float(np.max(k_c)), float(np.max(k_f)) if k_f.size else 0.0)
    dx = grid0.dx
    if k_max > 0.0 and dt > dx * dx / (2.0 * k_max):
        raise StabilityError(
            f"dt={dt:.3e} exceeds the stability bound dx^2/(2 max k2) = "
            f"{dx * dx / (2.0 * k_max):.3e}"
        )

    p = grid0.values.copy()
    n_full, remainder = divmod(t_end, dt)
    steps = [dt] * int(round(n_full))
    if remainder > 1e-12 * dt:
        steps.append(remainder)
    inv_dx = 1.0 / dx
    for h in steps:
        kp = k_c * p
        # interior-face flux: advection by M minus the two-term diffusion split
        j = m_f * 0.5 * (p[:-1] + p[1:]) - 0.25 * (
            k_f * (p[1:] - p[:-1]) * inv_dx + (kp[1:] - kp[:-1]) * inv_dx
        )
        div = np.empty_like(p)
        div[0] = j[0]
        div[-1] = -j[-1]
        div[1:-1] = j[1:] - j[:-1]
        p = p - h * inv_dx * div
    return Grid1D(grid0.x_min, grid0.x_max, grid0.n_cells, p)


def mc_histogram(paths_at_t: np.ndarray, grid_spec) -> Grid1D:
    """Normalised histogram density of terminal samples on the given grid.

    ``grid_spec`` is (x_min, x_max, n_cells) or a Grid1D carrying the
    geometry.  Requires at least 1000 samples and 99.9 % coverage.
    """
    samples = np.asarray(paths_at_t, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples supplied")
    if samples.size < 1000:
        raise ValueError(f"need >= 1000 samples for a stable histogram, got {samples.size}")
    if isinstance(grid_spec, Grid1D):
        x_min, x_max, n_cells = grid_spec.x_min, grid_spec.x_max, grid_spec.n_cells
    else:
        x_min, x_max, n_cells = grid_spec
    inside = (samples >= x_min) & (samples <= x_max)
    coverage = float(np.mean(inside))
    if coverage < 0.999:
        raise CoverageError(
            f"grid [{x_min:.6g}, {x_max:.6g}] covers only {coverage:.4%} of samples "
            f"({int(np.sum(~inside))} of {samples.size} outside)"
        )
    counts, _ = np.histogram(samples[inside], bins=n_cells, range=(x_min, x_max))
    grid = Grid1D(x_min, x_max, n_cells, counts.astype(float))
    return grid.normalized()


def l1_distance(a: Grid1D, b: Grid1D) -> float:
    """Integrated absolute density difference; lies in [0, 2] for unit masses."""
    if not a.same_geometry(b):
        raise GridMismatchError("densities live on different grids")
    return float(np.sum(np.abs(a.values - b.values)) * a.dx)


def grid_from_samples(samples: np.ndarray, n_cells: int, spread_mult: float = 6.0):
    """Grid spec [mean - m*std, mean + m*std] fixed from an MC ensemble."""
    samples = np.asarray(samples, dtype=float)
    mu = float(np.mean(samples))
    sd = float(np.std(samples))
    if sd <= 0.0:
        sd = max(1e-6, 1e-3 * max(1.0, abs(mu)))
    return (mu - spread_mult * sd, mu + spread_mult * sd, n_cells)


@dataclass(frozen=True)
class EquivalenceReport:
    """Pairwise L1 distances between the three routes to the time-t density."""

    grid: tuple[float, float, int]
    coloured: Grid1D
    ito: Grid1D
    fpe: Grid1D
    l1_coloured_ito: float
    l1_coloured_fpe: float
    l1_ito_fpe: float

    @property
    def max_pairwise_l1(self) -> float:
        return max(self.l1_coloured_ito, self.l1_coloured_fpe, self.l1_ito_fpe)


def equivalence_report(
    m: SystemModel,
    p: OUParams,
    x0: float,
    t_end: float = 1.0,
    n_paths: int = 100_000,
    n_cells: int = 400,
    seed: int = 0,
    xi0: float = 0.0,
    fpe_safety: float = 0.5,
) -> EquivalenceReport:
    """Compare coloured MC, equivalent-Ito MC, and the FPE solution at t_end.

    The grid is fixed from the coloured ensemble before any comparison; both
    ensembles reuse the same master seed so path-level noise is shared.
    """
    dt = p.tau_cor / 10.0
    cfg = SimConfig(dt=dt, t_end=t_end, seed=seed, n_paths=n_paths)
    coloured_samples = ensemble_coloured(m, p, xi0, x0, cfg)
    grid_spec = grid_from_samples(coloured_samples, n_cells)

    stats = ou_stats(p)
    ito_samples = ensemble_ito(equivalent_ito(m, stats), x0, cfg)

    h_col = mc_histogram(coloured_samples, grid_spec)
    h_ito = mc_histogram(ito_samples, grid_spec)

    kc = KineticCoefficients(m, stats)
    p0 = delta_density(*grid_spec, x0)
    k_all = np.asarray(kc.k(np.concatenate([p0.centers(), p0.faces()])), dtype=float)
    k_max = float(np.max(k_all))
    dt_fpe = fpe_safety * p0.dx**2 / (2.0 * k_max) if k_max > 0 else t_end
    h_fpe = fpe_evolve(kc, p0, dt_fpe, t_end).normalized()

    return EquivalenceReport(
        grid=grid_spec,
        coloured=h_col,
        ito=h_ito,
        fpe=h_fpe,
        l1_coloured_ito=l1_distance(h_col, h_ito),
        l1_coloured_fpe=l1_distance(h_col, h_fpe),
        l1_ito_fpe=l1_distance(h_ito, h_fpe),
    )


def colour_limit_l1(
    m: SystemModel,
    D: float,
    taus,
    x0: float,
    t_end: float = 1.0,
    n_paths: int = 100_000,
    n_cells: int = 400,
    seed: int = 0,
) -> list[float]:
    """L1(coloured MC, white-noise MC) for each correlation time in ``taus``.

    The white-noise reference uses the same intensity (mu1 = 2D, mu2 = 0) and
    the same per-pair time step and seeds, so differences reflect the colour
    of the noise rather than Monte-Carlo scatter.
    """
    from .noise import ColouredStats

    white = equivalent_ito(m, ColouredStats(2.0 * D, 0.0))
    grid_spec = None
    out = []
    for tau in taus:
        p = OUParams(D=D, tau_cor=tau)
        cfg = SimConfig(dt=tau / 10.0, t_end=t_end, seed=seed, n_paths=n_paths)
        col = ensemble_coloured(m, p, 0.0, x0, cfg)
        wht = ensemble_ito(white, x0, cfg)
        if grid_spec is None:
            grid_spec = grid_from_samples(wht, n_cells)
        out.append(l1_distance(mc_histogram(col, grid_spec), mc_histogram(wht, grid_spec)))
    return out
