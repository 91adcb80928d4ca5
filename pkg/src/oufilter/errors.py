"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all toolkit-specific errors."""


class SingularNoiseError(ToolkitError):
    """Noise coefficient g(x) is (numerically) zero at an evaluation point.

    The coloured-to-white equivalence expansion divides by g; a zero
    crossing means the expansion is undefined there.
    """


class WeakColourValidityError(ToolkitError):
    """The effective diffusion radicand went negative.

    Signals that the correlation time is too large for the first-order
    colour expansion at the reported state.
    """


class StabilityError(ToolkitError):
    """A time step violates an explicit-scheme stability constraint."""


class NonFiniteStateError(ToolkitError):
    """A simulated or filtered state stopped being finite."""


class GridMismatchError(ToolkitError):
    """Two densities live on different grids."""


class CoverageError(ToolkitError):
    """Samples fall outside the histogram grid beyond the allowed fraction."""


class UnknownPresetError(ToolkitError):
    """Requested experiment preset id does not exist."""
