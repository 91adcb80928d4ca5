"""Scalar nonlinear filtering for SDE systems driven by weakly coloured noise.

The toolkit turns a coloured-noise system dx/dt = f(x) + g(x)*xi into its
stochastically equivalent white-noise Ito SDE, runs a second-order
approximate filter against Brownian-noise observations, and validates the
closed-form machinery with simulation and density-PDE oracles.
"""

from .equivalence import (
    EquivalentIto,
    KineticCoefficients,
    SystemModel,
    effective_diffusion,
    effective_drift,
    equivalent_ito,
    fpe_decomposition,
    kinetic_coefficients,
)
from .errors import (
    CoverageError,
    GridMismatchError,
    NonFiniteStateError,
    SingularNoiseError,
    StabilityError,
    ToolkitError,
    UnknownPresetError,
    WeakColourValidityError,
)
from .experiments import (
    ExperimentConfig,
    MetricsReport,
    config_from_dict,
    export_csv,
    preset,
    run_experiment,
)
from .filtering import (
    DuffingParams,
    FilterOptions,
    FilterState,
    ObservationModel,
    duffing_step,
    duffing_system,
    filter_step,
    mean_drift,
    run_filter,
    variance_drift,
    variance_guard,
)
from .fpe import (
    Grid1D,
    colour_limit_l1,
    equivalence_report,
    fpe_evolve,
    grid_from_samples,
    l1_distance,
    mc_histogram,
)
from .jets import (
    Jet4,
    Polynomial,
    SmoothFn,
    constant,
    from_callable,
    ratio_jet,
    validate_jet,
)
from .noise import (
    AutocorrelationFn,
    ColouredStats,
    OUParams,
    ou_autocorrelation,
    ou_stats,
    ou_step,
    stats_from_autocorrelation,
)
from .sim import (
    ColouredPath,
    ObservationSeries,
    Path,
    SimConfig,
    ensemble_coloured,
    ensemble_ito,
    simulate_coloured,
    simulate_ito,
    simulate_observations,
)

__version__ = "0.1.0"
