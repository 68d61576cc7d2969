"""bqlab: a pseudospectral laboratory for the cubic Boussinesq equation.

Periodic pseudospectral discretisation of

    u_tt - u_xx + u_xxxx -+ (|u|^2 u)_xx = 0

with exact linear propagators, an integrating-factor RK4 stepper, a Picard
fixed-point local solver, frequency-truncation ("smoothed") energies, and
discrete space-time norm probes for the product estimates that drive the
almost-conservation experiments.
"""

__version__ = "0.1.0"

from .errors import (
    ContractionFailureError,
    DivergenceError,
    EnergyDoublingError,
    GridMismatchError,
    LabError,
    NumericalError,
    PreconditionError,
    SlopeFitError,
    UndefinedRatioError,
)
from .spectral import (
    Grid1D,
    Multiplier,
    SpectralField,
    apply_multiplier,
    bracket,
    dealiased_cubic,
    dispersion_relation,
    forward_transform,
    inverse_transform,
    lebesgue_norm,
    l2_inner,
    sobolev_norm,
)
from .propagators import (
    PropagatorCache,
    WaveState,
    apply_cosine_propagator,
    apply_sine_propagator,
    diagonalize,
    from_halfwaves,
    linear_evolve,
    linear_scaled_velocity,
    quadratic_energy,
)
from .imethod import (
    EnergyReport,
    ISpec,
    acl_commutator,
    acl_residual,
    apply_I,
    energy,
    increment,
    modified_energy,
    smoothing_bounds,
)
from .solver import (
    SolverConfig,
    Trajectory,
    evolve,
    local_delta,
    nonlinear_rhs,
    picard_solve,
    step,
)
from .bourgain import (
    DyadicPiece,
    SpaceTimeField,
    band_projection,
    bilinear_gain_sweep,
    bilinear_ratio,
    cubic_bound_ratio,
    decompose_pm,
    free_evolution,
    halfderiv_bilinear_ratio,
    linear_bound_ratio,
    middle_lp_norm,
    recommended_time_samples,
    strichartz_ratio,
    time_window,
    xsb_norm,
)
from .synthesis import cell_rng, data_pair, gaussian_packet, rough_field

__all__ = [name for name in dir() if not name.startswith("_")]
