"""Polar-decomposition variational integrators on SO(n)."""
from .errors import (
    DimensionError,
    IllConditioned,
    NearSingular,
    NegativeDeterminant,
    NoConvergence,
    PolarVIError,
    PoleSingularity,
    SingularInput,
    ZeroWeight,
)
from .harness import (
    ErrorReport,
    Scenario,
    bench,
    load_scenario,
    make_reference,
    run_energy_drift,
    run_order_study,
    run_scenario,
    trajectory_error,
)
from .integrators import (
    CotangentState,
    ReducedState,
    StageCache,
    Trajectory,
    integrate,
    legendre_convert,
    lie_poisson_step,
    make_stepper,
    vpd_residuals,
    vpd_step,
)
from .linalg import (
    PolarFactors,
    asym,
    hat,
    lyap_spd,
    orthogonality_error,
    polar_decompose,
    polar_fixes_identity,
    polar_project,
    skew_inner,
    skew_norm,
    sylvester_rot,
    vee,
)
from .systems import (
    DipoleParams,
    LeftTrivHamiltonian,
    ReducedHamiltonian,
    dipole,
    dipole_energy,
    dipole_initial_state,
    rigid_body,
    rigid_body_reduced,
)
from .tableaux import ButcherTableau, builtin, sprk_partner, sprk_step
from .tangent import FixedPointConfig, StageGeometry, chain_solve, dpol, dpol_star

__version__ = "0.1.0"
