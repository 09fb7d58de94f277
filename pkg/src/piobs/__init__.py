"""Proportional-integral observers for discrete-time LTI systems.

Design (existence test plus constructive gain synthesis), independent
verification, and co-simulation of plant and observer.
"""

from .analysis import (
    DetectabilityVerdict,
    EigClassification,
    KalmanDecomposition,
    StabilityVerdict,
    classify_eigenvalues,
    is_detectable,
    is_observable,
    is_schur_stable,
    kalman_decompose,
    observability_matrix,
    observable_dimension,
    pbh_rank_at,
)
from .design import (
    DesignConfig,
    PiObserver,
    VerificationReport,
    augmented_matrix,
    coupling_matrix,
    default_target_poles,
    design_pi_observer,
    place_poles,
    place_stabilizing_gain,
    stabilization_plan,
    verify_design,
)
from .errors import (
    DimensionError,
    InputError,
    NotDetectableError,
    NotObservableError,
    NumericalError,
    PiobsError,
    RankDeficiencyError,
    SimulationDivergenceError,
    SingularMatrixError,
)
from .sim import (
    ConstantInput,
    RandomInput,
    SimulationConfig,
    SimulationTrace,
    StepInput,
    ZeroInput,
    error_dynamics_check,
    fit_decay_rate,
    run_simulation,
    step_observer,
    step_plant,
)
from .systems import SystemRealization
from ._kernels import active_backend

__version__ = "0.1.0"

__all__ = [
    "ConstantInput",
    "DesignConfig",
    "DetectabilityVerdict",
    "DimensionError",
    "EigClassification",
    "InputError",
    "KalmanDecomposition",
    "NotDetectableError",
    "NotObservableError",
    "NumericalError",
    "PiObserver",
    "PiobsError",
    "RandomInput",
    "RankDeficiencyError",
    "SimulationConfig",
    "SimulationDivergenceError",
    "SimulationTrace",
    "SingularMatrixError",
    "StabilityVerdict",
    "StepInput",
    "SystemRealization",
    "VerificationReport",
    "ZeroInput",
    "active_backend",
    "augmented_matrix",
    "classify_eigenvalues",
    "coupling_matrix",
    "default_target_poles",
    "design_pi_observer",
    "error_dynamics_check",
    "fit_decay_rate",
    "is_detectable",
    "is_observable",
    "is_schur_stable",
    "kalman_decompose",
    "observability_matrix",
    "observable_dimension",
    "pbh_rank_at",
    "place_poles",
    "place_stabilizing_gain",
    "run_simulation",
    "stabilization_plan",
    "step_observer",
    "step_plant",
    "verify_design",
]
