"""Online parameter estimation with extended-regressor mixing and excitation analysis."""

__version__ = "0.1.0"

from .errors import IntegrationDivergedError, ScenarioValidationError
from .signals import (
    Constant,
    PiecewiseZeroed,
    RegressorSignal,
    Sinusoidal,
    Tabulated,
    TimeGrid,
    eval_measurement,
    eval_regressor,
    load_tabulated_csv,
)
from .integrate import Integrator, advance
from .filters import (
    ElreTrajectory,
    ExtendedRegressorState,
    KreisselmeierFilter,
    LtiFilterBank,
    run_elre,
    step_kre,
    step_lti,
    zero_state,
)
from .mixing import (
    MixedRegression,
    RankCheck,
    adjugate,
    determinant,
    gram_determinant,
    mix_square,
    mix_tall,
    rank_check,
)
from .estimators import (
    DremEstimatorState,
    ElreGradientEstimatorState,
    GradientEstimatorState,
    closed_form_drem_error,
    step_drem,
    step_elre_gradient,
    step_gradient,
)
from .excitation import (
    DeltaNAnalysis,
    DistinguishabilityCheck,
    ExcitationReport,
    GramWindow,
    IeVerdict,
    KklCheck,
    PeVerdict,
    SweepResult,
    analyze_delta_n,
    backward_distinguishability_check,
    check_ie,
    check_pe,
    detect_generalized_pe,
    gram_integral,
    kkl_mapping_check,
    sweep_poles,
)
from .scenario import (
    RunManifest,
    Scenario,
    SimulationResult,
    builtin_scenario,
    parse_scenario,
    reproduce,
    run_scenario,
    simulate_scenario,
)

__all__ = [name for name in dir() if not name.startswith("_")]
