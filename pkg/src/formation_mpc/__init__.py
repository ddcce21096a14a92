"""Multi-agent formation tracking under communication-link faults:
adaptive distributed observers plus per-agent Lyapunov-constrained MPC."""

from .engine import Scenario, SimLog, formation_error, run, theorem2_report
from .exceptions import (
    ConfigurationError,
    EngineError,
    FormationMpcError,
    NumericDomainError,
    ScenarioError,
    SingularGainError,
    TopologyError,
)
from .graph import (
    FaultProfile,
    FaultSpec,
    GraphDiagnostics,
    GraphSpec,
    effective_weights,
    gain_condition_report,
    laplacian_pinned,
    p_matrix,
    q_matrix,
    validate_topology,
)
from .models import (
    ExampleSystem,
    FollowerModel,
    FormationSpec,
    LeaderModel,
    builtin_example1,
    builtin_example2,
    builtin_system,
    follower_derivative,
    leader_derivative,
    rk4_step,
)
from .mpc import (
    AgentController,
    ControlProfile,
    MpcSetup,
    SlidingParams,
    SolveInfo,
    StateRegion,
    autotune_chi_lower,
    autotune_k_s,
    fallback_control,
    fallback_profile,
    horizon_cost,
    predict,
    project_box_halfspace,
    receding_horizon_step,
    saturate,
    sliding_surface,
    solve_ocp,
    stability_constraint_lhs,
)
from .observers import (
    EstimationErrors,
    LocalErrors,
    NeighborEstimate,
    NeighborhoodSnapshot,
    ObserverState,
    global_estimation_errors,
    local_errors,
    observer_derivative,
    stacked_local_errors,
    vec,
)
from .scenario import (
    BUNDLED_SCENARIOS,
    bundled_document_path,
    document_to_scenario,
    documents_equivalent,
    load_document,
    load_scenario,
    save_document,
)

__version__ = "0.1.0"
