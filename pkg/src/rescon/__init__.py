"""Attack-resilient data-driven consensus control for nonlinear multi-agent
systems: deterministic discrete-time simulator and library."""

from .charts import render_charts
from .config import (
    LoadResult,
    build_scenario,
    load_config,
    parse_config,
    preset_path,
    save_config,
    serialize_config,
)
from .controller import (
    CompensatedError,
    ControllerGains,
    ObserverState,
    PpjmEstimate,
    baseline_mfac_update,
    control_update,
    default_phi_init,
    dos_compensate,
    gamma_matrix,
    observer_step,
    reset_ppjm,
    spectral_norm,
    update_ppjm,
)
from .engine import (
    ConsensusMetrics,
    DcfdlProbe,
    FaultRecord,
    LeaderSegment,
    Scenario,
    SimTrace,
    ThreatProfile,
    consensus_metrics,
    dcfdl_probe,
    decay_harness,
    leader_value,
    lifted_error_map,
    pairwise_disagreement,
    replay_trace,
    run_scenario,
)
from .errors import (
    BudgetInfeasibleError,
    ConfigError,
    DivergenceFault,
    ResconError,
    SingularityFault,
    TraceError,
)
from .plant import (
    BenchmarkPlant,
    DisturbanceSpec,
    LipschitzProbe,
    PlantParams,
    PlantState,
    disturbance_at,
    lipschitz_probe,
    step_benchmark_plant,
)
from .threat import (
    DosBudget,
    DosSchedule,
    DosValidation,
    FdiSpec,
    apply_attack,
    dos_coefficient,
    fdi_signal,
    generate_dos_schedule,
    validate_dos_schedule,
)
from .topology import (
    LaplacianSet,
    Topology,
    build_laplacian,
    has_spanning_tree,
    neighborhood_error,
)
from .trace import TRACE_COLUMNS, read_trace, write_trace

__version__ = "0.1.0"
