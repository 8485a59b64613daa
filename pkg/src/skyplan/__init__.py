"""skyplan: beam coverage maps, UAV placement, and co-inference planning."""

__version__ = "0.1.0"

from .channel import (
    BeamPattern,
    ChannelModel,
    Position3D,
    beam_gain,
    default_beams,
    fspl,
    los_rsrp,
    rate_from_sinr,
)
from .coinference import (
    ExecutionPlan,
    InferenceModelProfile,
    LinkProfile,
    Paradigm,
    PlanMode,
    QosBudget,
    brute_force_plan,
    compare_paradigms,
    delay_of,
    energy_of,
    optimize_plan,
    quality_of,
)
from .coverage_map import (
    BlockageRect,
    CoverageMap,
    SynthesisConfig,
    load_map,
    sample_rsrp,
    save_map,
    sinr_at,
    synthesize,
)
from .errors import (
    ConfigError,
    ConstraintViolationError,
    DomainError,
    EvaluationError,
    GatewayError,
    MapFormatError,
    SizeError,
    SkyplanError,
)
from .llm_gateway import GatewayConfig, PlacementPrompt, build_prompt, request_placement
from .pipeline import (
    AdaptationConfig,
    InferenceTask,
    ScenarioConfig,
    ScenarioReport,
    run_scenario,
    write_report,
)
from .placement import (
    Method,
    PlacementProblem,
    PlacementSolution,
    SearchConfig,
    brute_force_placement,
    evaluate_on_map,
    llm_placement,
    los_grid_init,
    map_search_placement,
    sca_los_placement,
)
