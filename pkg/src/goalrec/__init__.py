"""Goal recognition toolkit: symbolic cost-based recognizers, a from-scratch
feed-forward classifier, dataset generators, and a benchmark harness for
navigation grids and desk-scale STRIPS task domains."""

from .data import (
    ActionVocab,
    PlacementError,
    RecognitionProblem,
    encode_coords,
    encode_onehot,
    generate_nav_problems,
    generate_task_problems,
    ingest_external,
    read_problems_jsonl,
    split_problems,
    truncate,
    write_problems_jsonl,
)
from .grid import Cell, GridMap, MapFormatError, downscale, parse_movingai, random_map
from .harness import (
    ExperimentSpec,
    ResultRow,
    emit_plots,
    evaluate,
    results_csv,
    run_navigation,
    run_tasks,
    timing_report,
    write_run_artifacts,
)
from .mlp import (
    AdamState,
    MlpGoalClassifier,
    MlpModel,
    TrainConfig,
    adam_step,
    backward,
    cross_entropy,
    forward,
    init_model,
    load_model,
    predict_goal,
    save_model,
    train,
)
from .recognizers import (
    AllZeroEvidenceError,
    CostMapRecognizer,
    PlanCostRecognizer,
    compliance_delta,
    compliance_delta_strips,
    cost_map_delta,
    likelihood,
    posterior,
)
from .search import (
    CostField,
    NoCompliantPlanError,
    NoiseParams,
    NoPathError,
    Path,
    astar,
    compliant_cost,
    cost_field,
    noisy_astar,
    noncompliant_cost,
)
from .strips import (
    GroundAction,
    PddlParseError,
    PlannerTimeout,
    StripsProblem,
    UnsolvableError,
    compliant_plan_cost,
    hmax,
    noncompliant_plan_cost,
    parse_pddl,
    plan,
    plan_cost,
)

__version__ = "0.1.0"
