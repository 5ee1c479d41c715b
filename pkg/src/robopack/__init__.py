"""Online robot-packable 3D bin packing: heightmap simulation, heuristic and
learned policies, synthetic perfectly-packable datasets, and a benchmark
harness with competitive-ratio reporting."""

from .bench import (
    EpisodeResult,
    OraclePolicy,
    PackManPolicy,
    aggregate,
    build_report,
    column_policy,
    competitive_ratio,
    first_fit_policy,
    floor_policy,
    run_episode,
    walle_policy,
)
from .candidates import Candidate, corner_candidates
from .datagen import (
    BoxStream,
    EpisodeSpec,
    generate_episode,
    load_stream,
    oracle_placements,
    save_stream,
    small_box_episode,
    validate_stream,
)
from .deeprl import (
    ReplayBuffer,
    RunningBaseline,
    TrainerConfig,
    Transition,
    ValueNet,
    episode_rewards,
    forward,
    load_model,
    q_target,
    run_training,
    save_model,
    select_action,
    train_step,
)
from .encoder import EncodedInput, FieldPartition, GlobalView, encode_placement
from .errors import (
    CapacityExhausted,
    CorruptModel,
    PlacementError,
    RobopackError,
    TrainingDiverged,
)
from .grid import (
    ASIS,
    ROT90,
    BoxDims,
    ContainerState,
    MultiBinState,
    Placement,
    PlacedBox,
    apply_placement,
    fill_first,
    fill_fraction,
    is_feasible,
    new_container,
    open_next_bin,
    place,
    placed_volume,
)
from .heuristics import (
    Decision,
    WallEParams,
    column_build,
    first_fit,
    floor_build,
    walle_decide,
    walle_score,
)

__version__ = "1.0.0"

__all__ = [
    "ASIS",
    "ROT90",
    "BoxDims",
    "BoxStream",
    "Candidate",
    "CapacityExhausted",
    "ContainerState",
    "CorruptModel",
    "Decision",
    "EncodedInput",
    "EpisodeResult",
    "EpisodeSpec",
    "FieldPartition",
    "GlobalView",
    "MultiBinState",
    "OraclePolicy",
    "PackManPolicy",
    "PlacedBox",
    "Placement",
    "PlacementError",
    "ReplayBuffer",
    "RobopackError",
    "RunningBaseline",
    "TrainerConfig",
    "Transition",
    "ValueNet",
    "WallEParams",
    "aggregate",
    "apply_placement",
    "build_report",
    "column_build",
    "column_policy",
    "competitive_ratio",
    "corner_candidates",
    "encode_placement",
    "episode_rewards",
    "fill_first",
    "fill_fraction",
    "first_fit",
    "first_fit_policy",
    "floor_build",
    "floor_policy",
    "forward",
    "generate_episode",
    "is_feasible",
    "load_model",
    "load_stream",
    "new_container",
    "open_next_bin",
    "oracle_placements",
    "place",
    "placed_volume",
    "q_target",
    "run_episode",
    "run_training",
    "save_model",
    "save_stream",
    "select_action",
    "small_box_episode",
    "train_step",
    "validate_stream",
    "walle_decide",
    "walle_policy",
    "walle_score",
]
