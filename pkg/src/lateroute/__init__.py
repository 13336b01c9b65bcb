"""Short-term transit route improvement toolkit.

Learns per-road-segment lateness from smart-card and GTFS data, weighs a
directed road graph with predicted lateness per time of day, and proposes
fixed-stop-order route changes ranked by predicted improvement for a human
planner to review.
"""

from .ingest import (
    BoardingRecord,
    GtfsBundle,
    LatenessSample,
    PoiSet,
    Timestamp,
    clean_boardings,
    join_lateness,
    parse_gtfs,
    parse_pois,
    parse_smartcard,
)
from .labeling import Dataset, EdgeLabel, build_dataset, segment_labels
from .model import (
    LatenessModel,
    ModelConfig,
    TrainReport,
    embedding_coords,
    gradient_check,
    predict,
    pretrain_autoencoder,
    train_regressor,
)
from .network import (
    RoadNetwork,
    SegmentAttributes,
    TimePeriod,
    assign_attributes,
    build_graph,
    period_of,
    project_stops,
)
from .optimizer import (
    RouteSuggestion,
    WeightedGraph,
    optimal_stop_order,
    rank_routes,
    shortest_path,
    suggest_route,
    weigh_graph,
    whatif_remove_stop,
)
from .synth import SynthSpec, brute_force_route, generate

__version__ = "0.1.0"

__all__ = [
    "BoardingRecord",
    "Dataset",
    "EdgeLabel",
    "GtfsBundle",
    "LatenessModel",
    "LatenessSample",
    "ModelConfig",
    "PoiSet",
    "RoadNetwork",
    "RouteSuggestion",
    "SegmentAttributes",
    "SynthSpec",
    "TimePeriod",
    "Timestamp",
    "TrainReport",
    "WeightedGraph",
    "assign_attributes",
    "brute_force_route",
    "build_dataset",
    "build_graph",
    "clean_boardings",
    "embedding_coords",
    "generate",
    "gradient_check",
    "join_lateness",
    "optimal_stop_order",
    "parse_gtfs",
    "parse_pois",
    "parse_smartcard",
    "period_of",
    "predict",
    "pretrain_autoencoder",
    "project_stops",
    "rank_routes",
    "segment_labels",
    "shortest_path",
    "suggest_route",
    "train_regressor",
    "weigh_graph",
    "whatif_remove_stop",
]
