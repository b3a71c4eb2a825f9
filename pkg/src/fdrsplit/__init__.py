"""Split-resampled FDR screening with a tail-adjusted uniform-beta mixture."""

from .association import (
    AssocGraph,
    GraphEdge,
    GraphNode,
    build_graph,
    conditional_detection_prob,
    export_graph,
    load_graph_json,
)
from .bh import BhRow, bh_adjust, bh_detect, bh_table, two_sided_p_from_lta
from .fileio import (
    InputError,
    load_dataset,
    load_run_json,
    read_run_json,
    run_to_json,
    write_run_json,
)
from .mixture import (
    AdjustedMixture,
    MixtureFit,
    eval_cdf,
    eval_pdf,
    eval_upper_cdf,
    fit_uniform_beta,
    tail_adjust,
)
from .power import (
    FrequencyThreshold,
    PowerCurvePoint,
    PowerReport,
    combine_rejections,
    critical_frequency,
    power_curves,
    power_metrics,
    region_bounds,
    select_discoveries,
)
from .resampler import (
    FreqRow,
    FrequencyTable,
    RunConfig,
    RunResult,
    SplitPlan,
    SplitRecord,
    detection_frequencies,
    run_pipeline,
    split_subjects,
)
from .screening import (
    Region,
    ScreenMode,
    ScreenTool,
    SplitDetections,
    rejection_boundary,
    screen_split,
)
from .simgen import SimSpec, generate
from .stats import Dataset, nb_lr_batch, t_lta_batch

__version__ = "0.1.0"

__all__ = [
    "AdjustedMixture",
    "AssocGraph",
    "BhRow",
    "Dataset",
    "FreqRow",
    "FrequencyTable",
    "FrequencyThreshold",
    "GraphEdge",
    "GraphNode",
    "InputError",
    "MixtureFit",
    "PowerCurvePoint",
    "PowerReport",
    "Region",
    "RunConfig",
    "RunResult",
    "ScreenMode",
    "ScreenTool",
    "SimSpec",
    "SplitDetections",
    "SplitPlan",
    "SplitRecord",
    "bh_adjust",
    "bh_detect",
    "bh_table",
    "build_graph",
    "combine_rejections",
    "conditional_detection_prob",
    "critical_frequency",
    "detection_frequencies",
    "eval_cdf",
    "eval_pdf",
    "eval_upper_cdf",
    "export_graph",
    "fit_uniform_beta",
    "generate",
    "load_dataset",
    "load_graph_json",
    "load_run_json",
    "nb_lr_batch",
    "power_curves",
    "power_metrics",
    "read_run_json",
    "region_bounds",
    "rejection_boundary",
    "run_pipeline",
    "run_to_json",
    "screen_split",
    "select_discoveries",
    "split_subjects",
    "t_lta_batch",
    "tail_adjust",
    "two_sided_p_from_lta",
    "write_run_json",
]
