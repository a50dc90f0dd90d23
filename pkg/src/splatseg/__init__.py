"""splatseg: instance segmentation of 3D Gaussian scenes.

Lifts multi-view 2D instance masks onto an explicit Gaussian scene by
inverse-projection voting, persists per-primitive labels, and renders
view-consistent instance masks from arbitrary cameras.
"""

from .errors import (
    ConfigError,
    ContractError,
    DataError,
    FormatError,
    SplatsegError,
)
from .geometry import (
    Camera,
    project_covariance,
    project_covariances,
    project_point,
    project_points,
    quaternion_to_rotation,
    world_covariance,
    world_covariances,
)
from .io import (
    load_cameras,
    load_labels,
    load_mask,
    load_scene,
    save_cameras,
    save_labels,
    save_labels_text,
    save_mask,
    save_scene,
)
from .labeling import (
    AggregationConfig,
    VoteHistogram,
    accumulate_view,
    aggregate_labels,
    label_agreement,
)
from .metrics import SegMetrics, compute_metrics
from .rasterize import (
    RasterConfig,
    RenderOutput,
    RenderStats,
    VoteList,
    rasterize,
    render_idx_votes,
    render_instance_mask,
    set_thread_count,
    warmup,
)
from .refine import RefineConfig, refine_assignment_outputs, refine_mask
from .rng import SplitMix64
from .scene import (
    GaussianScene,
    InstanceMask2D,
    LabelAssignment,
    MAX_INSTANCE_ID,
    ViewSet,
    validate_mask,
)
from .synthetic import (
    CorruptionModel,
    SynthSpec,
    corrupt_masks,
    generate_gt_masks,
    generate_orbit,
    generate_scene,
    standard_spec,
    subsample_views,
)
from .experiments import (
    BenchReport,
    PhaseStats,
    RobustnessRow,
    StageAgreementReport,
    bench_pipeline,
    report_json,
    robustness_experiment,
    stage_agreement_experiment,
    write_csv,
)
__version__ = "0.1.0"

__all__ = [
    "AggregationConfig",
    "BenchReport",
    "Camera",
    "ConfigError",
    "ContractError",
    "CorruptionModel",
    "DataError",
    "FormatError",
    "GaussianScene",
    "InstanceMask2D",
    "LabelAssignment",
    "MAX_INSTANCE_ID",
    "PhaseStats",
    "RasterConfig",
    "RefineConfig",
    "RenderOutput",
    "RenderStats",
    "RobustnessRow",
    "SegMetrics",
    "SplatsegError",
    "SplitMix64",
    "StageAgreementReport",
    "SynthSpec",
    "ViewSet",
    "VoteHistogram",
    "VoteList",
    "accumulate_view",
    "aggregate_labels",
    "bench_pipeline",
    "compute_metrics",
    "corrupt_masks",
    "generate_gt_masks",
    "generate_orbit",
    "generate_scene",
    "label_agreement",
    "load_cameras",
    "load_labels",
    "load_mask",
    "load_scene",
    "project_covariance",
    "project_covariances",
    "project_point",
    "project_points",
    "quaternion_to_rotation",
    "rasterize",
    "refine_assignment_outputs",
    "refine_mask",
    "render_idx_votes",
    "render_instance_mask",
    "report_json",
    "robustness_experiment",
    "save_cameras",
    "save_labels",
    "save_labels_text",
    "save_mask",
    "save_scene",
    "set_thread_count",
    "stage_agreement_experiment",
    "standard_spec",
    "subsample_views",
    "validate_mask",
    "warmup",
    "write_csv",
    "world_covariance",
    "world_covariances",
]
