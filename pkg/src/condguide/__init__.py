"""Multi-condition guidance inputs for character animation pipelines.

Deterministic computation of the condition maps a pose-driven video
generator consumes (skeletal dilation masks, background optical-flow
guidance, depth-order maps, reference pose maps), overlap-window planning
for long clips, dataset noise analytics, and the evaluation metric core.
"""

from .analytics import (
    OCCLUSION_QUARTILE_EDGES,
    STABLE_FLOW_THRESHOLD,
    Histogram,
    classify_background_motion,
    frame_occlusion_rate,
    histogram,
    video_background_flow_mean,
    video_occlusion_rate,
)
from .depth_order import (
    CharacterRank,
    DepthOrderMap,
    compose_order_map,
    compute_reference_ranks,
    depth_order_inference,
    depth_order_training,
    non_intersection_regions,
    rank_by_depth,
)
from .dilation import (
    DilationParams,
    frame_character_mask,
    frame_dilation_maps,
    skeletal_dilation,
)
from .errors import (
    ArgumentError,
    CondGuideError,
    DegenerateCharacterWarning,
    DegenerateRegionError,
    FormatError,
    IdentityMismatchError,
    MetricError,
    PoseParseError,
    ShapeError,
    ShortClipWarning,
    UndefinedStatisticError,
    WindowGenerationError,
)
from .flow import (
    SENTINEL,
    BlockMatchParams,
    FlowGuidanceMap,
    background_flow_mean,
    estimate_flow_blockmatch,
    flow_guidance_inference,
    flow_guidance_training,
)
from .metrics import (
    METRIC_WINDOW,
    FeatureSet,
    MetricReport,
    SsimParams,
    frechet_distance,
    l1_error,
    psnr,
    ssim,
    standardize,
    video_windows_for_metrics,
)
from .pose import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    CharacterPose,
    PoseFrame,
    PoseSequence,
    RenderParams,
    SkeletonTopology,
    default_topology,
    parse_pose_sequence,
    reference_pose_map,
    render_pose_map,
    serialize_pose_sequence,
)
from .raster import (
    BinaryMask,
    ClipMeta,
    DepthConvention,
    DepthRaster,
    FlowField,
    Raster,
    mask_area,
    mask_complement,
    mask_intersection,
    mask_union,
    raster_hadamard,
)
from .scheduler import (
    DEFAULT_STRIDE,
    DEFAULT_WINDOW,
    Window,
    WindowPlan,
    blend_windows,
    plan_windows,
    run_windowed,
)

__version__ = "0.1.0"
