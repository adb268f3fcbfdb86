"""Array-first facade over condguide.

Every function here validates plain numpy arrays (float32 rasters and
features, uint8 masks), converts them to condguide's domain types, calls
the library, and converts results back to writable arrays. No algorithm
logic lives on this side: outputs are bit-identical to the primary
implementation by construction.

Shape/dtype contracts:
    rasters    (H, W, C) float32        masks     (H, W) uint8 of 0/1
    keypoints  (J, 3) float32 x,y,conf  characters (N, J, 3) float32
    features   (N, d) float32           reference ranks (R, 3) float64
                                        rows: character_id, rank, level

Violations raise the condguide error taxonomy (ArgumentError, ShapeError,
MetricError, ...), never crash.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

import condguide as _cg
from condguide.errors import (  # re-exported: the binding shares the taxonomy
    ArgumentError,
    CondGuideError,
    DegenerateRegionError,
    IdentityMismatchError,
    MetricError,
    ShapeError,
)

__all__ = [
    "skeletal_dilation",
    "render_pose_map",
    "flow_guidance_training",
    "flow_guidance_inference",
    "depth_order_training",
    "depth_order_inference",
    "ranks_to_array",
    "plan_windows",
    "blend_windows",
    "frechet_distance",
    "ssim",
    "psnr",
    "l1_error",
    "ArgumentError",
    "CondGuideError",
    "DegenerateRegionError",
    "IdentityMismatchError",
    "MetricError",
    "ShapeError",
]

__version__ = "0.1.0"

_CONVENTIONS = {
    "larger-closer": _cg.DepthConvention.LARGER_IS_CLOSER,
    "smaller-closer": _cg.DepthConvention.SMALLER_IS_CLOSER,
}


def _require(arr, dtype, ndim, what) -> np.ndarray:
    got = np.asarray(arr)
    if got.dtype != np.dtype(dtype):
        raise ArgumentError(f"{what} must be {np.dtype(dtype).name}, got {got.dtype}")
    if got.ndim != ndim:
        raise ShapeError(f"{what} must be {ndim}-dimensional, got shape {got.shape}")
    return np.ascontiguousarray(got)


def _out(arr: np.ndarray) -> np.ndarray:
    return np.array(arr, copy=True)


def _mask_in(mask, what="mask") -> _cg.BinaryMask:
    return _cg.BinaryMask(_require(mask, np.uint8, 2, what))


def _raster_in(data, what="raster") -> _cg.Raster:
    return _cg.Raster(_require(data, np.float32, 3, what))


def _dilation_params(
    confidence_threshold, line_thickness_512, joint_radius_512, rho_relative, rho_floor_px
) -> _cg.DilationParams:
    return _cg.DilationParams(
        confidence_threshold=float(confidence_threshold),
        line_thickness_512=float(line_thickness_512),
        joint_radius_512=float(joint_radius_512),
        rho_relative=float(rho_relative),
        rho_floor_px=float(rho_floor_px),
    )


def _topology(joint_count, edges, joint_colors, edge_colors) -> _cg.SkeletonTopology:
    default = _cg.default_topology()
    if edges is None:
        if joint_count != default.joint_count:
            raise ArgumentError(
                f"edges omitted: keypoints must have the default "
                f"{default.joint_count} joints, got {joint_count}"
            )
        return default
    edges = _require(edges, np.int64, 2, "edges")
    if edges.shape[1] != 2:
        raise ShapeError(f"edges must be (E, 2), got {edges.shape}")
    edge_list = tuple((int(a), int(b)) for a, b in edges)
    if joint_colors is None:
        joint_colors = tuple((0, 0, 0) for _ in range(joint_count))
    else:
        jc = _require(joint_colors, np.uint8, 2, "joint_colors")
        joint_colors = tuple(tuple(int(v) for v in row) for row in jc)
    if edge_colors is None:
        edge_colors = tuple((0, 0, 0) for _ in edge_list)
    else:
        ec = _require(edge_colors, np.uint8, 2, "edge_colors")
        edge_colors = tuple(tuple(int(v) for v in row) for row in ec)
    return _cg.SkeletonTopology(
        joint_count=joint_count,
        edges=edge_list,
        joint_names=tuple(f"j{i}" for i in range(joint_count)),
        joint_colors=joint_colors,
        edge_colors=edge_colors,
    )


def _characters_in(characters, character_ids) -> list[_cg.CharacterPose]:
    chars = _require(characters, np.float32, 3, "characters")
    if chars.shape[2] != 3:
        raise ShapeError(f"characters must be (N, J, 3), got {chars.shape}")
    n = chars.shape[0]
    if character_ids is None:
        ids = list(range(n))
    else:
        ids = [int(i) for i in np.asarray(character_ids).reshape(-1)]
        if len(ids) != n:
            raise ArgumentError(f"{len(ids)} character ids for {n} characters")
    return [
        _cg.CharacterPose(character_id=cid, keypoints=chars[i])
        for i, cid in enumerate(ids)
    ]


def _frame(characters, character_ids, width, height) -> _cg.PoseFrame:
    return _cg.PoseFrame(
        characters=tuple(_characters_in(characters, character_ids)),
        width=int(width),
        height=int(height),
    )


def skeletal_dilation(
    keypoints,
    width,
    height,
    *,
    edges=None,
    confidence_threshold=0.3,
    line_thickness_512=4.0,
    joint_radius_512=4.0,
    rho_relative=0.06,
    rho_floor_px=3.0,
) -> np.ndarray:
    """(J, 3) float32 keypoints -> (H, W) uint8 dilation mask."""
    kp = _require(keypoints, np.float32, 2, "keypoints")
    if kp.shape[1] != 3:
        raise ShapeError(f"keypoints must be (J, 3), got {kp.shape}")
    topo = _topology(kp.shape[0], edges, None, None)
    mask = _cg.skeletal_dilation(
        _cg.CharacterPose(character_id=0, keypoints=kp),
        topo,
        width=int(width),
        height=int(height),
        params=_dilation_params(
            confidence_threshold, line_thickness_512, joint_radius_512,
            rho_relative, rho_floor_px,
        ),
    )
    return _out(mask.plane())


def render_pose_map(
    characters,
    width,
    height,
    *,
    character_ids=None,
    edges=None,
    joint_colors=None,
    edge_colors=None,
    confidence_threshold=0.3,
    line_thickness_512=4.0,
    joint_radius_512=4.0,
) -> np.ndarray:
    """(N, J, 3) float32 characters -> (H, W, 3) float32 RGB pose map."""
    chars = _require(characters, np.float32, 3, "characters")
    topo = _topology(chars.shape[1], edges, joint_colors, edge_colors)
    frame = _frame(chars, character_ids, width, height)
    out = _cg.render_pose_map(
        frame,
        topo,
        _cg.RenderParams(
            confidence_threshold=float(confidence_threshold),
            line_thickness_512=float(line_thickness_512),
            joint_radius_512=float(joint_radius_512),
        ),
    )
    return _out(out.data)


def flow_guidance_training(flow, mask) -> tuple[np.ndarray, np.ndarray]:
    """(H, W, 2) float32 flow + (H, W) uint8 mask -> (values, mask) arrays."""
    f = _require(flow, np.float32, 3, "flow")
    if f.shape[2] != 2:
        raise ShapeError(f"flow must be (H, W, 2), got {f.shape}")
    gmap = _cg.flow_guidance_training(_cg.FlowField(f), _mask_in(mask))
    return _out(gmap.values.data), _out(gmap.mask.plane())


def flow_guidance_inference(mask) -> tuple[np.ndarray, np.ndarray]:
    """(H, W) uint8 mask -> zero-momentum (values, mask) arrays."""
    gmap = _cg.flow_guidance_inference(_mask_in(mask))
    return _out(gmap.values.data), _out(gmap.mask.plane())


def depth_order_training(
    characters,
    depth,
    width,
    height,
    *,
    character_ids=None,
    convention="larger-closer",
    edges=None,
    on_empty_region="error",
    confidence_threshold=0.3,
    line_thickness_512=4.0,
    joint_radius_512=4.0,
    rho_relative=0.06,
    rho_floor_px=3.0,
) -> np.ndarray:
    """(N, J, 3) characters + (H, W) float32 depth -> (H, W) float32 order map."""
    if convention not in _CONVENTIONS:
        raise ArgumentError(f"unknown convention {convention!r}")
    chars = _require(characters, np.float32, 3, "characters")
    d = _require(depth, np.float32, 2, "depth")
    topo = _topology(chars.shape[1], edges, None, None)
    out = _cg.depth_order_training(
        _frame(chars, character_ids, width, height),
        _cg.DepthRaster(d, convention=_CONVENTIONS[convention]),
        topo,
        _dilation_params(
            confidence_threshold, line_thickness_512, joint_radius_512,
            rho_relative, rho_floor_px,
        ),
        on_empty_region,
    )
    return _out(out.plane())


def depth_order_inference(
    reference_ranks,
    characters,
    width,
    height,
    *,
    character_ids=None,
    edges=None,
    confidence_threshold=0.3,
    line_thickness_512=4.0,
    joint_radius_512=4.0,
    rho_relative=0.06,
    rho_floor_px=3.0,
) -> np.ndarray:
    """Paint a frame with fixed reference levels.

    reference_ranks: (R, 3) float64 rows of (character_id, rank, level_value),
    as produced by ranks_to_array.
    """
    ref = _require(reference_ranks, np.float64, 2, "reference_ranks")
    if ref.shape[1] != 3:
        raise ShapeError(f"reference_ranks must be (R, 3), got {ref.shape}")
    ranks = [
        _cg.CharacterRank(
            character_id=int(row[0]),
            mean_depth=float("nan"),
            rank=int(row[1]),
            level_value=float(row[2]),
        )
        for row in ref
    ]
    chars = _require(characters, np.float32, 3, "characters")
    topo = _topology(chars.shape[1], edges, None, None)
    out = _cg.depth_order_inference(
        ranks,
        _frame(chars, character_ids, width, height),
        topo,
        _dilation_params(
            confidence_threshold, line_thickness_512, joint_radius_512,
            rho_relative, rho_floor_px,
        ),
    )
    return _out(out.plane())


def ranks_to_array(ranks: Sequence[_cg.CharacterRank]) -> np.ndarray:
    """condguide CharacterRank list -> (R, 3) float64 reference-ranks array."""
    return np.array(
        [[r.character_id, r.rank, r.level_value] for r in ranks], dtype=np.float64
    ).reshape(-1, 3)


def plan_windows(total, window=16, stride=8) -> tuple[np.ndarray, np.ndarray]:
    """-> ((K, 2) int64 start/length rows, (total,) int64 coverage)."""
    plan = _cg.plan_windows(int(total), int(window), int(stride))
    windows = np.array([[w.start, w.length] for w in plan.windows], dtype=np.int64)
    coverage = np.asarray(plan.coverage, dtype=np.int64)
    return windows, coverage


def blend_windows(windows, window_outputs, total) -> np.ndarray:
    """(K, 2) int64 windows + per-window (L, H, W, C) float32 stacks -> (total, H, W, C)."""
    win = _require(windows, np.int64, 2, "windows")
    if win.shape[1] != 2:
        raise ShapeError(f"windows must be (K, 2), got {win.shape}")
    total = int(total)
    plan_windows_t = tuple(_cg.Window(int(s), int(l)) for s, l in win)
    coverage = np.zeros(total, dtype=np.int64)
    for w in plan_windows_t:
        coverage[w.start : w.stop] += 1
    plan = _cg.WindowPlan(
        total=total, windows=plan_windows_t, coverage=tuple(int(c) for c in coverage)
    )
    outputs = []
    for k, stack in enumerate(window_outputs):
        arr = _require(stack, np.float32, 4, f"window_outputs[{k}]")
        outputs.append([_cg.Raster(arr[t]) for t in range(arr.shape[0])])
    blended = _cg.blend_windows(plan, outputs)
    return np.stack([f.data for f in blended], axis=0)


def frechet_distance(real, gen, eps=1e-6) -> float:
    """(N, d) and (M, d) float32 feature arrays -> Fréchet distance."""
    r = _require(real, np.float32, 2, "real features")
    g = _require(gen, np.float32, 2, "generated features")
    return _cg.frechet_distance(
        _cg.FeatureSet(r, source="arrays:real"),
        _cg.FeatureSet(g, source="arrays:gen"),
        eps=eps,
    )


def ssim(a, b) -> float:
    return _cg.ssim(_raster_in(a, "a"), _raster_in(b, "b"))


def psnr(a, b) -> float:
    return _cg.psnr(_raster_in(a, "a"), _raster_in(b, "b"))


def l1_error(a, b) -> float:
    return _cg.l1_error(_raster_in(a, "a"), _raster_in(b, "b"))
