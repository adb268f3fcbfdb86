"""Depth-order maps: rank characters front-to-back and paint rank levels.

Pipeline: per-character dilation masks -> mutual-overlap-free regions ->
average depth over each region -> front-to-back ranking -> painter's
compositing of the FULL dilation masks back-to-front, so occluded pixels
end up owned by the frontmost covering character. Rank r of J characters
paints the level value (J - r + 1) / J; background stays 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .dilation import DilationParams, frame_dilation_maps
from .errors import (
    ArgumentError,
    DegenerateRegionError,
    IdentityMismatchError,
    ShapeError,
)
from .pose import PoseFrame, SkeletonTopology
from .raster import (
    BinaryMask,
    DepthConvention,
    DepthRaster,
    Raster,
    mask_union,
)

__all__ = [
    "CharacterRank",
    "DepthOrderMap",
    "non_intersection_regions",
    "rank_by_depth",
    "compose_order_map",
    "compute_reference_ranks",
    "depth_order_training",
    "depth_order_inference",
]

OnEmptyRegion = Literal["error", "push_back"]


@dataclass(frozen=True)
class CharacterRank:
    """One character's position in the front-to-back order.

    rank 1 is frontmost; level_value = (J - rank + 1) / J. mean_depth is NaN
    for characters ranked by the total-occlusion fallback rather than by a
    measured region depth.
    """

    character_id: int
    mean_depth: float
    rank: int
    level_value: float


@dataclass(frozen=True, eq=False)
class DepthOrderMap(Raster):
    """1-channel float32 raster of rank level values, background 0."""

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        return arr.astype(np.float32, copy=False)

    def _validate(self, arr: np.ndarray) -> None:
        if arr.shape[2] != 1:
            raise ShapeError(f"order map must have 1 channel, got {arr.shape[2]}")
        if not np.isfinite(arr).all():
            raise ShapeError("order map values must be finite")

    def plane(self) -> np.ndarray:
        return self.data[:, :, 0]


def non_intersection_regions(dilation_maps: Sequence[BinaryMask]) -> list[BinaryMask]:
    """Each character's mask minus every overlap with the other characters.

    The results are pairwise disjoint by construction and each is contained
    in its source mask.
    """
    if len(dilation_maps) == 0:
        raise ArgumentError("need at least one dilation map")
    if len(dilation_maps) == 1:
        return [BinaryMask(dilation_maps[0].plane().copy())]
    regions = []
    for j, own in enumerate(dilation_maps):
        others = [m for k, m in enumerate(dilation_maps) if k != j]
        overlap = mask_union(others).boolean()
        regions.append(BinaryMask((own.boolean() & ~overlap).astype(np.uint8)))
    return regions


def rank_by_depth(
    regions: Sequence[BinaryMask],
    depth: DepthRaster,
    character_ids: Sequence[int] | None = None,
    on_empty_region: OnEmptyRegion = "error",
) -> list[CharacterRank]:
    """Front-to-back character ranking by average depth over each region.

    The depth raster's convention decides the sort direction (larger-is-
    closer: descending means; smaller-is-closer: ascending). Ties break
    toward the lower character id. An empty region (total occlusion) is an
    error by default; with on_empty_region="push_back" the character is
    ranked behind every measured one instead, lowest id first.
    """
    if len(regions) == 0:
        raise ArgumentError("need at least one region")
    if character_ids is None:
        character_ids = list(range(len(regions)))
    if len(character_ids) != len(regions):
        raise ArgumentError("character_ids length must match regions")
    plane = depth.plane()
    measured: list[tuple[float, int]] = []
    degenerate: list[int] = []
    for cid, region in zip(character_ids, regions):
        if not region.same_extent(depth):
            raise ShapeError(
                f"region extent {region.data.shape[:2]} does not match depth "
                f"{depth.data.shape[:2]}"
            )
        sel = region.boolean()
        if not sel.any():
            if on_empty_region == "error":
                raise DegenerateRegionError(
                    f"character {cid} has an empty non-intersection region "
                    "(total occlusion)",
                    character_id=cid,
                )
            degenerate.append(cid)
            continue
        measured.append((float(plane[sel].astype(np.float64).mean()), cid))

    if depth.convention is DepthConvention.LARGER_IS_CLOSER:
        measured.sort(key=lambda mc: (-mc[0], mc[1]))
    else:
        measured.sort(key=lambda mc: (mc[0], mc[1]))
    degenerate.sort()

    total = len(measured) + len(degenerate)
    ranks = []
    for r, (mean_depth, cid) in enumerate(measured, start=1):
        ranks.append(
            CharacterRank(
                character_id=cid,
                mean_depth=mean_depth,
                rank=r,
                level_value=(total - r + 1) / total,
            )
        )
    for r, cid in enumerate(degenerate, start=len(measured) + 1):
        ranks.append(
            CharacterRank(
                character_id=cid,
                mean_depth=math.nan,
                rank=r,
                level_value=(total - r + 1) / total,
            )
        )
    return ranks


def compose_order_map(
    dilation_maps: Sequence[BinaryMask],
    ranks: Sequence[CharacterRank],
    character_ids: Sequence[int] | None = None,
) -> DepthOrderMap:
    """Painter's compositing of full dilation masks, back-to-front.

    Every mask must have a rank entry (matched by character id) and rank
    numbers must be distinct; painting proceeds from the largest rank
    (farthest) to rank 1, each step out = mask * level + (1 - mask) * out,
    so overlap pixels carry the frontmost covering character's level.
    """
    if len(dilation_maps) == 0:
        raise ArgumentError("need at least one dilation map")
    if character_ids is None:
        character_ids = list(range(len(dilation_maps)))
    if len(character_ids) != len(dilation_maps):
        raise ArgumentError("character_ids length must match dilation_maps")
    by_id = dict(zip(character_ids, dilation_maps))
    rank_ids = [r.character_id for r in ranks]
    if sorted(rank_ids) != sorted(by_id):
        raise ArgumentError(
            f"ranks cover ids {sorted(rank_ids)} but masks carry {sorted(by_id)}"
        )
    if len({r.rank for r in ranks}) != len(ranks):
        raise ArgumentError("rank numbers must be distinct")

    first = dilation_maps[0]
    out = np.zeros((first.height, first.width), dtype=np.float32)
    for entry in sorted(ranks, key=lambda r: -r.rank):
        mask = by_id[entry.character_id]
        if not mask.same_extent(first):
            raise ShapeError("dilation maps must share one extent")
        a = mask.plane().astype(np.float32)
        out = a * np.float32(entry.level_value) + (np.float32(1.0) - a) * out
    return DepthOrderMap(out)


def compute_reference_ranks(
    frame: PoseFrame,
    depth: DepthRaster,
    topology: SkeletonTopology | None = None,
    params: DilationParams = DilationParams(),
    on_empty_region: OnEmptyRegion = "error",
) -> list[CharacterRank]:
    """Rank a frame's characters by depth; used once per reference image."""
    maps = frame_dilation_maps(frame, topology, params)
    if not maps:
        return []
    regions = non_intersection_regions(maps)
    ids = [c.character_id for c in frame.characters]
    return rank_by_depth(regions, depth, ids, on_empty_region)


def depth_order_training(
    frame: PoseFrame,
    depth: DepthRaster,
    topology: SkeletonTopology | None = None,
    params: DilationParams = DilationParams(),
    on_empty_region: OnEmptyRegion = "error",
) -> DepthOrderMap:
    """Full training-time pipeline for one frame."""
    if (depth.height, depth.width) != (frame.height, frame.width):
        raise ShapeError(
            f"depth {depth.data.shape[:2]} does not match frame "
            f"{(frame.height, frame.width)}"
        )
    if not frame.characters:
        return DepthOrderMap(np.zeros((frame.height, frame.width), dtype=np.float32))
    maps = frame_dilation_maps(frame, topology, params)
    ranks = compute_reference_ranks(frame, depth, topology, params, on_empty_region)
    ids = [c.character_id for c in frame.characters]
    return compose_order_map(maps, ranks, ids)


def depth_order_inference(
    reference_ranks: Sequence[CharacterRank],
    frame: PoseFrame,
    topology: SkeletonTopology | None = None,
    params: DilationParams = DilationParams(),
) -> DepthOrderMap:
    """Paint a frame with the fixed level values of the reference ranking.

    Per-frame depth is skipped entirely; level values follow character ids.
    A frame character without a reference rank is an identity mismatch.
    """
    by_id = {r.character_id: r for r in reference_ranks}
    frame_ids = [c.character_id for c in frame.characters]
    missing = [cid for cid in frame_ids if cid not in by_id]
    if missing:
        raise IdentityMismatchError(
            f"frame characters {missing} have no reference rank "
            f"(reference ids: {sorted(by_id)})"
        )
    if not frame.characters:
        return DepthOrderMap(np.zeros((frame.height, frame.width), dtype=np.float32))
    maps = frame_dilation_maps(frame, topology, params)
    ranks = [by_id[cid] for cid in frame_ids]
    return compose_order_map(maps, ranks, frame_ids)
