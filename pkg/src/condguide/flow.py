"""Background optical-flow guidance maps and a desk-scale block-matching estimator.

Training maps carry the measured background motion with character regions
overwritten by the 1.0 sentinel (stored in both channels); inference maps
are the same construction with zero background motion. The mask always
travels with the map because a background pixel whose true flow is exactly
(1, 1) is otherwise indistinguishable from the sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ShapeError, UndefinedStatisticError
from .raster import BinaryMask, FlowField, Raster

__all__ = [
    "SENTINEL",
    "BlockMatchParams",
    "FlowGuidanceMap",
    "estimate_flow_blockmatch",
    "flow_guidance_training",
    "flow_guidance_inference",
    "background_flow_mean",
]

# Character-region marker value, written to both flow channels.
SENTINEL = np.float32(1.0)


@dataclass(frozen=True)
class BlockMatchParams:
    block: int = 8
    search: int = 4

    def __post_init__(self):
        if self.block < 1:
            raise ArgumentError(f"block size must be >= 1, got {self.block}")
        if self.search < 0:
            raise ArgumentError(f"search radius must be >= 0, got {self.search}")


@dataclass(frozen=True, eq=False)
class FlowGuidanceMap:
    """2-channel guidance raster plus the mask that defines its sentinel region."""

    values: Raster
    mask: BinaryMask

    def __post_init__(self):
        if self.values.channels != 2:
            raise ShapeError(
                f"guidance map must have 2 channels, got {self.values.channels}"
            )
        if not self.values.same_extent(self.mask):
            raise ShapeError(
                f"guidance/mask extent mismatch: {self.values.data.shape[:2]} "
                f"vs {self.mask.data.shape[:2]}"
            )
        if not np.isfinite(self.values.data).all():
            raise ShapeError("guidance values must be finite")
        inside = self.mask.boolean()
        if not (self.values.data[inside] == SENTINEL).all():
            raise ShapeError("masked pixels must carry the sentinel value 1.0")

    @property
    def width(self) -> int:
        return self.values.width

    @property
    def height(self) -> int:
        return self.values.height


def _grid_starts(extent: int, block: int) -> np.ndarray:
    return np.arange(0, extent, block)


def estimate_flow_blockmatch(
    prev: Raster, curr: Raster, params: BlockMatchParams = BlockMatchParams()
) -> FlowField:
    """Exhaustive-search block matching between two frames.

    For every block of the current frame the displacement (u, v) within the
    search window minimizing the sum of absolute differences against the
    previous frame is selected; candidates that would read outside the
    previous frame are excluded, and (0, 0) is always admissible. Ties break
    toward the smallest displacement magnitude, then lexicographic (u, v).
    The flow convention is prev-to-curr motion: curr[y, x] ~ prev[y-v, x-u].
    Block displacements are replicated to per-pixel resolution.
    """
    if prev.data.shape != curr.data.shape:
        raise ShapeError(
            f"frame shape mismatch: {prev.data.shape} vs {curr.data.shape}"
        )
    if prev.channels not in (1, 3):
        raise ShapeError(f"expected grayscale or RGB frames, got {prev.channels}ch")
    h, w = prev.height, prev.width
    if h < params.block or w < params.block:
        raise ArgumentError(
            f"frames {w}x{h} smaller than one {params.block}px block"
        )

    a = curr.data.astype(np.float64)
    b = prev.data.astype(np.float64)
    row_starts = _grid_starts(h, params.block)
    col_starts = _grid_starts(w, params.block)

    best_sad = np.full((row_starts.size, col_starts.size), np.inf)
    best_u = np.zeros_like(best_sad, dtype=np.int64)
    best_v = np.zeros_like(best_sad, dtype=np.int64)

    s = params.search
    candidates = sorted(
        ((u, v) for u in range(-s, s + 1) for v in range(-s, s + 1)),
        key=lambda uv: (uv[0] * uv[0] + uv[1] * uv[1], uv[0], uv[1]),
    )
    for u, v in candidates:
        absdiff = np.full((h, w), np.inf)
        ys = slice(max(0, v), h + min(0, v))
        xs = slice(max(0, u), w + min(0, u))
        ys_src = slice(max(0, -v), h - max(0, v))
        xs_src = slice(max(0, -u), w - max(0, u))
        absdiff[ys, xs] = np.abs(a[ys, xs] - b[ys_src, xs_src]).sum(axis=2)
        sad = np.add.reduceat(np.add.reduceat(absdiff, row_starts, axis=0), col_starts, axis=1)
        better = sad < best_sad
        best_sad[better] = sad[better]
        best_u[better] = u
        best_v[better] = v

    row_extents = np.diff(np.append(row_starts, h))
    col_extents = np.diff(np.append(col_starts, w))
    uu = np.repeat(np.repeat(best_u, row_extents, axis=0), col_extents, axis=1)
    vv = np.repeat(np.repeat(best_v, row_extents, axis=0), col_extents, axis=1)
    return FlowField(np.stack([uu, vv], axis=2).astype(np.float32))


def flow_guidance_training(flow: FlowField, character_mask: BinaryMask) -> FlowGuidanceMap:
    """Blend measured flow with the character mask: masked pixels become 1.0."""
    if not flow.same_extent(character_mask):
        raise ShapeError(
            f"flow/mask extent mismatch: {flow.data.shape[:2]} vs "
            f"{character_mask.data.shape[:2]}"
        )
    inside = character_mask.boolean()[:, :, np.newaxis]
    values = np.where(inside, SENTINEL, flow.data)
    return FlowGuidanceMap(values=Raster(values), mask=character_mask)


def flow_guidance_inference(character_mask: BinaryMask) -> FlowGuidanceMap:
    """Zero-momentum guidance map: background (0, 0), characters 1.0.

    By construction this is flow_guidance_training applied to an all-zero
    flow field, bit for bit.
    """
    zero = FlowField(
        np.zeros((character_mask.height, character_mask.width, 2), dtype=np.float32)
    )
    return flow_guidance_training(zero, character_mask)


def background_flow_mean(flow: FlowField, character_mask: BinaryMask) -> float:
    """Mean Euclidean flow magnitude over background (unmasked) pixels."""
    if not flow.same_extent(character_mask):
        raise ShapeError(
            f"flow/mask extent mismatch: {flow.data.shape[:2]} vs "
            f"{character_mask.data.shape[:2]}"
        )
    background = ~character_mask.boolean()
    if not background.any():
        raise UndefinedStatisticError(
            "character mask covers every pixel; background flow mean undefined"
        )
    uv = flow.data.astype(np.float64)[background]
    return float(np.sqrt(uv[:, 0] ** 2 + uv[:, 1] ** 2).mean())
