"""Dataset-noise analytics: background flow means, occlusion rates, histograms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, UndefinedStatisticError
from .flow import background_flow_mean
from .raster import BinaryMask, FlowField, mask_area, mask_intersection, mask_union

__all__ = [
    "STABLE_FLOW_THRESHOLD",
    "video_background_flow_mean",
    "classify_background_motion",
    "frame_occlusion_rate",
    "video_occlusion_rate",
    "Histogram",
    "histogram",
    "OCCLUSION_QUARTILE_EDGES",
]

# Background motion below this mean magnitude reads as a static background.
STABLE_FLOW_THRESHOLD = 1.0

# Dataset quartile cuts for per-video occlusion rates.
OCCLUSION_QUARTILE_EDGES = (0.05, 0.13, 0.21)


def video_background_flow_mean(
    flows: Sequence[FlowField], masks: Sequence[BinaryMask]
) -> float:
    """Uniform mean over frame pairs of the per-pair background flow mean.

    flows[i] is the motion into frame i+1 and masks[i] is that frame's
    character-region mask.
    """
    if len(flows) == 0:
        raise ArgumentError("need at least one frame pair (two frames)")
    if len(flows) != len(masks):
        raise ArgumentError(
            f"got {len(flows)} flow fields but {len(masks)} masks"
        )
    means = [background_flow_mean(f, m) for f, m in zip(flows, masks)]
    return float(np.mean(np.asarray(means, dtype=np.float64)))


def classify_background_motion(
    flow_mean: float, threshold: float = STABLE_FLOW_THRESHOLD
) -> str:
    """"stable" when background motion stays imperceptible, else "unstable"."""
    return "stable" if flow_mean < threshold else "unstable"


def frame_occlusion_rate(
    dilation_maps: Sequence[BinaryMask], pairwise_max: bool = False
) -> float:
    """Body occlusion rate of one frame.

    Default: intersection area over union area across ALL characters'
    masks. With pairwise_max=True: the maximum pairwise IoU instead (the
    two readings coincide for two characters). Frames with fewer than two
    characters contribute 0 by definition, keeping per-video means defined
    when a character exits the frame.
    """
    if len(dilation_maps) < 2:
        return 0.0
    union_area = mask_area(mask_union(dilation_maps))
    if union_area == 0:
        raise UndefinedStatisticError(
            "all dilation maps are empty; occlusion rate undefined"
        )
    if not pairwise_max:
        return mask_area(mask_intersection(dilation_maps)) / union_area
    best = 0.0
    for j in range(len(dilation_maps)):
        for k in range(j + 1, len(dilation_maps)):
            pair = [dilation_maps[j], dilation_maps[k]]
            pair_union = mask_area(mask_union(pair))
            if pair_union == 0:
                continue
            best = max(best, mask_area(mask_intersection(pair)) / pair_union)
    return best


def video_occlusion_rate(
    frames_maps: Sequence[Sequence[BinaryMask]], pairwise_max: bool = False
) -> tuple[list[float], float]:
    """Per-frame occlusion rates and their uniform mean across frames."""
    if len(frames_maps) == 0:
        raise ArgumentError("need at least one frame")
    rates = [frame_occlusion_rate(maps, pairwise_max) for maps in frames_maps]
    return rates, float(np.mean(np.asarray(rates, dtype=np.float64)))


@dataclass(frozen=True)
class Histogram:
    """Counts over K+1 buckets defined by K interior cut points.

    Bucket 0 holds values below edges[0]; bucket i holds
    edges[i-1] <= v < edges[i] (left-closed); the final bucket holds
    everything from the last edge upward. proportions is None for empty
    input.
    """

    edges: tuple[float, ...]
    counts: tuple[int, ...]
    proportions: tuple[float, ...] | None

    @property
    def total(self) -> int:
        return sum(self.counts)


def histogram(values: Sequence[float], edges: Sequence[float]) -> Histogram:
    """Bucket values by strictly increasing interior cut points."""
    edges = tuple(float(e) for e in edges)
    if len(edges) == 0:
        raise ArgumentError("need at least one edge")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ArgumentError(f"edges must be strictly increasing, got {edges}")
    counts = [0] * (len(edges) + 1)
    for v in values:
        counts[int(np.searchsorted(edges, v, side="right"))] += 1
    total = sum(counts)
    proportions = tuple(c / total for c in counts) if total else None
    return Histogram(edges=edges, counts=tuple(counts), proportions=proportions)
