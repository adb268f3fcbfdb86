"""Skeletal dilation maps: binary character-region masks grown from pose skeletons.

A character's mask is the union of its thick limb segments and joint disks,
morphologically dilated by a disk of radius rho. Because every primitive is
already a distance-threshold set, the dilation is computed exactly: a pixel
is set iff its distance to some limb segment is at most half the line
thickness plus rho, or its distance to some joint is at most the joint
radius plus rho. No iterated structuring elements, no kernel ambiguity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCharacterWarning
from .pose import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    CharacterPose,
    PoseFrame,
    RenderParams,
    SkeletonTopology,
    _paint_disk,
    _paint_segment,
    default_topology,
)
from .raster import BinaryMask, mask_union

__all__ = ["DilationParams", "skeletal_dilation", "frame_dilation_maps", "frame_character_mask"]


@dataclass(frozen=True)
class DilationParams:
    """Skeleton geometry plus the dilation radius rule.

    rho defaults to 6% of the character's visible-joint bounding-box
    diagonal with a 3 px floor, so the mask grows with the character rather
    than the frame.
    """

    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    line_thickness_512: float = 4.0
    joint_radius_512: float = 4.0
    rho_relative: float = 0.06
    rho_floor_px: float = 3.0

    def render_params(self) -> RenderParams:
        return RenderParams(
            confidence_threshold=self.confidence_threshold,
            line_thickness_512=self.line_thickness_512,
            joint_radius_512=self.joint_radius_512,
        )

    def rho(self, visible_xy: np.ndarray) -> float:
        lo = visible_xy.min(axis=0)
        hi = visible_xy.max(axis=0)
        diag = float(np.hypot(hi[0] - lo[0], hi[1] - lo[1]))
        return max(self.rho_floor_px, self.rho_relative * diag)


def skeletal_dilation(
    character: CharacterPose,
    topology: SkeletonTopology | None = None,
    *,
    width: int,
    height: int,
    params: DilationParams = DilationParams(),
) -> BinaryMask:
    """Character-region mask for one character on a width x height raster.

    A character whose joints all fall below the confidence threshold yields
    an empty mask and a DegenerateCharacterWarning; noisy data contains such
    frames and they must not abort batch runs.
    """
    if topology is None:
        topology = default_topology()
    hit = np.zeros((height, width), dtype=bool)
    kp = character.keypoints.astype(np.float64)
    visible = kp[:, 2] >= params.confidence_threshold
    if not visible.any():
        warnings.warn(
            f"character {character.character_id}: all joints below "
            f"confidence {params.confidence_threshold}; empty dilation mask",
            DegenerateCharacterWarning,
            stacklevel=2,
        )
        return BinaryMask(hit.astype(np.uint8))
    rho = params.rho(kp[visible, :2])
    half = params.render_params().thickness(width) / 2.0 + rho
    radius = params.render_params().radius(width) + rho
    for a, b in topology.edges:
        if visible[a] and visible[b]:
            _paint_segment(hit, kp[a, 0], kp[a, 1], kp[b, 0], kp[b, 1], half, True)
    for j in range(topology.joint_count):
        if visible[j]:
            _paint_disk(hit, kp[j, 0], kp[j, 1], radius, True)
    return BinaryMask(hit.astype(np.uint8))


def frame_dilation_maps(
    frame: PoseFrame,
    topology: SkeletonTopology | None = None,
    params: DilationParams = DilationParams(),
) -> list[BinaryMask]:
    """One mask per character, aligned with the frame's character order."""
    return [
        skeletal_dilation(
            c, topology, width=frame.width, height=frame.height, params=params
        )
        for c in frame.characters
    ]


def frame_character_mask(
    frame: PoseFrame,
    topology: SkeletonTopology | None = None,
    params: DilationParams = DilationParams(),
) -> BinaryMask:
    """Union of all characters' dilation maps (the frame's control region)."""
    maps = frame_dilation_maps(frame, topology, params)
    if not maps:
        return BinaryMask(np.zeros((frame.height, frame.width), dtype=np.uint8))
    return mask_union(maps)
