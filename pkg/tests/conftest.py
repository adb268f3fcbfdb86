"""Shared fixtures and brute-force oracles.

The oracle helpers here deliberately re-derive geometry per pixel with
scalar arithmetic; they stay independent of the vectorized library paths
they check.
"""

from __future__ import annotations

import numpy as np
import pytest

from condguide import (
    CharacterPose,
    PoseFrame,
    RenderParams,
    SkeletonTopology,
)


def make_character(cid, points, conf=1.0):
    """points: [(x, y)] or [(x, y, conf)] rows."""
    rows = []
    for p in points:
        if len(p) == 2:
            rows.append((p[0], p[1], conf))
        else:
            rows.append(tuple(p))
    return CharacterPose(character_id=cid, keypoints=np.asarray(rows, dtype=np.float32))


def line_topology(joint_count, palette_start=0):
    """Chain skeleton: joints 0-1-2-... connected in sequence."""
    palette = tuple(
        ((37 * (i + palette_start)) % 256, (91 * (i + 3)) % 256, (53 * (i + 7)) % 256)
        for i in range(joint_count)
    )
    edges = tuple((i, i + 1) for i in range(joint_count - 1))
    return SkeletonTopology(
        joint_count=joint_count,
        edges=edges,
        joint_names=tuple(f"j{i}" for i in range(joint_count)),
        joint_colors=palette,
        edge_colors=palette[: len(edges)],
    )


@pytest.fixture
def two_joint_topology():
    return line_topology(2)


def params_px(width, thickness, radius, conf=0.3):
    """RenderParams whose effective thickness/radius at `width` are as given."""
    return RenderParams(
        confidence_threshold=conf,
        line_thickness_512=thickness * 512.0 / width,
        joint_radius_512=radius * 512.0 / width,
    )


def frame_of(characters, width, height):
    return PoseFrame(characters=tuple(characters), width=width, height=height)


# ---------------------------------------------------------------------------
# Scalar distance oracles


def seg_dist2(px, py, ax, ay, bx, by):
    abx = bx - ax
    aby = by - ay
    denom = abx * abx + aby * aby
    if denom == 0.0:
        dx = px - ax
        dy = py - ay
        return dx * dx + dy * dy
    t = ((px - ax) * abx + (py - ay) * aby) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    dx = px - (ax + t * abx)
    dy = py - (ay + t * aby)
    return dx * dx + dy * dy


def disk_hit(px, py, cx, cy, radius):
    dx = px - cx
    dy = py - cy
    return dx * dx + dy * dy <= radius * radius


def segment_hit(px, py, ax, ay, bx, by, half_thickness):
    return seg_dist2(px, py, ax, ay, bx, by) <= half_thickness * half_thickness


def painter_oracle(masks_bool, levels_by_rank):
    """Per-pixel scan: ranks ascending (front first), take the first cover.

    masks_bool: list of (H, W) bool arrays indexed by rank-1 (front first).
    levels_by_rank: level value per rank, same order.
    """
    h, w = masks_bool[0].shape
    out = np.zeros((h, w), dtype=np.float32)
    for y in range(h):
        for x in range(w):
            for mask, level in zip(masks_bool, levels_by_rank):
                if mask[y, x]:
                    out[y, x] = np.float32(level)
                    break
    return out
