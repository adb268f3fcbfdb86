"""Shared raster types and elementwise raster algebra.

Convention used everywhere in this package: rasters are row-major numpy
arrays of shape (height, width, channels) with the origin at the top-left
pixel and y growing downward. All raster values are immutable after
construction; instances can be shared freely across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ShapeError

__all__ = [
    "Raster",
    "BinaryMask",
    "FlowField",
    "DepthRaster",
    "DepthConvention",
    "ClipMeta",
    "raster_hadamard",
    "mask_intersection",
    "mask_union",
    "mask_complement",
    "mask_area",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    """Return a read-only C-contiguous array owning its data."""
    arr = np.ascontiguousarray(arr)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Raster:
    """Single image plane stack: shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ShapeError(f"raster data must be (H, W, C), got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1 or c < 1:
            raise ShapeError(f"raster dimensions must be >= 1, got {arr.shape}")
        arr = self._coerce(arr)
        self._validate(arr)
        object.__setattr__(self, "data", _freeze(arr))

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        return arr

    def _validate(self, arr: np.ndarray) -> None:
        if not np.issubdtype(arr.dtype, np.number):
            raise ShapeError(f"raster dtype must be numeric, got {arr.dtype}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def same_extent(self, other: "Raster") -> bool:
        return self.data.shape[:2] == other.data.shape[:2]


@dataclass(frozen=True, eq=False)
class BinaryMask(Raster):
    """1-channel uint8 raster whose pixels are exactly 0 or 1."""

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        if arr.dtype != np.uint8:
            if not np.isin(arr, (0, 1)).all():
                raise ShapeError("binary mask values must be 0 or 1")
            arr = arr.astype(np.uint8)
        return arr

    def _validate(self, arr: np.ndarray) -> None:
        if arr.shape[2] != 1:
            raise ShapeError(f"binary mask must have 1 channel, got {arr.shape[2]}")
        if not np.isin(arr, (0, 1)).all():
            raise ShapeError("binary mask values must be 0 or 1")

    def plane(self) -> np.ndarray:
        """The (H, W) uint8 view of the mask."""
        return self.data[:, :, 0]

    def boolean(self) -> np.ndarray:
        return self.data[:, :, 0].astype(bool)


@dataclass(frozen=True, eq=False)
class FlowField(Raster):
    """2-channel float32 raster of (u, v) motion in pixels/frame."""

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        return arr.astype(np.float32, copy=False)

    def _validate(self, arr: np.ndarray) -> None:
        if arr.shape[2] != 2:
            raise ShapeError(f"flow field must have 2 channels, got {arr.shape[2]}")
        if not np.isfinite(arr).all():
            raise ShapeError("flow field values must be finite")

    def u(self) -> np.ndarray:
        return self.data[:, :, 0]

    def v(self) -> np.ndarray:
        return self.data[:, :, 1]


class DepthConvention(enum.Enum):
    """Which end of the depth scale is nearest to the camera."""

    LARGER_IS_CLOSER = "larger-is-closer"
    SMALLER_IS_CLOSER = "smaller-is-closer"


@dataclass(frozen=True, eq=False)
class DepthRaster(Raster):
    """1-channel float32 depth/disparity raster from an external estimator."""

    convention: DepthConvention = DepthConvention.LARGER_IS_CLOSER

    def __post_init__(self):
        if not isinstance(self.convention, DepthConvention):
            raise ArgumentError(f"unknown depth convention: {self.convention!r}")
        Raster.__post_init__(self)

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        return arr.astype(np.float32, copy=False)

    def _validate(self, arr: np.ndarray) -> None:
        if arr.shape[2] != 1:
            raise ShapeError(f"depth raster must have 1 channel, got {arr.shape[2]}")
        if not np.isfinite(arr).all():
            raise ShapeError("depth raster values must be finite")

    def plane(self) -> np.ndarray:
        return self.data[:, :, 0]


@dataclass(frozen=True)
class ClipMeta:
    """Identity and timing of a source clip."""

    frame_count: int
    fps: Fraction = Fraction(30, 1)
    source_id: str = ""

    def __post_init__(self):
        if self.frame_count < 1:
            raise ArgumentError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.fps <= 0:
            raise ArgumentError(f"fps must be positive, got {self.fps}")


def raster_hadamard(a: Raster, b: Raster) -> Raster:
    """Elementwise product of two rasters.

    ``b`` may be 1-channel, in which case it broadcasts across all of
    ``a``'s channels (mask-times-flow style). Any other channel mismatch is
    a shape error.
    """
    if not a.same_extent(b):
        raise ShapeError(
            f"hadamard extent mismatch: {a.data.shape[:2]} vs {b.data.shape[:2]}"
        )
    if a.channels != b.channels and b.channels != 1:
        raise ShapeError(
            f"hadamard channel mismatch: {a.channels} vs {b.channels} "
            "(only a 1-channel right operand broadcasts)"
        )
    out = a.data.astype(np.float32, copy=False) * b.data.astype(np.float32, copy=False)
    return Raster(out)


def _check_mask_list(masks: Sequence[BinaryMask]) -> None:
    if len(masks) == 0:
        raise ArgumentError("mask list must not be empty")
    first = masks[0]
    for i, m in enumerate(masks[1:], start=1):
        if not first.same_extent(m):
            raise ShapeError(
                f"mask {i} extent {m.data.shape[:2]} differs from mask 0 "
                f"extent {first.data.shape[:2]}"
            )


def mask_intersection(masks: Sequence[BinaryMask]) -> BinaryMask:
    """Pixelwise AND over a non-empty list of equally sized masks."""
    _check_mask_list(masks)
    acc = masks[0].boolean()
    for m in masks[1:]:
        acc = acc & m.boolean()
    return BinaryMask(acc.astype(np.uint8))


def mask_union(masks: Sequence[BinaryMask]) -> BinaryMask:
    """Pixelwise OR over a non-empty list of equally sized masks."""
    _check_mask_list(masks)
    acc = masks[0].boolean()
    for m in masks[1:]:
        acc = acc | m.boolean()
    return BinaryMask(acc.astype(np.uint8))


def mask_complement(mask: BinaryMask) -> BinaryMask:
    return BinaryMask((1 - mask.plane()).astype(np.uint8))


def mask_area(mask: BinaryMask) -> int:
    """Number of set pixels."""
    return int(mask.plane().sum(dtype=np.int64))
