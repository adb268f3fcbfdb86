"""Overlap-window planning and blending for long-video inference.

Long pose sequences are split into fixed-length windows advancing by a
stride smaller than the window, each window is generated independently, and
frames covered by several windows are averaged. The final window start is
clamped to total - window so the tail is always covered without fabricating
pose frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ArgumentError, ShapeError, WindowGenerationError
from .pose import PoseSequence
from .raster import Raster

__all__ = ["Window", "WindowPlan", "plan_windows", "blend_windows", "run_windowed"]

DEFAULT_WINDOW = 16
DEFAULT_STRIDE = 8


class Window(NamedTuple):
    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class WindowPlan:
    """Sorted inference windows plus the per-frame covering-window count."""

    total: int
    windows: tuple[Window, ...]
    coverage: tuple[int, ...]

    def __post_init__(self):
        starts = [w.start for w in self.windows]
        if starts != sorted(set(starts)):
            raise ArgumentError("window starts must be strictly increasing")
        if any(c < 1 for c in self.coverage):
            raise ArgumentError("every frame must be covered by some window")


def plan_windows(total: int, window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE) -> WindowPlan:
    """Window starts 0, stride, 2*stride, ... with a clamped final window."""
    if total < 1 or window < 1 or stride < 1:
        raise ArgumentError(
            f"total/window/stride must be positive, got {total}/{window}/{stride}"
        )
    if stride > window:
        raise ArgumentError(
            f"stride {stride} > window {window} would leave coverage gaps"
        )
    if total <= window:
        windows = (Window(0, total),)
    else:
        starts = []
        s = 0
        while s + window < total:
            starts.append(s)
            s += stride
        final = total - window
        if not starts or starts[-1] != final:
            starts.append(final)
        windows = tuple(Window(s, window) for s in starts)
    coverage = np.zeros(total, dtype=np.int64)
    for w in windows:
        coverage[w.start : w.stop] += 1
    return WindowPlan(total=total, windows=windows, coverage=tuple(int(c) for c in coverage))


def blend_windows(
    plan: WindowPlan, window_outputs: Sequence[Sequence[Raster]]
) -> list[Raster]:
    """Average overlapping window outputs into one frame sequence.

    Accumulation runs in float64 in fixed window order and divides by the
    coverage count, so frames covered exactly once pass through bit
    identically. Integer-typed frames are rounded back to their dtype.
    """
    if len(window_outputs) != len(plan.windows):
        raise ShapeError(
            f"plan has {len(plan.windows)} windows but got "
            f"{len(window_outputs)} outputs"
        )
    ref = None
    for w, frames in zip(plan.windows, window_outputs):
        if len(frames) != w.length:
            raise ShapeError(
                f"window starting at {w.start} expects {w.length} frames, "
                f"got {len(frames)}"
            )
        for f in frames:
            if ref is None:
                ref = f
            elif f.data.shape != ref.data.shape:
                raise ShapeError(
                    f"frame shape {f.data.shape} differs from {ref.data.shape}"
                )
    assert ref is not None
    acc = np.zeros((plan.total,) + ref.data.shape, dtype=np.float64)
    for w, frames in zip(plan.windows, window_outputs):
        for i, f in enumerate(frames):
            acc[w.start + i] += f.data
    counts = np.asarray(plan.coverage, dtype=np.float64)
    acc /= counts[:, np.newaxis, np.newaxis, np.newaxis]
    out_dtype = ref.data.dtype
    if np.issubdtype(out_dtype, np.integer):
        acc = np.rint(acc)
    return [Raster(acc[t].astype(out_dtype)) for t in range(plan.total)]


def run_windowed(
    pose: PoseSequence,
    generator: Callable[[PoseSequence], Sequence[Raster]],
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> list[Raster]:
    """Plan windows over the pose sequence, generate each, and blend.

    The generator maps a pose subsequence to an equal-length frame sequence
    and is invoked exactly once per window, in plan order. Its failures are
    re-raised with the window index attached.
    """
    plan = plan_windows(len(pose.frames), window, stride)
    outputs = []
    for i, w in enumerate(plan.windows):
        sub = pose.subsequence(w.start, w.length)
        try:
            frames = list(generator(sub))
        except Exception as exc:
            raise WindowGenerationError(
                f"generator failed on window {i} [{w.start}, {w.stop}): {exc}",
                window_index=i,
            ) from exc
        if len(frames) != w.length:
            raise ShapeError(
                f"generator returned {len(frames)} frames for window {i} "
                f"of length {w.length}"
            )
        outputs.append(frames)
    return blend_windows(plan, outputs)
