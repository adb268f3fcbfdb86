"""Unified-standard evaluation: image metrics, Fréchet statistics, windowing.

Feature extraction networks live outside this package; the Fréchet distance
here consumes externally supplied feature vectors. Image metrics operate on
[0, 1] float rasters. The standardization step (largest centered square
crop, then bilinear resize) reproduces the shared evaluation geometry that
makes scores comparable across methods with different native sizes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, TypeVar

import numpy as np

from .errors import MetricError, ShapeError, ShortClipWarning
from .raster import Raster, _freeze

__all__ = [
    "FeatureSet",
    "MetricReport",
    "SsimParams",
    "standardize",
    "l1_error",
    "psnr",
    "ssim",
    "frechet_distance",
    "video_windows_for_metrics",
    "METRIC_WINDOW",
]

# Video metrics sample length: consecutive frame chunks of this size.
METRIC_WINDOW = 16

# Distances more negative than this are treated as numerical failures.
_NEGATIVE_FLOOR = -1e-8

_T = TypeVar("_T")


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Embedding vectors (N, d) from an external feature extractor."""

    vectors: np.ndarray
    source: str = ""

    def __post_init__(self):
        arr = np.asarray(self.vectors)
        if arr.ndim != 2:
            raise MetricError(f"feature set must be (N, d), got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise MetricError(
                f"need at least 2 vectors for covariance, got {arr.shape[0]}"
            )
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        if not np.isfinite(arr).all():
            raise MetricError("feature vectors must be finite")
        object.__setattr__(self, "vectors", _freeze(arr))

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class MetricReport:
    """One row of the evaluation table."""

    l1: float
    psnr: float
    ssim: float
    frechet: float | None = None

    def as_json_dict(self) -> dict:
        return {
            "l1": self.l1,
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": self.ssim,
            "frechet": self.frechet,
        }


def _resize_bilinear(data: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resampling with border clamping."""
    h, w = data.shape[:2]
    src_y = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    src_x = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    y0 = np.floor(src_y).astype(np.int64)
    x0 = np.floor(src_x).astype(np.int64)
    fy = (src_y - y0)[:, np.newaxis, np.newaxis]
    fx = (src_x - x0)[np.newaxis, :, np.newaxis]
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    d = data.astype(np.float64)
    rows = d[y0c] * (1.0 - fy) + d[y1c] * fy
    out = rows[:, x0c] * (1.0 - fx) + rows[:, x1c] * fx
    return out


def standardize(frame: Raster, size: int = 512) -> Raster:
    """Largest centered square crop, then bilinear resize to size x size.

    Odd crop excess drops the extra pixel on the right/bottom. Output is
    float32 with the input's value scale; a frame already at the target
    geometry passes through bit-exactly.
    """
    if size < 1:
        raise MetricError(f"target size must be >= 1, got {size}")
    h, w = frame.height, frame.width
    side = min(h, w)
    y0 = (h - side) // 2
    x0 = (w - side) // 2
    cropped = frame.data[y0 : y0 + side, x0 : x0 + side].astype(np.float32)
    if side == size:
        return Raster(cropped)
    return Raster(_resize_bilinear(cropped, size, size).astype(np.float32))


def _check_pair(a: Raster, b: Raster) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")


def l1_error(a: Raster, b: Raster) -> float:
    """Mean absolute difference over all pixels and channels."""
    _check_pair(a, b)
    return float(
        np.abs(a.data.astype(np.float64) - b.data.astype(np.float64)).mean()
    )


def psnr(a: Raster, b: Raster) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] images; inf when equal."""
    _check_pair(a, b)
    mse = float(
        ((a.data.astype(np.float64) - b.data.astype(np.float64)) ** 2).mean()
    )
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


@dataclass(frozen=True)
class SsimParams:
    """Constants of the standard structural-similarity definition."""

    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable 2-D correlation, 'valid' region only."""
    v = np.lib.stride_tricks.sliding_window_view(img, kernel.size, axis=0)
    img = v @ kernel
    v = np.lib.stride_tricks.sliding_window_view(img, kernel.size, axis=1)
    return v @ kernel


def ssim(a: Raster, b: Raster, params: SsimParams = SsimParams()) -> float:
    """Mean local SSIM with a Gaussian window; channels averaged uniformly."""
    _check_pair(a, b)
    if min(a.height, a.width) < params.window_size:
        raise MetricError(
            f"image {a.width}x{a.height} smaller than the "
            f"{params.window_size}px SSIM window"
        )
    kernel = _gaussian_kernel(params.window_size, params.sigma)
    c1 = (params.k1 * params.data_range) ** 2
    c2 = (params.k2 * params.data_range) ** 2
    per_channel = []
    for c in range(a.channels):
        x = a.data[:, :, c].astype(np.float64)
        y = b.data[:, :, c].astype(np.float64)
        mu_x = _filter_valid(x, kernel)
        mu_y = _filter_valid(y, kernel)
        sigma_x = _filter_valid(x * x, kernel) - mu_x * mu_x
        sigma_y = _filter_valid(y * y, kernel) - mu_y * mu_y
        sigma_xy = _filter_valid(x * y, kernel) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_x + sigma_y + c2)
        per_channel.append((num / den).mean())
    return float(np.mean(per_channel))


def _two_pass_covariance(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = x.mean(axis=0)
    centered = x - mu
    cov = centered.T @ centered / (x.shape[0] - 1)
    return mu, cov


def _trace_sqrt_product(cov1: np.ndarray, cov2: np.ndarray) -> float:
    """Tr((cov1 cov2)^{1/2}) via the symmetric form cov1^{1/2} cov2 cov1^{1/2}."""
    w1, v1 = np.linalg.eigh(cov1)
    root1 = (v1 * np.sqrt(np.clip(w1, 0.0, None))) @ v1.T
    inner = root1 @ cov2 @ root1
    inner = (inner + inner.T) / 2.0
    w = np.linalg.eigvalsh(inner)
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def frechet_distance(real: FeatureSet, gen: FeatureSet, eps: float = 1e-6) -> float:
    """Fréchet distance between the Gaussian fits of two feature sets.

    ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}) with unbiased sample
    covariances. eps * I is added to both covariances and the computation
    retried only if the eigendecomposition route fails on the raw ones, the
    usual fallback convention for this statistic.
    """
    if real.dimension != gen.dimension:
        raise MetricError(
            f"feature dimension mismatch: {real.dimension} vs {gen.dimension}"
        )
    mu1, cov1 = _two_pass_covariance(real.vectors.astype(np.float64))
    mu2, cov2 = _two_pass_covariance(gen.vectors.astype(np.float64))
    try:
        tr_sqrt = _trace_sqrt_product(cov1, cov2)
    except np.linalg.LinAlgError:
        ridge = eps * np.eye(real.dimension)
        tr_sqrt = _trace_sqrt_product(cov1 + ridge, cov2 + ridge)
    diff = mu1 - mu2
    dist = float(diff @ diff + np.trace(cov1) + np.trace(cov2) - 2.0 * tr_sqrt)
    if not math.isfinite(dist):
        raise MetricError(f"Fréchet distance is not finite: {dist}")
    if dist < 0.0:
        if dist < _NEGATIVE_FLOOR:
            raise MetricError(
                f"Fréchet distance {dist} below the numerical floor "
                f"{_NEGATIVE_FLOOR}"
            )
        dist = 0.0
    return dist


def video_windows_for_metrics(
    frames: Sequence[_T], window: int = METRIC_WINDOW
) -> list[list[_T]]:
    """Non-overlapping consecutive chunks; a short trailing remainder is dropped."""
    if window < 1:
        raise MetricError(f"window must be >= 1, got {window}")
    n = len(frames)
    if n < window:
        warnings.warn(
            f"clip of {n} frames is shorter than the {window}-frame metric "
            "window; no samples",
            ShortClipWarning,
            stacklevel=2,
        )
        return []
    return [list(frames[i : i + window]) for i in range(0, n - window + 1, window)]
