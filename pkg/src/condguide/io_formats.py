"""Readers/writers for every interchange format, with round-trip guarantees.

Custom binary formats carry a 4-byte ASCII magic and little-endian u32
dimensions regardless of host byte order:

  CGFL  flow field      magic, u32 width, u32 height, H*W f32 (u, v) pairs
  CGGM  guidance map    CGFL layout under its own magic, then H*W mask bytes
  CGFS  feature vectors magic, u32 count, u32 dim, count*dim f32

Rasters follow the package-wide row-major, top-left-origin convention; PFM
files are converted from/to their native bottom-up row order on the way
through. All file writes are atomic (temp file + rename).
"""

from __future__ import annotations

import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .depth_order import CharacterRank, DepthOrderMap
from .errors import FormatError, ShapeError
from .flow import FlowGuidanceMap
from .pose import PoseSequence, parse_pose_sequence, serialize_pose_sequence
from .raster import BinaryMask, DepthConvention, DepthRaster, FlowField, Raster

__all__ = [
    "atomic_write_bytes",
    "encode_cgfl", "decode_cgfl", "read_cgfl", "write_cgfl",
    "encode_cggm", "decode_cggm", "read_cggm", "write_cggm",
    "encode_cgfs", "decode_cgfs", "read_cgfs", "write_cgfs",
    "encode_pfm", "decode_pfm", "read_pfm", "write_pfm",
    "read_pose_file", "write_pose_file",
    "read_mask_png", "write_mask_png",
    "read_image", "write_image",
    "read_depth_png16", "write_depth_png16",
    "read_depth_pfm",
    "write_order_map_png",
    "write_ranks_json", "ranks_to_json_obj",
    "ManifestClip", "read_manifest", "write_manifest",
]

_MAGIC_FLOW = b"CGFL"
_MAGIC_GUIDANCE = b"CGGM"
_MAGIC_FEATURES = b"CGFS"

# Visualization colors assigned to level values in front-to-back order.
_ORDER_PALETTE = (
    (255, 221, 0), (229, 57, 53), (66, 133, 244), (52, 168, 83),
    (171, 71, 188), (0, 188, 212), (255, 112, 67), (120, 144, 156),
)


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _take(buf: bytes, offset: int, count: int, what: str) -> tuple[bytes, int]:
    if offset + count > len(buf):
        raise FormatError(
            f"truncated while reading {what}: need {count} bytes, have "
            f"{len(buf) - offset}",
            offset=offset,
        )
    return buf[offset : offset + count], offset + count


def _check_magic(buf: bytes, magic: bytes) -> int:
    got, offset = _take(buf, 0, 4, "magic")
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}", offset=0)
    return offset


def _read_u32(buf: bytes, offset: int, what: str) -> tuple[int, int]:
    raw, offset = _take(buf, offset, 4, what)
    return struct.unpack("<I", raw)[0], offset


def _check_consumed(buf: bytes, offset: int) -> None:
    if offset != len(buf):
        raise FormatError(
            f"{len(buf) - offset} unexpected trailing bytes", offset=offset
        )


def _check_finite(arr: np.ndarray, offset: int, what: str) -> None:
    if not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr.reshape(-1)))[0])
        raise FormatError(
            f"non-finite value in {what} at element {bad}", offset=offset + 4 * bad
        )


# ---------------------------------------------------------------------------
# CGFL / CGGM / CGFS


def encode_cgfl(flow: FlowField) -> bytes:
    header = _MAGIC_FLOW + struct.pack("<II", flow.width, flow.height)
    return header + flow.data.astype("<f4").tobytes()


def decode_cgfl(buf: bytes) -> FlowField:
    offset = _check_magic(buf, _MAGIC_FLOW)
    width, offset = _read_u32(buf, offset, "width")
    height, offset = _read_u32(buf, offset, "height")
    if width < 1 or height < 1:
        raise FormatError(f"bad dimensions {width}x{height}", offset=4)
    payload_at = offset
    raw, offset = _take(buf, offset, width * height * 8, "flow payload")
    _check_consumed(buf, offset)
    arr = np.frombuffer(raw, dtype="<f4").reshape(height, width, 2)
    _check_finite(arr, payload_at, "flow payload")
    return FlowField(arr.astype(np.float32))


def write_cgfl(flow: FlowField, path: str | Path) -> None:
    atomic_write_bytes(path, encode_cgfl(flow))


def read_cgfl(path: str | Path) -> FlowField:
    return decode_cgfl(Path(path).read_bytes())


def encode_cggm(gmap: FlowGuidanceMap) -> bytes:
    header = _MAGIC_GUIDANCE + struct.pack("<II", gmap.width, gmap.height)
    values = gmap.values.data.astype("<f4").tobytes()
    return header + values + gmap.mask.plane().astype(np.uint8).tobytes()


def decode_cggm(buf: bytes) -> FlowGuidanceMap:
    offset = _check_magic(buf, _MAGIC_GUIDANCE)
    width, offset = _read_u32(buf, offset, "width")
    height, offset = _read_u32(buf, offset, "height")
    if width < 1 or height < 1:
        raise FormatError(f"bad dimensions {width}x{height}", offset=4)
    values_at = offset
    raw, offset = _take(buf, offset, width * height * 8, "guidance payload")
    mask_at = offset
    mask_raw, offset = _take(buf, offset, width * height, "mask block")
    _check_consumed(buf, offset)
    values = np.frombuffer(raw, dtype="<f4").reshape(height, width, 2)
    _check_finite(values, values_at, "guidance payload")
    mask = np.frombuffer(mask_raw, dtype=np.uint8).reshape(height, width)
    if not np.isin(mask, (0, 1)).all():
        bad = int(np.flatnonzero(~np.isin(mask.reshape(-1), (0, 1)))[0])
        raise FormatError(f"mask byte not 0/1 at element {bad}", offset=mask_at + bad)
    try:
        return FlowGuidanceMap(
            values=Raster(values.astype(np.float32)), mask=BinaryMask(mask)
        )
    except ShapeError as exc:
        raise FormatError(f"inconsistent guidance map: {exc}", offset=values_at) from exc


def write_cggm(gmap: FlowGuidanceMap, path: str | Path) -> None:
    atomic_write_bytes(path, encode_cggm(gmap))


def read_cggm(path: str | Path) -> FlowGuidanceMap:
    return decode_cggm(Path(path).read_bytes())


def encode_cgfs(vectors: np.ndarray) -> bytes:
    arr = np.asarray(vectors, dtype=np.float32)
    if arr.ndim != 2:
        raise ShapeError(f"feature array must be (N, d), got {arr.shape}")
    header = _MAGIC_FEATURES + struct.pack("<II", arr.shape[0], arr.shape[1])
    return header + arr.astype("<f4").tobytes()


def decode_cgfs(buf: bytes) -> np.ndarray:
    offset = _check_magic(buf, _MAGIC_FEATURES)
    count, offset = _read_u32(buf, offset, "count")
    dim, offset = _read_u32(buf, offset, "dim")
    if count < 1 or dim < 1:
        raise FormatError(f"bad feature shape {count}x{dim}", offset=4)
    payload_at = offset
    raw, offset = _take(buf, offset, count * dim * 4, "feature payload")
    _check_consumed(buf, offset)
    arr = np.frombuffer(raw, dtype="<f4").reshape(count, dim)
    _check_finite(arr, payload_at, "feature payload")
    return arr.astype(np.float32)


def write_cgfs(vectors: np.ndarray, path: str | Path) -> None:
    atomic_write_bytes(path, encode_cgfs(vectors))


def read_cgfs(path: str | Path) -> np.ndarray:
    return decode_cgfs(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# PFM (portable float map)


def encode_pfm(raster: Raster, little_endian: bool = True) -> bytes:
    """1-channel 'Pf' or 3-channel 'PF'; rows stored bottom-up per the format."""
    if raster.channels not in (1, 3):
        raise ShapeError(f"PFM holds 1 or 3 channels, got {raster.channels}")
    magic = b"Pf" if raster.channels == 1 else b"PF"
    scale = -1.0 if little_endian else 1.0
    header = magic + b"\n" + f"{raster.width} {raster.height}\n{scale}\n".encode()
    data = raster.data.astype("<f4" if little_endian else ">f4")
    return header + data[::-1].tobytes()


def decode_pfm(buf: bytes) -> Raster:
    tokens = []
    offset = 0
    while len(tokens) < 4:
        end = offset
        while end < len(buf) and buf[end : end + 1] not in b" \t\r\n":
            end += 1
        if end == offset:
            if end >= len(buf):
                raise FormatError("truncated PFM header", offset=offset)
            offset += 1
            continue
        tokens.append(buf[offset:end])
        offset = end
    offset += 1  # single whitespace after the scale token
    magic, width_tok, height_tok, scale_tok = tokens
    if magic not in (b"Pf", b"PF"):
        raise FormatError(f"bad PFM magic {magic!r}", offset=0)
    channels = 1 if magic == b"Pf" else 3
    try:
        width, height = int(width_tok), int(height_tok)
        scale = float(scale_tok)
    except ValueError as exc:
        raise FormatError(f"bad PFM header field: {exc}", offset=2) from exc
    if width < 1 or height < 1 or scale == 0.0:
        raise FormatError(f"bad PFM header {width}x{height} scale {scale}", offset=2)
    count = width * height * channels
    raw, end = _take(buf, offset, count * 4, "PFM payload")
    _check_consumed(buf, end)
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(raw, dtype=dtype).reshape(height, width, channels)
    arr = arr[::-1].astype(np.float32)
    _check_finite(arr, offset, "PFM payload")
    return Raster(arr)


def write_pfm(raster: Raster, path: str | Path) -> None:
    atomic_write_bytes(path, encode_pfm(raster))


def read_pfm(path: str | Path) -> Raster:
    return decode_pfm(Path(path).read_bytes())


def read_depth_pfm(
    path: str | Path,
    convention: DepthConvention = DepthConvention.LARGER_IS_CLOSER,
) -> DepthRaster:
    raster = read_pfm(path)
    if raster.channels != 1:
        raise FormatError(f"depth PFM must be grayscale, got {raster.channels}ch")
    return DepthRaster(raster.data, convention=convention)


# ---------------------------------------------------------------------------
# PNG


def write_mask_png(mask: BinaryMask, path: str | Path) -> None:
    """8-bit grayscale PNG holding 0/255."""
    img = Image.fromarray(mask.plane() * np.uint8(255), mode="L")
    _atomic_save_png(img, path)


def read_mask_png(path: str | Path) -> BinaryMask:
    with Image.open(path) as img:
        if img.mode != "L":
            raise FormatError(f"mask PNG must be 8-bit grayscale, got {img.mode}")
        arr = np.asarray(img, dtype=np.uint8)
    if not np.isin(arr, (0, 255)).all():
        raise FormatError("mask PNG pixels must be exactly 0 or 255")
    return BinaryMask((arr // 255).astype(np.uint8))


def write_image(raster: Raster, path: str | Path) -> None:
    """[0, 1] float raster (1 or 3 channels) to an 8-bit PNG."""
    if raster.channels not in (1, 3):
        raise ShapeError(f"image PNG holds 1 or 3 channels, got {raster.channels}")
    arr = np.clip(raster.data.astype(np.float64), 0.0, 1.0)
    arr = np.rint(arr * 255.0).astype(np.uint8)
    if raster.channels == 1:
        img = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        img = Image.fromarray(arr, mode="RGB")
    _atomic_save_png(img, path)


def read_image(path: str | Path) -> Raster:
    """8-bit PNG (or other PIL-readable image) to a [0, 1] float32 raster."""
    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.float32)[:, :, np.newaxis]
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    return Raster(arr / np.float32(255.0))


def write_depth_png16(depth: DepthRaster, path: str | Path, scale: float = 1.0) -> None:
    """Quantize depth/scale into a 16-bit grayscale PNG."""
    if scale <= 0:
        raise FormatError(f"depth scale must be positive, got {scale}")
    raw = np.rint(depth.plane().astype(np.float64) / scale)
    if raw.min() < 0 or raw.max() > 65535:
        raise FormatError(
            f"depth values / scale outside u16 range: [{raw.min()}, {raw.max()}]"
        )
    img = Image.fromarray(raw.astype(np.uint16))  # PIL infers I;16
    _atomic_save_png(img, path)


def read_depth_png16(
    path: str | Path,
    scale: float = 1.0,
    convention: DepthConvention = DepthConvention.LARGER_IS_CLOSER,
) -> DepthRaster:
    with Image.open(path) as img:
        if img.mode not in ("I", "I;16"):
            raise FormatError(f"expected 16-bit grayscale PNG, got mode {img.mode}")
        arr = np.asarray(img, dtype=np.float64)
    return DepthRaster((arr * scale).astype(np.float32), convention=convention)


def write_order_map_png(order_map: DepthOrderMap, path: str | Path) -> None:
    """Visualization: background black, levels colored front-to-back."""
    plane = order_map.plane()
    values = sorted({float(v) for v in np.unique(plane) if v != 0.0}, reverse=True)
    out = np.zeros(plane.shape + (3,), dtype=np.uint8)
    for i, value in enumerate(values):
        out[plane == np.float32(value)] = _ORDER_PALETTE[i % len(_ORDER_PALETTE)]
    _atomic_save_png(Image.fromarray(out, mode="RGB"), path)


def _atomic_save_png(img: Image.Image, path: str | Path) -> None:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())


# ---------------------------------------------------------------------------
# Pose JSON, rank sidecars, manifests


def read_pose_file(path: str | Path) -> PoseSequence:
    return parse_pose_sequence(Path(path).read_bytes())


def write_pose_file(seq: PoseSequence, path: str | Path) -> None:
    atomic_write_bytes(path, serialize_pose_sequence(seq))


def ranks_to_json_obj(ranks: list[CharacterRank]) -> list[dict]:
    return [
        {
            "character_id": r.character_id,
            "mean_depth": None if np.isnan(r.mean_depth) else r.mean_depth,
            "rank": r.rank,
            "level_value": r.level_value,
        }
        for r in ranks
    ]


def write_ranks_json(per_frame_ranks: list[list[CharacterRank]], path: str | Path) -> None:
    obj = {
        "frames": [
            {"frame": i, "ranks": ranks_to_json_obj(ranks)}
            for i, ranks in enumerate(per_frame_ranks)
        ]
    }
    atomic_write_bytes(
        path, json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    )


@dataclass(frozen=True)
class ManifestClip:
    """One clip entry of an analysis manifest; paths resolved to the manifest."""

    clip_id: str
    pose_path: Path
    frames_dir: Path | None = None
    flow_dir: Path | None = None


def write_manifest(clips: list[ManifestClip], path: str | Path) -> None:
    """Paths are written relative to the manifest's directory when possible."""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p: Path | None):
        if p is None:
            return None
        p = Path(p)
        try:
            return p.resolve().relative_to(base).as_posix()
        except ValueError:
            return p.as_posix()

    obj = {
        "clips": [
            {
                k: v
                for k, v in {
                    "id": c.clip_id,
                    "pose": rel(c.pose_path),
                    "frames_dir": rel(c.frames_dir),
                    "flow_dir": rel(c.flow_dir),
                }.items()
                if v is not None
            }
            for c in clips
        ]
    }
    atomic_write_bytes(
        path, json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    )


def read_manifest(path: str | Path) -> list[ManifestClip]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid manifest JSON: {exc}") from exc
    clips = obj.get("clips") if isinstance(obj, dict) else obj
    if not isinstance(clips, list):
        raise FormatError("manifest must be a list of clips or {'clips': [...]}")
    base = path.parent
    out = []
    for i, entry in enumerate(clips):
        try:
            out.append(
                ManifestClip(
                    clip_id=str(entry["id"]),
                    pose_path=base / entry["pose"],
                    frames_dir=base / entry["frames_dir"] if entry.get("frames_dir") else None,
                    flow_dir=base / entry["flow_dir"] if entry.get("flow_dir") else None,
                )
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad manifest clip {i}: {exc}") from exc
    return out
