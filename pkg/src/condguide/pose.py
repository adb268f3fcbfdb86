"""Pose sequences: parsing, per-character keypoint access, and skeleton rendering.

Pose maps are drawn with exact distance predicates instead of scanline
rasterization: a pixel belongs to a limb segment iff its center lies within
half the line thickness of the segment, and to a joint iff it lies within
the joint radius. Pixel centers sit at integer coordinates in the same
top-left-origin, y-down pixel space the keypoints use. This makes renders
deterministic and directly checkable against brute-force per-pixel oracles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, PoseParseError
from .raster import Raster, _freeze

__all__ = [
    "DEFAULT_CONFIDENCE_THRESHOLD",
    "SkeletonTopology",
    "CharacterPose",
    "PoseFrame",
    "PoseSequence",
    "RenderParams",
    "default_topology",
    "parse_pose_sequence",
    "serialize_pose_sequence",
    "render_pose_map",
    "reference_pose_map",
]

# Drawing/flagging confidence cut. The source material never states one;
# this is a named default, not an estimate of anyone else's choice.
DEFAULT_CONFIDENCE_THRESHOLD = 0.3

# Hue wheel shared by joints and limbs, one entry per joint index.
_PALETTE = (
    (255, 0, 0), (255, 85, 0), (255, 170, 0), (255, 255, 0), (170, 255, 0),
    (85, 255, 0), (0, 255, 0), (0, 255, 85), (0, 255, 170), (0, 255, 255),
    (0, 170, 255), (0, 85, 255), (0, 0, 255), (85, 0, 255), (170, 0, 255),
    (255, 0, 255), (255, 0, 170), (255, 0, 85),
)

_BODY18_NAMES = (
    "nose", "neck", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
    "l_elbow", "l_wrist", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee",
    "l_ankle", "r_eye", "l_eye", "r_ear", "l_ear",
)

_BODY18_EDGES = (
    (1, 2), (1, 5), (2, 3), (3, 4), (5, 6), (6, 7), (1, 8), (8, 9), (9, 10),
    (1, 11), (11, 12), (12, 13), (1, 0), (0, 14), (14, 16), (0, 15), (15, 17),
)


@dataclass(frozen=True)
class SkeletonTopology:
    """Joint/limb layout plus the fixed color palette used for rendering."""

    joint_count: int
    edges: tuple[tuple[int, int], ...]
    joint_names: tuple[str, ...]
    joint_colors: tuple[tuple[int, int, int], ...]
    edge_colors: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.joint_count < 1:
            raise ArgumentError("topology needs at least one joint")
        if len(self.joint_names) != self.joint_count:
            raise ArgumentError("joint_names length must equal joint_count")
        if len(self.joint_colors) != self.joint_count:
            raise ArgumentError("joint_colors length must equal joint_count")
        if len(self.edge_colors) != len(self.edges):
            raise ArgumentError("edge_colors length must equal edge count")
        for a, b in self.edges:
            if not (0 <= a < self.joint_count and 0 <= b < self.joint_count):
                raise ArgumentError(f"edge ({a}, {b}) references unknown joint")
            if a == b:
                raise ArgumentError(f"self-loop edge ({a}, {b}) not allowed")


def default_topology() -> SkeletonTopology:
    """18-joint body skeleton with a 17-edge limb list and distinct hues."""
    return SkeletonTopology(
        joint_count=18,
        edges=_BODY18_EDGES,
        joint_names=_BODY18_NAMES,
        joint_colors=_PALETTE,
        edge_colors=_PALETTE[: len(_BODY18_EDGES)],
    )


@dataclass(frozen=True, eq=False)
class CharacterPose:
    """One character's keypoints in a frame: (J, 3) float32 rows of x, y, conf."""

    character_id: int
    keypoints: np.ndarray
    low_confidence: bool = False

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=np.float32)
        if kp.ndim != 2 or kp.shape[1] != 3:
            raise ArgumentError(f"keypoints must be (J, 3), got {kp.shape}")
        if not np.isfinite(kp).all():
            raise ArgumentError("keypoints must be finite")
        conf = kp[:, 2]
        if (conf < 0).any() or (conf > 1).any():
            raise ArgumentError("confidences must lie in [0, 1]")
        object.__setattr__(self, "keypoints", _freeze(kp))

    @property
    def joint_count(self) -> int:
        return self.keypoints.shape[0]

    def xy(self) -> np.ndarray:
        return self.keypoints[:, :2]

    def confidence(self) -> np.ndarray:
        return self.keypoints[:, 2]


@dataclass(frozen=True)
class PoseFrame:
    """All characters of one frame, in a fixed raster extent."""

    characters: tuple[CharacterPose, ...]
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "characters", tuple(self.characters))
        if self.width < 1 or self.height < 1:
            raise ArgumentError("frame extent must be positive")
        ids = [c.character_id for c in self.characters]
        if len(set(ids)) != len(ids):
            raise ArgumentError(f"duplicate character ids in frame: {sorted(ids)}")


@dataclass(frozen=True)
class PoseSequence:
    """Frames sharing one topology and one resolution."""

    frames: tuple[PoseFrame, ...]
    topology: SkeletonTopology

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ArgumentError("pose sequence needs at least one frame")
        w, h = self.frames[0].width, self.frames[0].height
        for i, f in enumerate(self.frames):
            if f.width != w or f.height != h:
                raise ArgumentError(f"frame {i} resolution differs from frame 0")
            for c in f.characters:
                if c.joint_count != self.topology.joint_count:
                    raise ArgumentError(
                        f"frame {i} character {c.character_id} has "
                        f"{c.joint_count} joints, topology expects "
                        f"{self.topology.joint_count}"
                    )

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def subsequence(self, start: int, length: int) -> "PoseSequence":
        if start < 0 or length < 1 or start + length > len(self.frames):
            raise ArgumentError(
                f"window [{start}, {start + length}) outside sequence of "
                f"{len(self.frames)} frames"
            )
        return PoseSequence(self.frames[start : start + length], self.topology)


@dataclass(frozen=True)
class RenderParams:
    """Skeleton drawing parameters.

    Thickness and radius are specified at a 512-pixel-wide reference frame
    and scale linearly with the actual frame width, so maps rendered at
    different resolutions stay comparable.
    """

    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    line_thickness_512: float = 4.0
    joint_radius_512: float = 4.0

    def thickness(self, width: int) -> float:
        return self.line_thickness_512 * width / 512.0

    def radius(self, width: int) -> float:
        return self.joint_radius_512 * width / 512.0


# ---------------------------------------------------------------------------
# Pose-JSON parsing / serialization


def _parse_topology(obj) -> SkeletonTopology:
    try:
        return SkeletonTopology(
            joint_count=int(obj["joint_count"]),
            edges=tuple((int(a), int(b)) for a, b in obj["edges"]),
            joint_names=tuple(str(n) for n in obj["joint_names"]),
            joint_colors=tuple(tuple(int(v) for v in c) for c in obj["joint_colors"]),
            edge_colors=tuple(tuple(int(v) for v in c) for c in obj["edge_colors"]),
        )
    except (KeyError, TypeError, ValueError, ArgumentError) as exc:
        raise PoseParseError(f"bad topology: {exc}") from exc


def parse_pose_sequence(
    data: bytes | str,
    confidence_floor: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> PoseSequence:
    """Parse the pose-JSON interchange format.

    Characters whose best joint confidence falls below ``confidence_floor``
    are retained but flagged ``low_confidence``.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PoseParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise PoseParseError("top level must be an object")
    for key in ("topology", "frames", "width", "height"):
        if key not in obj:
            raise PoseParseError(f"missing top-level key {key!r}")
    topology = _parse_topology(obj["topology"])
    width, height = int(obj["width"]), int(obj["height"])
    if width < 1 or height < 1:
        raise PoseParseError(f"bad resolution {width}x{height}")
    raw_frames = obj["frames"]
    if not isinstance(raw_frames, list) or not raw_frames:
        raise PoseParseError("no frames")

    frames = []
    for i, rf in enumerate(raw_frames):
        chars = []
        seen_ids = set()
        for rc in rf.get("characters", []):
            try:
                cid = int(rc["id"])
                kp = np.asarray(rc["keypoints"], dtype=np.float32)
            except (KeyError, TypeError, ValueError) as exc:
                raise PoseParseError(f"bad character record: {exc}", frame_index=i)
            if cid in seen_ids:
                raise PoseParseError(f"duplicate character id {cid}", frame_index=i)
            seen_ids.add(cid)
            if kp.ndim != 2 or kp.shape != (topology.joint_count, 3):
                raise PoseParseError(
                    f"character {cid} keypoints shape {kp.shape} does not match "
                    f"topology joint count {topology.joint_count}",
                    frame_index=i,
                )
            try:
                conf = kp[:, 2]
                low = bool(conf.size == 0 or float(conf.max()) < confidence_floor)
                chars.append(
                    CharacterPose(character_id=cid, keypoints=kp, low_confidence=low)
                )
            except ArgumentError as exc:
                raise PoseParseError(str(exc), frame_index=i) from exc
        frames.append(PoseFrame(characters=tuple(chars), width=width, height=height))
    return PoseSequence(frames=tuple(frames), topology=topology)


def serialize_pose_sequence(seq: PoseSequence) -> bytes:
    """Canonical UTF-8 pose-JSON bytes; parse(serialize(s)) reproduces s."""
    topo = seq.topology
    obj = {
        "topology": {
            "joint_count": topo.joint_count,
            "edges": [list(e) for e in topo.edges],
            "joint_names": list(topo.joint_names),
            "joint_colors": [list(c) for c in topo.joint_colors],
            "edge_colors": [list(c) for c in topo.edge_colors],
        },
        "width": seq.width,
        "height": seq.height,
        "frames": [
            {
                "characters": [
                    {
                        "id": c.character_id,
                        "keypoints": [
                            [float(x), float(y), float(conf)]
                            for x, y, conf in c.keypoints
                        ],
                    }
                    for c in f.characters
                ]
            }
            for f in seq.frames
        ],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


# ---------------------------------------------------------------------------
# Rendering


def _paint_disk(img, cx, cy, radius, color):
    h, w = img.shape[:2]
    x0 = max(0, int(np.floor(cx - radius)))
    x1 = min(w - 1, int(np.ceil(cx + radius)))
    y0 = max(0, int(np.floor(cy - radius)))
    y1 = min(h - 1, int(np.ceil(cy + radius)))
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    dx = xs[np.newaxis, :] - cx
    dy = ys[:, np.newaxis] - cy
    hit = dx * dx + dy * dy <= radius * radius
    img[y0 : y1 + 1, x0 : x1 + 1][hit] = color


def _paint_segment(img, ax, ay, bx, by, half_thickness, color):
    denom = (bx - ax) * (bx - ax) + (by - ay) * (by - ay)
    if denom == 0.0:
        _paint_disk(img, ax, ay, half_thickness, color)
        return
    h, w = img.shape[:2]
    pad = half_thickness
    x0 = max(0, int(np.floor(min(ax, bx) - pad)))
    x1 = min(w - 1, int(np.ceil(max(ax, bx) + pad)))
    y0 = max(0, int(np.floor(min(ay, by) - pad)))
    y1 = min(h - 1, int(np.ceil(max(ay, by) + pad)))
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    px = np.broadcast_to(xs[np.newaxis, :], (ys.size, xs.size))
    py = np.broadcast_to(ys[:, np.newaxis], (ys.size, xs.size))
    t = ((px - ax) * (bx - ax) + (py - ay) * (by - ay)) / denom
    t = np.clip(t, 0.0, 1.0)
    ddx = px - (ax + t * (bx - ax))
    ddy = py - (ay + t * (by - ay))
    hit = ddx * ddx + ddy * ddy <= half_thickness * half_thickness
    img[y0 : y1 + 1, x0 : x1 + 1][hit] = color


def render_pose_map(
    frame: PoseFrame,
    topology: SkeletonTopology | None = None,
    params: RenderParams = RenderParams(),
) -> Raster:
    """Draw the frame's skeletons on black: 3-channel float32 RGB in [0, 1].

    Paint order is deterministic: characters in frame order; per character,
    limb segments in topology edge order, then joint disks in joint-index
    order. Joints below the confidence threshold are omitted together with
    their incident edges; out-of-bounds keypoints clip naturally.
    """
    if topology is None:
        topology = default_topology()
    img = np.zeros((frame.height, frame.width, 3), dtype=np.float32)
    half = params.thickness(frame.width) / 2.0
    radius = params.radius(frame.width)
    for character in frame.characters:
        kp = character.keypoints.astype(np.float64)
        visible = kp[:, 2] >= params.confidence_threshold
        for e, (a, b) in enumerate(topology.edges):
            if not (visible[a] and visible[b]):
                continue
            color = np.asarray(topology.edge_colors[e], dtype=np.float32) / 255.0
            _paint_segment(img, kp[a, 0], kp[a, 1], kp[b, 0], kp[b, 1], half, color)
        for j in range(topology.joint_count):
            if not visible[j]:
                continue
            color = np.asarray(topology.joint_colors[j], dtype=np.float32) / 255.0
            _paint_disk(img, kp[j, 0], kp[j, 1], radius, color)
    return Raster(img)


def reference_pose_map(
    reference_keypoints: PoseFrame,
    topology: SkeletonTopology | None = None,
    params: RenderParams = RenderParams(),
) -> Raster:
    """Pose map of the reference image's (externally extracted) keypoints.

    Identical function to :func:`render_pose_map`, which is the point: the
    reference map and the per-frame driving maps share one format.
    """
    return render_pose_map(reference_keypoints, topology, params)
