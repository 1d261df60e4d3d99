"""Domain types for 2D skeleton keypoint data.

Everything here is an immutable value; all operations are pure. Coordinates
are stored in pixel units of the owning pose's canvas (normalized data is
converted at the I/O boundary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ValidationError

# A keypoint whose detection score is at or below this is MISSING.
DEFAULT_SCORE_THRESHOLD = 0.05

BODY_JOINT_COUNT = 18
HAND_JOINT_COUNT = 21
FACE_JOINT_COUNT = 68

# OpenPose BODY-18 (COCO) joint ordering. DWPose body output follows the same
# 18-joint convention, so one table serves both detectors.
BODY_18_NAMES = (
    "nose", "neck",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
    "r_eye", "l_eye", "r_ear", "l_ear",
)

NOSE, NECK = 0, 1
R_WRIST, L_WRIST = 4, 7
R_ELBOW, L_ELBOW = 3, 6

# BODY-25 source index for each BODY-18 joint: drops 8 (mid-hip) and 19-24
# (feet); hip/leg/face indices shift down by one.
BODY18_FROM_BODY25 = (0, 1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18)


@dataclass(frozen=True)
class Keypoint2D:
    """One 2D joint: pixel coordinates plus detection score in [0, 1]."""

    x: float
    y: float
    score: float

    @property
    def missing(self) -> bool:
        return self.score <= DEFAULT_SCORE_THRESHOLD

    @staticmethod
    def absent() -> "Keypoint2D":
        """The canonical MISSING sentinel: no usable coordinates."""
        return _MISSING


_MISSING = Keypoint2D(-1.0, -1.0, 0.0)


def _canonical(kp: Keypoint2D, threshold: float = DEFAULT_SCORE_THRESHOLD) -> Keypoint2D:
    """Collapse sub-threshold keypoints onto the MISSING sentinel."""
    if kp.score <= threshold:
        return _MISSING
    return kp


def _check_group(kps: Sequence[Keypoint2D], expect: int, what: str) -> tuple[Keypoint2D, ...]:
    if len(kps) != expect:
        raise ValidationError(f"{what} must have exactly {expect} keypoints, got {len(kps)}")
    out = []
    for idx, kp in enumerate(kps):
        if not isinstance(kp, Keypoint2D):
            kp = Keypoint2D(float(kp[0]), float(kp[1]), float(kp[2]))
        kp = _canonical(kp)
        if not kp.missing and not (math.isfinite(kp.x) and math.isfinite(kp.y)):
            raise ValidationError(f"{what}[{idx}]: non-missing keypoint has non-finite coordinates")
        out.append(kp)
    return tuple(out)


@dataclass(frozen=True)
class Pose:
    """One frame's full skeleton in pixel units of ``canvas``.

    ``body`` always holds 18 joints in BODY-18 order; hands and face are
    optional blocks of fixed size. Construction canonicalizes sub-threshold
    keypoints to the MISSING sentinel and rejects non-finite coordinates.
    Canvas bounds are deliberately not enforced here (retargeted joints may
    leave the frame); parsers apply :func:`check_canvas_bounds`.
    """

    body: tuple[Keypoint2D, ...]
    canvas: tuple[int, int]
    hand_left: Optional[tuple[Keypoint2D, ...]] = None
    hand_right: Optional[tuple[Keypoint2D, ...]] = None
    face: Optional[tuple[Keypoint2D, ...]] = None

    def __post_init__(self):
        w, h = self.canvas
        if not (isinstance(w, int) and isinstance(h, int)) or w <= 0 or h <= 0:
            raise ValidationError(f"canvas must be positive integer pixels, got {self.canvas!r}")
        object.__setattr__(self, "canvas", (w, h))
        object.__setattr__(self, "body", _check_group(self.body, BODY_JOINT_COUNT, "body"))
        for name, expect in (("hand_left", HAND_JOINT_COUNT),
                             ("hand_right", HAND_JOINT_COUNT),
                             ("face", FACE_JOINT_COUNT)):
            group = getattr(self, name)
            if group is not None:
                object.__setattr__(self, name, _check_group(group, expect, name))

    def keypoint_groups(self):
        """Yield (name, keypoints) for every present block, body first."""
        yield "body", self.body
        for name in ("hand_left", "hand_right", "face"):
            group = getattr(self, name)
            if group is not None:
                yield name, group


def check_canvas_bounds(pose: Pose, frame_index: Optional[int] = None) -> None:
    """Reject wild coordinates: non-missing joints must lie within
    [-0.5*dim, 1.5*dim] of the canvas (modest out-of-frame is tolerated)."""
    w, h = pose.canvas
    where = "" if frame_index is None else f"frame {frame_index}, "
    for name, group in pose.keypoint_groups():
        for idx, kp in enumerate(group):
            if kp.missing:
                continue
            if not (-0.5 * w <= kp.x <= 1.5 * w and -0.5 * h <= kp.y <= 1.5 * h):
                raise ValidationError(
                    f"{where}{name}[{idx}]: coordinate ({kp.x}, {kp.y}) is wildly "
                    f"outside the {w}x{h} canvas"
                )


@dataclass(frozen=True)
class PoseSequence:
    """Ordered frames sharing one canvas size; M >= 1."""

    frames: tuple[Pose, ...]
    fps: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 1:
            raise ValidationError("a pose sequence needs at least one frame")
        if self.fps is not None and not (self.fps > 0):
            raise ValidationError(f"fps must be positive, got {self.fps}")
        canvas = self.frames[0].canvas
        bad = [i for i, f in enumerate(self.frames) if f.canvas != canvas]
        if bad:
            raise ValidationError(
                f"all frames must share one canvas size {canvas}; "
                f"mismatched frame indices: {bad}"
            )

    @property
    def canvas(self) -> tuple[int, int]:
        return self.frames[0].canvas

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class LimbTopology:
    """Ordered parent->child edges forming a tree rooted at the neck.

    List order is both the traversal order for retargeting and the drawing
    order for rendering.
    """

    edges: tuple[tuple[int, int], ...]
    name: str = "body18"

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(p), int(c)) for p, c in self.edges))
        reachable = {NECK}
        seen_children = set()
        for k, (parent, child) in enumerate(self.edges):
            if not (0 <= parent < BODY_JOINT_COUNT and 0 <= child < BODY_JOINT_COUNT):
                raise ValidationError(f"edge {k} ({parent},{child}) is out of joint range")
            if parent not in reachable:
                raise ValidationError(
                    f"edge {k} ({parent},{child}): parent not reached by an earlier edge"
                )
            if child == NECK or child in seen_children:
                raise ValidationError(f"edge {k} ({parent},{child}): duplicate child index")
            seen_children.add(child)
            reachable.add(child)

    def __len__(self) -> int:
        return len(self.edges)

    def edge_index(self, parent: int, child: int) -> Optional[int]:
        for k, edge in enumerate(self.edges):
            if edge == (parent, child):
                return k
        return None


# Default 17-edge traversal rooted at the neck: arms, legs, head chain.
BODY_18_TOPOLOGY = LimbTopology(edges=(
    (1, 2), (2, 3), (3, 4),
    (1, 5), (5, 6), (6, 7),
    (1, 8), (8, 9), (9, 10),
    (1, 11), (11, 12), (12, 13),
    (1, 0), (0, 14), (14, 16), (0, 15), (15, 17),
))


def denormalize(pose: Pose) -> Pose:
    """Scale a pose whose coordinates are in normalized [0,1] units up to
    pixel units of its canvas. MISSING keypoints are preserved."""
    w, h = pose.canvas

    def scale(group):
        if group is None:
            return None
        return tuple(
            kp if kp.missing else Keypoint2D(kp.x * w, kp.y * h, kp.score)
            for kp in group
        )

    return Pose(
        body=scale(pose.body),
        canvas=pose.canvas,
        hand_left=scale(pose.hand_left),
        hand_right=scale(pose.hand_right),
        face=scale(pose.face),
    )
