"""Synthetic articulated skeletons for demos and tests.

Sequences are built from a fixed bone-length table (fractions of canvas
height) with sinusoidal joint angles, so every frame of a sequence has
exactly the same bone lengths — a convenient ground truth for checking
ratio transfer. All coordinates are ``scale * base``, hence doubling the
scale doubles every coordinate exactly. Deterministic given a seed.
"""

from __future__ import annotations

import math
import random
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .model import (
    BODY_18_TOPOLOGY,
    BODY_JOINT_COUNT,
    L_ELBOW,
    L_WRIST,
    LimbTopology,
    NECK,
    NOSE,
    Keypoint2D,
    Pose,
    PoseSequence,
    R_ELBOW,
    R_WRIST,
)

MOTIONS = ("walk", "wave", "squat")

_BODY_SCORE = 0.95
_HAND_SCORE = 0.9
_FACE_SCORE = 0.9

# Bone lengths as fractions of canvas height; indices follow BODY_18_TOPOLOGY
# edge order. Sized so that scale=2 keeps every joint within the tolerated
# [-0.5, 1.5] * canvas band.
_BONE_FRACTIONS = (
    0.070,  # neck -> r_shoulder
    0.100,  # r_shoulder -> r_elbow
    0.090,  # r_elbow -> r_wrist
    0.070,  # neck -> l_shoulder
    0.100,  # l_shoulder -> l_elbow
    0.090,  # l_elbow -> l_wrist
    0.180,  # neck -> r_hip
    0.130,  # r_hip -> r_knee
    0.120,  # r_knee -> r_ankle
    0.180,  # neck -> l_hip
    0.130,  # l_hip -> l_knee
    0.120,  # l_knee -> l_ankle
    0.070,  # neck -> nose
    0.030,  # nose -> r_eye
    0.030,  # r_eye -> r_ear
    0.030,  # nose -> l_eye
    0.030,  # l_eye -> l_ear
)

_DOWN = math.pi / 2
_UP = -math.pi / 2


def _joint_angles(motion: str, t: float, rng_phase: dict[str, float]) -> dict[int, float]:
    """Absolute edge directions (radians, y-down) for one frame.

    Keyed by topology edge index. ``t`` is the frame phase in [0, 1).
    """
    tau = 2 * math.pi
    p = rng_phase

    # Static head fan shared by all motions.
    angles = {
        12: _UP,                  # neck -> nose
        13: _UP - 2.2,            # nose -> r_eye (up-left)
        14: math.pi + 0.35,       # r_eye -> r_ear
        15: _UP + 2.2,            # nose -> l_eye
        16: -0.35,                # l_eye -> l_ear
    }
    # Shoulders slope slightly downward; right side points toward -x.
    angles[0] = math.pi - 0.18
    angles[3] = 0.18
    # Hips spread from the neck.
    angles[6] = _DOWN + 0.14
    angles[9] = _DOWN - 0.14

    if motion == "walk":
        swing = 0.42 * math.sin(tau * (2 * t) + p["leg"])
        arm = 0.30 * math.sin(tau * (2 * t) + p["arm"])
        angles[1] = _DOWN + 0.10 + arm          # right upper arm
        angles[2] = angles[1] + 0.35 + 0.15 * math.sin(tau * 2 * t + p["elbow"])
        angles[4] = _DOWN - 0.10 - arm
        angles[5] = angles[4] - 0.35 - 0.15 * math.sin(tau * 2 * t + p["elbow"])
        angles[7] = _DOWN + swing               # right thigh
        angles[8] = angles[7] + 0.25 + 0.20 * math.cos(tau * 2 * t + p["leg"])
        angles[10] = _DOWN - swing
        angles[11] = angles[10] - 0.25 - 0.20 * math.cos(tau * 2 * t + p["leg"])
    elif motion == "wave":
        lift = 0.45 + 0.15 * math.sin(tau * t + p["arm"])
        wag = 0.55 * math.sin(tau * (3 * t) + p["elbow"])
        angles[1] = _UP - lift                  # right arm raised
        angles[2] = _UP + wag
        angles[4] = _DOWN - 0.12                # left arm hangs
        angles[5] = angles[4] - 0.30
        sway = 0.05 * math.sin(tau * t + p["leg"])
        angles[7] = _DOWN + 0.05 + sway
        angles[8] = angles[7] + 0.10
        angles[10] = _DOWN - 0.05 + sway
        angles[11] = angles[10] - 0.10
    elif motion == "squat":
        bend = 0.75 * (1 - math.cos(tau * t + p["leg"])) / 2
        angles[1] = _DOWN + 0.15 + 0.3 * bend   # arms swing forward a little
        angles[2] = angles[1] + 0.30
        angles[4] = _DOWN - 0.15 - 0.3 * bend
        angles[5] = angles[4] - 0.30
        angles[7] = _DOWN + 0.14 + bend         # knees travel outward
        angles[8] = angles[7] - 1.6 * bend
        angles[10] = _DOWN - 0.14 - bend
        angles[11] = angles[10] + 1.6 * bend
    else:
        raise ValidationError(f"unknown motion {motion!r}; choose from {MOTIONS}")
    return angles


def _neck_base(motion: str, t: float, w: int, h: int, p: dict[str, float]) -> tuple[float, float]:
    tau = 2 * math.pi
    x = 0.30 * w
    y = 0.24 * h
    if motion == "walk":
        y += 0.008 * h * math.sin(tau * 4 * t + p["bob"])
    elif motion == "squat":
        y += 0.05 * h * (1 - math.cos(tau * t + p["leg"])) / 2
    elif motion == "wave":
        x += 0.01 * w * math.sin(tau * t + p["bob"])
    return x, y


def _hand_offsets(h: int) -> list[tuple[float, float]]:
    """A 21-point splayed hand as offsets from its wrist root (index 0)."""
    offsets = [(0.0, 0.0)]
    for finger in range(5):
        angle = _DOWN + (finger - 2) * 0.22
        for seg in range(1, 5):
            reach = 0.013 * h * seg
            offsets.append((reach * math.cos(angle), reach * math.sin(angle)))
    return offsets


def _face_offsets(h: int) -> list[tuple[float, float]]:
    """68 points on concentric arcs around the nose."""
    offsets = []
    for i in range(68):
        ring = 0.018 * h * (1 + (i % 3))
        theta = 2 * math.pi * i / 68
        offsets.append((ring * math.cos(theta), ring * math.sin(theta)))
    return offsets


def make_sequence(
    motion: str,
    frames: int,
    canvas: tuple[int, int] = (512, 768),
    scale: float = 1.0,
    seed: int = 0,
    fps: Optional[float] = None,
    with_hands: bool = True,
    with_face: bool = False,
) -> PoseSequence:
    """Generate a synthetic motion sequence with known, constant bone lengths."""
    if motion not in MOTIONS:
        raise ValidationError(f"unknown motion {motion!r}; choose from {MOTIONS}")
    if frames < 1:
        raise ValidationError("frames must be >= 1")
    w, h = canvas
    rng = random.Random(seed)
    phase = {name: rng.uniform(0, 2 * math.pi) for name in ("leg", "arm", "elbow", "bob")}
    hand_off = _hand_offsets(h) if with_hands else None
    face_off = _face_offsets(h) if with_face else None

    out = []
    for a in range(frames):
        t = a / frames
        angles = _joint_angles(motion, t, phase)
        base = [None] * BODY_JOINT_COUNT
        base[NECK] = _neck_base(motion, t, w, h, phase)
        for k, (i, j) in enumerate(BODY_18_TOPOLOGY.edges):
            px, py = base[i]
            length = _BONE_FRACTIONS[k] * h
            base[j] = (px + length * math.cos(angles[k]), py + length * math.sin(angles[k]))

        body = tuple(
            Keypoint2D(scale * x, scale * y, _BODY_SCORE) for x, y in base
        )

        def hand_at(wrist_idx):
            wx, wy = base[wrist_idx]
            return tuple(
                Keypoint2D(scale * (wx + ox), scale * (wy + oy), _HAND_SCORE)
                for ox, oy in hand_off
            )

        hand_left = hand_at(L_WRIST) if with_hands else None
        hand_right = hand_at(R_WRIST) if with_hands else None
        face = None
        if with_face:
            nx, ny = base[NOSE]
            face = tuple(
                Keypoint2D(scale * (nx + ox), scale * (ny + oy), _FACE_SCORE)
                for ox, oy in face_off
            )

        out.append(Pose(body=body, canvas=(w, h), hand_left=hand_left,
                        hand_right=hand_right, face=face))
    return PoseSequence(frames=tuple(out), fps=fps)


# Per-edge length multipliers for the bundled reference fixtures; order
# follows BODY_18_TOPOLOGY. The dwarf keeps its full-size head on a 0.6x
# body — the proportion mismatch the adapter exists to preserve.
_ARM_EDGES = (1, 2, 4, 5)
_LEG_EDGES = (7, 8, 10, 11)
_TORSO_EDGES = (6, 9)
_SHOULDER_EDGES = (0, 3)
_HEAD_EDGES = (12, 13, 14, 15, 16)


def _preset(arms: float, legs: float, torso: float, shoulders: float, head: float) -> np.ndarray:
    mult = np.ones(len(BODY_18_TOPOLOGY))
    mult[list(_ARM_EDGES)] = arms
    mult[list(_LEG_EDGES)] = legs
    mult[list(_TORSO_EDGES)] = torso
    mult[list(_SHOULDER_EDGES)] = shoulders
    mult[list(_HEAD_EDGES)] = head
    return mult


REFERENCE_PRESETS = {
    "identity": _preset(1.0, 1.0, 1.0, 1.0, 1.0),
    "dwarf": _preset(0.6, 0.6, 0.6, 0.8, 1.0),
    "giant": _preset(1.6, 1.6, 1.6, 1.3, 1.0),
}


def make_reference(
    template_frame: Pose,
    multipliers: Sequence[float],
    canvas: Optional[tuple[int, int]] = None,
    anchor: tuple[float, float] = (0.5, 0.33),
    shift: tuple[float, float] = (0.0, 0.0),
    *,
    topology: LimbTopology = BODY_18_TOPOLOGY,
) -> Pose:
    """Derive a reference character from a template frame.

    Each body edge keeps the template's direction but its length is
    multiplied by ``multipliers[k]``; the skeleton is re-rooted at
    ``anchor`` (normalized position of ``canvas``) plus ``shift`` pixels.
    Hands and face follow their anchors, scaled by the matching edge
    multiplier. Missing template joints stay missing.
    """
    multipliers = np.asarray(multipliers, dtype=np.float64)
    if len(multipliers) != len(topology):
        raise ValidationError(
            f"need {len(topology)} edge multipliers, got {len(multipliers)}"
        )
    canvas = canvas or template_frame.canvas
    w, h = canvas
    neck = template_frame.body[NECK]
    if neck.missing:
        raise ValidationError("template frame has no neck to re-root from")

    missing = Keypoint2D.absent()
    body: list[Keypoint2D] = [missing] * BODY_JOINT_COUNT
    body[NECK] = Keypoint2D(anchor[0] * w + shift[0], anchor[1] * h + shift[1], neck.score)
    for k, (i, j) in enumerate(topology.edges):
        parent = body[i]
        t_i, t_j = template_frame.body[i], template_frame.body[j]
        if parent.missing or t_i.missing or t_j.missing:
            continue
        m = float(multipliers[k])
        body[j] = Keypoint2D(
            parent.x + m * (t_j.x - t_i.x),
            parent.y + m * (t_j.y - t_i.y),
            t_j.score,
        )

    def carry_hand(hand, wrist_idx, forearm_edge):
        if hand is None or hand[0].missing or body[wrist_idx].missing:
            return None
        s = float(multipliers[forearm_edge]) if forearm_edge is not None else 1.0
        root = hand[0]
        new_wrist = body[wrist_idx]
        return tuple(
            kp if kp.missing else Keypoint2D(
                new_wrist.x + s * (kp.x - root.x),
                new_wrist.y + s * (kp.y - root.y),
                kp.score,
            )
            for kp in hand
        )

    hand_left = carry_hand(template_frame.hand_left, L_WRIST,
                           topology.edge_index(L_ELBOW, L_WRIST))
    hand_right = carry_hand(template_frame.hand_right, R_WRIST,
                            topology.edge_index(R_ELBOW, R_WRIST))

    face = None
    head_edge = topology.edge_index(NECK, NOSE)
    if template_frame.face is not None and not body[NOSE].missing:
        s = float(multipliers[head_edge]) if head_edge is not None else 1.0
        t_nose = template_frame.body[NOSE]
        nose = body[NOSE]
        face = tuple(
            kp if kp.missing else Keypoint2D(
                nose.x + s * (kp.x - t_nose.x),
                nose.y + s * (kp.y - t_nose.y),
                kp.score,
            )
            for kp in template_frame.face
        )

    return Pose(body=tuple(body), canvas=(w, h),
                hand_left=hand_left, hand_right=hand_right, face=face)
