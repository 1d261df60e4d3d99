"""Skeleton-proportion transfer between a reference pose and a template
motion sequence.

The idea: a template sequence carries two entangled kinds of information —
the motion (per-frame limb directions and the root trajectory) and the
identity of whoever was filmed (limb lengths, position, scale). This module
separates them. Per-limb scale factors are measured once between the
reference skeleton and the template skeleton; each template frame is then
rebuilt joint by joint, keeping every limb's own per-frame direction and
length profile (so foreshortening survives) while multiplying its length by
the fixed factor, and anchoring the root with a configurable offset.

All functions are pure; frames can be processed concurrently.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, MissingJointError, UnusableReferenceError, ValidationError
from .model import (
    BODY_18_TOPOLOGY,
    FACE_JOINT_COUNT,
    HAND_JOINT_COUNT,
    Keypoint2D,
    L_ELBOW,
    L_WRIST,
    LimbTopology,
    NECK,
    NOSE,
    Pose,
    PoseSequence,
    R_ELBOW,
    R_WRIST,
)
from .parallel import map_frames

# Limbs shorter than this (pixels) cannot yield a meaningful ratio.
DEGENERATE_LIMB_LENGTH = 1e-6

RATIO_STRATEGIES = ("median", "first_frame", "max")
EPSILON_MODES = ("zero", "base_diff", "explicit")
UNDEFINED_RATIO_POLICIES = ("inherit_unity", "mark_missing")
HAND_SCALE_SOURCES = ("forearm_ratio", "hand_bbox_ratio")


@dataclass(frozen=True)
class RetargetConfig:
    """Knobs of the alignment run.

    epsilon_mode: root placement — "zero" keeps the template's screen
      position, "base_diff" moves the whole motion to the reference
      character's position, "explicit" applies ``epsilon`` (dx, dy) pixels.
    ratio_strategy: how template limb lengths are aggregated over frames
      before dividing (median is robust to per-frame foreshortening).
    undefined_ratio_policy: what to do on edges with no measurable ratio.
    hand_scale_source: hand resize factor — the forearm edge ratio, or the
      reference/template hand bounding-box diagonal ratio.
    retarget_face: rigidly carry the face with the nose and scale it by
      the head edge ratio; when off, faces pass through untouched.
    """

    epsilon_mode: str = "zero"
    epsilon: Optional[tuple[float, float]] = None
    ratio_strategy: str = "median"
    undefined_ratio_policy: str = "inherit_unity"
    hand_scale_source: str = "forearm_ratio"
    retarget_face: bool = True

    def __post_init__(self):
        if self.epsilon_mode not in EPSILON_MODES:
            raise ValidationError(f"epsilon_mode must be one of {EPSILON_MODES}, got {self.epsilon_mode!r}")
        if self.ratio_strategy not in RATIO_STRATEGIES:
            raise ValidationError(f"ratio_strategy must be one of {RATIO_STRATEGIES}, got {self.ratio_strategy!r}")
        if self.undefined_ratio_policy not in UNDEFINED_RATIO_POLICIES:
            raise ValidationError(f"undefined_ratio_policy must be one of {UNDEFINED_RATIO_POLICIES}")
        if self.hand_scale_source not in HAND_SCALE_SOURCES:
            raise ValidationError(f"hand_scale_source must be one of {HAND_SCALE_SOURCES}")
        if self.epsilon_mode == "explicit":
            if self.epsilon is None:
                raise ValidationError("epsilon_mode 'explicit' requires an epsilon (dx, dy)")
            dx, dy = self.epsilon
            if not (math.isfinite(dx) and math.isfinite(dy)):
                raise ValidationError(f"explicit epsilon must be finite, got {self.epsilon}")
            object.__setattr__(self, "epsilon", (float(dx), float(dy)))

    def as_manifest(self) -> dict:
        entry: dict = {
            "epsilon_mode": self.epsilon_mode,
            "ratio_strategy": self.ratio_strategy,
            "undefined_ratio_policy": self.undefined_ratio_policy,
            "hand_scale_source": self.hand_scale_source,
            "retarget_face": self.retarget_face,
        }
        if self.epsilon_mode == "explicit":
            entry["epsilon"] = list(self.epsilon)
        return entry


@dataclass(frozen=True)
class LimbGeom:
    """Length (pixels) and direction (radians from +x, y-down, in (-pi, pi])
    of one limb segment."""

    length: float
    angle: float


def limb_geom(parent: Keypoint2D, child: Keypoint2D) -> LimbGeom:
    """Measure a limb between two non-missing keypoints."""
    if parent.missing or child.missing:
        raise MissingJointError("cannot measure a limb with a MISSING endpoint")
    dx = child.x - parent.x
    dy = child.y - parent.y
    angle = math.atan2(dy, dx)
    if angle == -math.pi:
        angle = math.pi
    return LimbGeom(length=math.hypot(dx, dy), angle=angle)


def _edge_length(pose: Pose, parent: int, child: int) -> Optional[float]:
    a, b = pose.body[parent], pose.body[child]
    if a.missing or b.missing:
        return None
    return math.hypot(b.x - a.x, b.y - a.y)


@dataclass(frozen=True)
class EdgeRatios:
    """Per-edge scale factors between reference and template skeletons.

    ``ratios[k]`` is reference length over template length for topology edge
    k; entries are NaN where no meaningful measurement exists (``defined``
    is the validity mask). Lengths are pixels; NaN marks unmeasured edges.
    """

    ratios: np.ndarray
    template_lengths: np.ndarray
    reference_lengths: np.ndarray
    defined: np.ndarray
    strategy: str

    def __post_init__(self):
        for name in ("ratios", "template_lengths", "reference_lengths", "defined"):
            arr = np.array(getattr(self, name), dtype=bool if name == "defined" else np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.ratios)
        if any(len(getattr(self, f)) != n for f in ("template_lengths", "reference_lengths", "defined")):
            raise ContractError("EdgeRatios arrays must share one length")

    def __len__(self) -> int:
        return len(self.ratios)


def compute_edge_ratios(
    template: PoseSequence,
    reference: Pose,
    cfg: RetargetConfig = RetargetConfig(),
    *,
    topology: LimbTopology = BODY_18_TOPOLOGY,
) -> EdgeRatios:
    """Measure r_k = reference limb length / template limb length per edge.

    Template lengths are aggregated over the frames where both endpoints are
    present, per ``cfg.ratio_strategy``. Edges degenerate (< 1e-6 px) or
    unmeasurable on either side come back UNDEFINED (NaN, defined=False).

    Raises UnusableReferenceError when the reference has no measurable limb
    at all.
    """
    n = len(topology)
    ref_lengths = np.full(n, np.nan)
    tmpl_lengths = np.full(n, np.nan)
    ratios = np.full(n, np.nan)
    defined = np.zeros(n, dtype=bool)

    any_reference_limb = False
    for k, (i, j) in enumerate(topology.edges):
        ref_len = _edge_length(reference, i, j)
        if ref_len is not None:
            ref_lengths[k] = ref_len
            if ref_len >= DEGENERATE_LIMB_LENGTH:
                any_reference_limb = True

        per_frame = [
            length
            for frame in template.frames
            if (length := _edge_length(frame, i, j)) is not None
        ]
        if per_frame:
            if cfg.ratio_strategy == "median":
                tmpl_lengths[k] = statistics.median(per_frame)
            elif cfg.ratio_strategy == "first_frame":
                tmpl_lengths[k] = per_frame[0]
            else:
                tmpl_lengths[k] = max(per_frame)

        if (
            ref_len is not None
            and per_frame
            and ref_len >= DEGENERATE_LIMB_LENGTH
            and tmpl_lengths[k] >= DEGENERATE_LIMB_LENGTH
        ):
            ratios[k] = ref_lengths[k] / tmpl_lengths[k]
            defined[k] = True

    if not any_reference_limb:
        raise UnusableReferenceError("reference pose has no measurable limb")

    return EdgeRatios(
        ratios=ratios,
        template_lengths=tmpl_lengths,
        reference_lengths=ref_lengths,
        defined=defined,
        strategy=cfg.ratio_strategy,
    )


def resolve_epsilon(
    template: PoseSequence,
    reference: Pose,
    cfg: RetargetConfig,
) -> tuple[float, float]:
    """The root offset a sequence-level run applies to every frame.

    base_diff measures reference neck minus the neck of the first frame
    where the template neck is present, so the whole sequence shares one
    rigid offset and the template's trajectory survives.
    """
    if cfg.epsilon_mode == "zero":
        return (0.0, 0.0)
    if cfg.epsilon_mode == "explicit":
        return cfg.epsilon
    ref_neck = reference.body[NECK]
    if ref_neck.missing:
        raise UnusableReferenceError("base_diff epsilon needs a reference neck, which is MISSING")
    for frame in template.frames:
        neck = frame.body[NECK]
        if not neck.missing:
            return (ref_neck.x - neck.x, ref_neck.y - neck.y)
    # No frame has a neck: every output frame is all-missing, offset moot.
    return (0.0, 0.0)


_MISSING = Keypoint2D.absent()


def _all_missing(count: int) -> tuple[Keypoint2D, ...]:
    return (_MISSING,) * count


def _effective_ratio(ratios: EdgeRatios, k: int, policy: str) -> Optional[float]:
    """Ratio to apply on edge k, or None when the child must go MISSING."""
    if ratios.defined[k]:
        return float(ratios.ratios[k])
    return 1.0 if policy == "inherit_unity" else None


def _hand_bbox_diag(hand: Optional[tuple[Keypoint2D, ...]]) -> Optional[float]:
    if hand is None:
        return None
    xs = [kp.x for kp in hand if not kp.missing]
    ys = [kp.y for kp in hand if not kp.missing]
    if len(xs) < 2:
        return None
    diag = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
    return diag if diag >= DEGENERATE_LIMB_LENGTH else None


def _transform_about_anchor(
    points: tuple[Keypoint2D, ...],
    source_anchor: Keypoint2D,
    target_anchor: Keypoint2D,
    scale: float,
) -> tuple[Keypoint2D, ...]:
    """Map each point p to target + scale*(p - source). Pass-through when the
    transform is exactly the identity, so fixed-point inputs stay bit-equal."""
    if (
        scale == 1.0
        and target_anchor.x == source_anchor.x
        and target_anchor.y == source_anchor.y
    ):
        return points
    return tuple(
        kp if kp.missing else Keypoint2D(
            target_anchor.x + scale * (kp.x - source_anchor.x),
            target_anchor.y + scale * (kp.y - source_anchor.y),
            kp.score,
        )
        for kp in points
    )


def _retarget_hand(
    hand: Optional[tuple[Keypoint2D, ...]],
    out_wrist: Keypoint2D,
    forearm_edge: Optional[int],
    ratios: EdgeRatios,
    reference_hand: Optional[tuple[Keypoint2D, ...]],
    cfg: RetargetConfig,
) -> Optional[tuple[Keypoint2D, ...]]:
    if hand is None:
        return None
    root = hand[0]
    if out_wrist.missing or root.missing:
        return _all_missing(HAND_JOINT_COUNT)

    scale: Optional[float] = None
    if cfg.hand_scale_source == "hand_bbox_ratio":
        ref_diag = _hand_bbox_diag(reference_hand)
        tmpl_diag = _hand_bbox_diag(hand)
        if ref_diag is not None and tmpl_diag is not None:
            scale = ref_diag / tmpl_diag
    if scale is None:
        # forearm_ratio source, or bbox fallback when hands are undetected
        if forearm_edge is not None and ratios.defined[forearm_edge]:
            scale = float(ratios.ratios[forearm_edge])
        elif cfg.undefined_ratio_policy == "inherit_unity":
            scale = 1.0
        else:
            return _all_missing(HAND_JOINT_COUNT)

    return _transform_about_anchor(hand, root, out_wrist, scale)


def _retarget_face(
    face: Optional[tuple[Keypoint2D, ...]],
    template_nose: Keypoint2D,
    out_nose: Keypoint2D,
    head_edge: Optional[int],
    ratios: EdgeRatios,
    cfg: RetargetConfig,
) -> Optional[tuple[Keypoint2D, ...]]:
    if face is None or not cfg.retarget_face:
        return face
    if out_nose.missing:
        return _all_missing(FACE_JOINT_COUNT)

    if head_edge is not None and ratios.defined[head_edge]:
        scale = float(ratios.ratios[head_edge])
    elif cfg.undefined_ratio_policy == "inherit_unity":
        scale = 1.0
    else:
        return _all_missing(FACE_JOINT_COUNT)

    return _transform_about_anchor(face, template_nose, out_nose, scale)


def retarget_frame(
    template_frame: Pose,
    ratios: EdgeRatios,
    reference: Pose,
    cfg: RetargetConfig = RetargetConfig(),
    *,
    topology: LimbTopology = BODY_18_TOPOLOGY,
    epsilon: Optional[tuple[float, float]] = None,
) -> Pose:
    """Rebuild one template frame on the reference skeleton's proportions.

    The root (neck) moves by epsilon; every other joint is placed by walking
    the topology: child = updated_parent + r_k * (template child - template
    parent), which keeps the template limb's direction and per-frame length
    profile while scaling its magnitude. Joints MISSING in the template stay
    MISSING, as does everything downstream of them.

    ``epsilon`` overrides the per-frame resolution of cfg.epsilon_mode;
    sequence-level runs pass one shared offset so the trajectory survives.

    When a limb's scale factor is exactly 1 and its parent landed exactly on
    the template position, the child is assigned the template coordinate
    directly: the exact result of the update, kept free of rounding so that
    identity runs reproduce their input bit for bit.
    """
    n_edges = len(topology)
    if len(ratios) != n_edges:
        raise ContractError(
            f"topology has {n_edges} edges but ratios carry {len(ratios)} entries"
        )

    if epsilon is None:
        if cfg.epsilon_mode == "zero":
            epsilon = (0.0, 0.0)
        elif cfg.epsilon_mode == "explicit":
            epsilon = cfg.epsilon
        else:
            ref_neck = reference.body[NECK]
            neck = template_frame.body[NECK]
            if ref_neck.missing:
                raise UnusableReferenceError(
                    "base_diff epsilon needs a reference neck, which is MISSING"
                )
            epsilon = (0.0, 0.0) if neck.missing else (ref_neck.x - neck.x, ref_neck.y - neck.y)

    out_canvas = reference.canvas if cfg.epsilon_mode == "base_diff" else template_frame.canvas

    neck = template_frame.body[NECK]
    if neck.missing:
        return Pose(
            body=_all_missing(len(template_frame.body)),
            canvas=out_canvas,
            hand_left=None if template_frame.hand_left is None else _all_missing(HAND_JOINT_COUNT),
            hand_right=None if template_frame.hand_right is None else _all_missing(HAND_JOINT_COUNT),
            face=None if template_frame.face is None else _all_missing(FACE_JOINT_COUNT),
        )

    body = list(_all_missing(len(template_frame.body)))
    # exact[i]: output joint i is bit-identical to the template joint, so
    # unity-scaled children may take template coordinates verbatim.
    exact = [False] * len(body)

    if epsilon == (0.0, 0.0):
        body[NECK] = neck
        exact[NECK] = True
    else:
        body[NECK] = Keypoint2D(neck.x + epsilon[0], neck.y + epsilon[1], neck.score)

    for k, (i, j) in enumerate(topology.edges):
        parent_out = body[i]
        t_child = template_frame.body[j]
        if parent_out.missing or t_child.missing:
            continue  # child stays MISSING
        r = _effective_ratio(ratios, k, cfg.undefined_ratio_policy)
        if r is None:
            continue
        t_parent = template_frame.body[i]
        if r == 1.0 and exact[i]:
            body[j] = t_child
            exact[j] = True
        else:
            body[j] = Keypoint2D(
                parent_out.x + r * (t_child.x - t_parent.x),
                parent_out.y + r * (t_child.y - t_parent.y),
                t_child.score,
            )

    hand_left = _retarget_hand(
        template_frame.hand_left, body[L_WRIST],
        topology.edge_index(L_ELBOW, L_WRIST), ratios, reference.hand_left, cfg,
    )
    hand_right = _retarget_hand(
        template_frame.hand_right, body[R_WRIST],
        topology.edge_index(R_ELBOW, R_WRIST), ratios, reference.hand_right, cfg,
    )
    face = _retarget_face(
        template_frame.face, template_frame.body[NOSE], body[NOSE],
        topology.edge_index(NECK, NOSE), ratios, cfg,
    )

    return Pose(
        body=tuple(body),
        canvas=out_canvas,
        hand_left=hand_left,
        hand_right=hand_right,
        face=face,
    )


def retarget_sequence(
    template: PoseSequence,
    reference: Pose,
    cfg: RetargetConfig = RetargetConfig(),
    *,
    topology: LimbTopology = BODY_18_TOPOLOGY,
) -> PoseSequence:
    """Align a whole template sequence onto the reference skeleton.

    Ratios are measured once, the root offset is resolved once, and every
    frame is rebuilt independently with those shared values — frame count
    and order are preserved, and so is the template's global trajectory.
    """
    ratios = compute_edge_ratios(template, reference, cfg, topology=topology)
    epsilon = resolve_epsilon(template, reference, cfg)
    frames = map_frames(
        lambda frame: retarget_frame(
            frame, ratios, reference, cfg, topology=topology, epsilon=epsilon
        ),
        template.frames,
    )
    return PoseSequence(frames=tuple(frames), fps=template.fps)
