"""Alignment-quality measurement.

Re-measures the output geometry against what the ratio transfer promised:
every limb's length should be its edge ratio times the per-frame template
length, its direction should be the template direction, and the root should
sit exactly one epsilon away from the template root. Length errors are
relative to the expected (reference-scaled) length, angle errors are wrapped
to [0, pi] — both scale-free.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import ContractError
from .model import BODY_18_TOPOLOGY, LimbTopology, NECK, Pose, PoseSequence
from .retarget import EdgeRatios, RetargetConfig, resolve_epsilon


def wrapped_angle_diff(a: float, b: float) -> float:
    """|a - b| on the circle, in [0, pi]."""
    return abs(math.remainder(a - b, math.tau))


@dataclass(frozen=True)
class AlignmentReport:
    """Per-edge means plus coverage-weighted aggregates; all finite, >= 0."""

    per_edge_length_rel_error: tuple[float, ...]
    angle_abs_error_rad: tuple[float, ...]
    root_offset_drift: float
    frames_evaluated: int
    coverage: float
    mean_length_rel_error: float
    mean_angle_abs_error_rad: float


def _limb(pose: Pose, i: int, j: int) -> Optional[tuple[float, float]]:
    a, b = pose.body[i], pose.body[j]
    if a.missing or b.missing:
        return None
    dx, dy = b.x - a.x, b.y - a.y
    return math.hypot(dx, dy), math.atan2(dy, dx)


def evaluate(
    template: PoseSequence,
    output: PoseSequence,
    reference: Pose,
    ratios: EdgeRatios,
    cfg: RetargetConfig = RetargetConfig(),
    *,
    topology: LimbTopology = BODY_18_TOPOLOGY,
) -> AlignmentReport:
    """Score an output sequence against its template, reference, and ratios.

    An edge-frame pair contributes when both its endpoints are present in
    both sequences; edges with no contributing pair report 0 error and the
    coverage fraction is the caller's cue that results are vacuous.
    """
    if len(template) != len(output):
        raise ContractError(
            f"template has {len(template)} frames, output has {len(output)}"
        )
    if len(ratios) != len(topology):
        raise ContractError("ratios were computed for a different topology")

    n = len(topology)
    length_sums = [0.0] * n
    angle_sums = [0.0] * n
    counts = [0] * n

    epsilon = resolve_epsilon(template, reference, cfg)
    drift = 0.0
    drift_seen = False

    for t_frame, o_frame in zip(template.frames, output.frames):
        t_neck, o_neck = t_frame.body[NECK], o_frame.body[NECK]
        if not t_neck.missing and not o_neck.missing:
            drift = max(drift, math.hypot(
                (o_neck.x - t_neck.x) - epsilon[0],
                (o_neck.y - t_neck.y) - epsilon[1],
            ))
            drift_seen = True

        for k, (i, j) in enumerate(topology.edges):
            t_limb = _limb(t_frame, i, j)
            o_limb = _limb(o_frame, i, j)
            if t_limb is None or o_limb is None:
                continue
            r = float(ratios.ratios[k]) if ratios.defined[k] else 1.0
            expected = r * t_limb[0]
            if expected > 1e-12:
                length_sums[k] += abs(o_limb[0] - expected) / expected
                angle_sums[k] += wrapped_angle_diff(o_limb[1], t_limb[1])
                counts[k] += 1

    per_edge_len = tuple(
        length_sums[k] / counts[k] if counts[k] else 0.0 for k in range(n)
    )
    per_edge_ang = tuple(
        angle_sums[k] / counts[k] if counts[k] else 0.0 for k in range(n)
    )
    total = sum(counts)
    return AlignmentReport(
        per_edge_length_rel_error=per_edge_len,
        angle_abs_error_rad=per_edge_ang,
        root_offset_drift=drift if drift_seen else 0.0,
        frames_evaluated=len(template),
        coverage=total / (n * len(template)),
        mean_length_rel_error=sum(length_sums) / total if total else 0.0,
        mean_angle_abs_error_rad=sum(angle_sums) / total if total else 0.0,
    )


_REPORT_KEYS = (
    "frames_evaluated",
    "coverage",
    "mean_length_rel_error",
    "mean_angle_abs_error_rad",
    "root_offset_drift",
    "per_edge_length_rel_error",
    "angle_abs_error_rad",
)


def report_to_json(report: AlignmentReport) -> bytes:
    """Stable-key JSON encoding; round-trips exactly, never emits NaN."""
    data = asdict(report)
    ordered = {key: list(data[key]) if isinstance(data[key], tuple) else data[key]
               for key in _REPORT_KEYS}
    return (json.dumps(ordered, indent=2, allow_nan=False) + "\n").encode("utf-8")


def report_from_json(raw: bytes) -> AlignmentReport:
    data = json.loads(raw.decode("utf-8"))
    return AlignmentReport(
        per_edge_length_rel_error=tuple(data["per_edge_length_rel_error"]),
        angle_abs_error_rad=tuple(data["angle_abs_error_rad"]),
        root_offset_drift=data["root_offset_drift"],
        frames_evaluated=data["frames_evaluated"],
        coverage=data["coverage"],
        mean_length_rel_error=data["mean_length_rel_error"],
        mean_angle_abs_error_rad=data["mean_angle_abs_error_rad"],
    )
