"""Parsing and serialization of pose keypoint data.

Two formats are understood:

* OpenPose per-frame JSON (read only): ``people[0].pose_keypoints_2d`` as a
  flat ``[x, y, score] * 18`` list (BODY-25 documents are mapped down to
  BODY-18), with optional hand and face blocks.
* The internal NDJSON format (read/write), one frame per line::

      {"canvas":[w,h],"body":[[x,y,s]*18],"hand_l":[[x,y,s]*21]|null,
       "hand_r":...|null,"face":[[x,y,s]*68]|null}

  Coordinates are pixels; MISSING is encoded as ``[-1,-1,0]``.
  ``parse_sequence(serialize_sequence(seq))`` is the identity on frames
  (bit-equal coordinates, same missing flags). ``fps`` is a memory-only
  attribute and is not persisted.
"""

from __future__ import annotations

import json
import os
import warnings
from pathlib import Path
from typing import Optional, Union

from .errors import EmptyPoseError, EmptySequenceError, ParseError
from .model import (
    BODY18_FROM_BODY25,
    BODY_JOINT_COUNT,
    DEFAULT_SCORE_THRESHOLD,
    FACE_JOINT_COUNT,
    HAND_JOINT_COUNT,
    Keypoint2D,
    Pose,
    PoseSequence,
    check_canvas_bounds,
)

PathLike = Union[str, Path]

_MISSING_TRIPLE = [-1, -1, 0]


class MultiplePeopleWarning(UserWarning):
    """More than one person in a frame; person 0 was used."""


def _triples(flat: list, path: str) -> list[tuple[float, float, float]]:
    if not isinstance(flat, list) or len(flat) % 3 != 0:
        raise ParseError(f"{path}: expected a flat [x,y,score] list, got length {len(flat) if isinstance(flat, list) else 'non-list'}")
    try:
        return [(float(flat[i]), float(flat[i + 1]), float(flat[i + 2]))
                for i in range(0, len(flat), 3)]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: non-numeric entry ({exc})") from None


def _looks_normalized(groups: list[list[tuple[float, float, float]]], threshold: float) -> bool:
    # Heuristic: detector output is treated as normalized iff every scored
    # coordinate has magnitude <= 2 (canvases are never that small).
    saw_any = False
    for triples in groups:
        for x, y, s in triples:
            if s <= threshold:
                continue
            saw_any = True
            if abs(x) > 2.0 or abs(y) > 2.0:
                return False
    return saw_any


def parse_openpose_frame(
    text: Union[bytes, str],
    canvas: tuple[int, int],
    *,
    score_threshold: float = DEFAULT_SCORE_THRESHOLD,
    units: str = "auto",
    validate_bounds: bool = True,
) -> Pose:
    """Parse a single-frame OpenPose-style JSON document into a Pose.

    ``units`` selects the coordinate interpretation: ``"pixels"``,
    ``"normalized"``, or ``"auto"`` (normalized iff every scored coordinate
    magnitude is <= 2; detectors disagree on this and the document does not
    say). Normalized coordinates are scaled to pixel units of ``canvas``;
    a negative normalized coordinate forces the keypoint MISSING, as do
    scores at or below ``score_threshold``.

    BODY-25 documents are accepted and reduced to BODY-18 (mid-hip and foot
    joints dropped). A document with several people uses person 0 and emits
    a :class:`MultiplePeopleWarning`.
    """
    if units not in ("auto", "pixels", "normalized"):
        raise ValueError(f"units must be auto|pixels|normalized, got {units!r}")
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"document: invalid JSON ({exc})") from None

    people = doc.get("people")
    if not isinstance(people, list):
        raise ParseError("people: missing or not a list")
    if len(people) == 0:
        raise EmptyPoseError("people: document contains no people")
    if len(people) > 1:
        warnings.warn(
            f"document contains {len(people)} people; using person 0",
            MultiplePeopleWarning,
            stacklevel=2,
        )
    person = people[0]
    if not isinstance(person, dict) or "pose_keypoints_2d" not in person:
        raise ParseError("people[0].pose_keypoints_2d: missing")

    body = _triples(person["pose_keypoints_2d"], "people[0].pose_keypoints_2d")
    if len(body) == 25:
        body = [body[i] for i in BODY18_FROM_BODY25]
    elif len(body) != BODY_JOINT_COUNT:
        raise ParseError(
            f"people[0].pose_keypoints_2d: expected 18 or 25 keypoints, got {len(body)}"
        )

    def optional_block(key: str, expect: int, truncate_from: Optional[int] = None):
        raw = person.get(key)
        if raw is None or raw == []:
            return None
        triples = _triples(raw, f"people[0].{key}")
        if truncate_from is not None and len(triples) == truncate_from:
            triples = triples[:expect]
        if len(triples) != expect:
            raise ParseError(f"people[0].{key}: expected {expect} keypoints, got {len(triples)}")
        return triples

    hand_l = optional_block("hand_left_keypoints_2d", HAND_JOINT_COUNT)
    hand_r = optional_block("hand_right_keypoints_2d", HAND_JOINT_COUNT)
    # OpenPose face output carries 70 points (68 + 2 pupils); keep the 68.
    face = optional_block("face_keypoints_2d", FACE_JOINT_COUNT, truncate_from=70)

    groups = [g for g in (body, hand_l, hand_r, face) if g is not None]
    if units == "auto":
        normalized = _looks_normalized(groups, score_threshold)
    else:
        normalized = units == "normalized"

    w, h = canvas

    def to_keypoint(triple):
        x, y, s = triple
        if s <= score_threshold:
            return Keypoint2D.absent()
        if normalized:
            if x < 0 or y < 0:
                return Keypoint2D.absent()
            return Keypoint2D(x * w, y * h, s)
        return Keypoint2D(x, y, s)

    def convert(triples):
        return None if triples is None else tuple(to_keypoint(t) for t in triples)

    pose = Pose(
        body=convert(body),
        canvas=(int(w), int(h)),
        hand_left=convert(hand_l),
        hand_right=convert(hand_r),
        face=convert(face),
    )
    if validate_bounds:
        check_canvas_bounds(pose)
    return pose


def _group_to_wire(group) -> Optional[list]:
    if group is None:
        return None
    return [_MISSING_TRIPLE if kp.missing else [kp.x, kp.y, kp.score] for kp in group]


def _group_from_wire(raw, expect: int, where: str):
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != expect:
        raise ParseError(f"{where}: expected {expect} [x,y,s] entries")
    try:
        return tuple(Keypoint2D(float(x), float(y), float(s)) for x, y, s in raw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: malformed keypoint triple ({exc})") from None


def _frame_to_obj(pose: Pose) -> dict:
    return {
        "canvas": [pose.canvas[0], pose.canvas[1]],
        "body": _group_to_wire(pose.body),
        "hand_l": _group_to_wire(pose.hand_left),
        "hand_r": _group_to_wire(pose.hand_right),
        "face": _group_to_wire(pose.face),
    }


def _frame_from_obj(obj: dict, where: str) -> Pose:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: frame is not an object")
    canvas = obj.get("canvas")
    if (not isinstance(canvas, list) or len(canvas) != 2
            or not all(isinstance(v, int) and v > 0 for v in canvas)):
        raise ParseError(f"{where}.canvas: expected [width, height] positive integers")
    body = obj.get("body")
    if body is None:
        raise ParseError(f"{where}.body: missing")
    return Pose(
        body=_group_from_wire(body, BODY_JOINT_COUNT, f"{where}.body"),
        canvas=(canvas[0], canvas[1]),
        hand_left=_group_from_wire(obj.get("hand_l"), HAND_JOINT_COUNT, f"{where}.hand_l"),
        hand_right=_group_from_wire(obj.get("hand_r"), HAND_JOINT_COUNT, f"{where}.hand_r"),
        face=_group_from_wire(obj.get("face"), FACE_JOINT_COUNT, f"{where}.face"),
    )


def serialize_sequence(seq: PoseSequence) -> bytes:
    """Encode a sequence as internal NDJSON, one frame per line."""
    lines = [
        json.dumps(_frame_to_obj(frame), separators=(",", ":"), allow_nan=False)
        for frame in seq.frames
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_sequence(path: PathLike, *, validate_bounds: bool = True) -> PoseSequence:
    """Load a sequence from an NDJSON file or a directory of per-frame JSON
    files (internal frame format, sorted lexicographically).

    ``validate_bounds`` applies the wild-coordinate check; turn it off when
    re-reading adapter output, whose joints may legitimately leave the canvas.
    """
    path = Path(path)
    frames: list[Pose] = []
    if path.is_dir():
        names = sorted(n for n in os.listdir(path) if n.endswith(".json"))
        if not names:
            raise EmptySequenceError(f"{path}: directory contains no frame JSON files")
        for name in names:
            raw = (path / name).read_text(encoding="utf-8")
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{name}: invalid JSON ({exc})") from None
            frames.append(_frame_from_obj(obj, name))
    else:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"line {lineno}: invalid JSON ({exc})") from None
                frames.append(_frame_from_obj(obj, f"line {lineno}"))
        if not frames:
            raise EmptySequenceError(f"{path}: file contains no frames")

    seq = PoseSequence(frames=tuple(frames))
    if validate_bounds:
        for i, frame in enumerate(seq.frames):
            check_canvas_bounds(frame, frame_index=i)
    return seq


def write_sequence(seq: PoseSequence, path: PathLike) -> None:
    Path(path).write_bytes(serialize_sequence(seq))
