"""Deterministic rasterization of poses to OpenPose-style skeleton images.

Limbs are stadium shapes (every pixel whose center lies within half the limb
thickness of the segment), joints are filled discs, drawn in topology order
with joints over limbs. Coverage is decided by exact float64 distance
comparison at pixel centers — no anti-aliasing — so identical input yields
byte-identical rasters on every platform.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import ContractError, ValidationError
from .model import BODY_18_TOPOLOGY, LimbTopology, NECK, Pose, PoseSequence
from .parallel import map_frames

# The conventional OpenPose 18-color wheel; limb k and the joint it ends at
# share color k (the neck root borrows the first entry).
OPENPOSE_COLOR_WHEEL = (
    (255, 0, 0), (255, 85, 0), (255, 170, 0), (255, 255, 0), (170, 255, 0),
    (85, 255, 0), (0, 255, 0), (0, 255, 85), (0, 255, 170), (0, 255, 255),
    (0, 170, 255), (0, 85, 255), (0, 0, 255), (85, 0, 255), (170, 0, 255),
    (255, 0, 255), (255, 0, 170), (255, 0, 85),
)

_HAND_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4),
    (0, 5), (5, 6), (6, 7), (7, 8),
    (0, 9), (9, 10), (10, 11), (11, 12),
    (0, 13), (13, 14), (14, 15), (15, 16),
    (0, 17), (17, 18), (18, 19), (19, 20),
)


def _hand_edge_color(k: int) -> tuple[int, int, int]:
    r, g, b = colorsys.hsv_to_rgb(k / len(_HAND_EDGES), 1.0, 1.0)
    return (int(round(r * 255)), int(round(g * 255)), int(round(b * 255)))


_HAND_EDGE_COLORS = tuple(_hand_edge_color(k) for k in range(len(_HAND_EDGES)))
_HAND_JOINT_COLOR = (255, 0, 0)
_FACE_COLOR = (255, 255, 255)


def default_palette(topology: LimbTopology = BODY_18_TOPOLOGY) -> tuple[tuple[int, int, int], ...]:
    wheel = OPENPOSE_COLOR_WHEEL
    return tuple(wheel[k % len(wheel)] for k in range(len(topology)))


@dataclass(frozen=True)
class RenderStyle:
    limb_palette: tuple[tuple[int, int, int], ...] = field(default_factory=default_palette)
    joint_radius: int = 4
    limb_thickness: int = 4
    background: tuple[int, int, int] = (0, 0, 0)
    draw_hands: bool = True
    draw_face: bool = True

    def __post_init__(self):
        if self.joint_radius < 1 or self.limb_thickness < 1:
            raise ValidationError("joint_radius and limb_thickness must be >= 1")
        palette = tuple(tuple(int(c) for c in color) for color in self.limb_palette)
        for color in palette + (tuple(self.background),):
            if len(color) != 3 or any(not (0 <= c <= 255) for c in color):
                raise ValidationError(f"bad RGB triple {color!r}")
        object.__setattr__(self, "limb_palette", palette)
        object.__setattr__(self, "background", tuple(int(c) for c in self.background))


def _paint_disc(img: np.ndarray, cx: float, cy: float, radius: float, color) -> None:
    h, w = img.shape[:2]
    x0 = max(0, math.floor(cx - radius))
    x1 = min(w - 1, math.ceil(cx + radius))
    y0 = max(0, math.floor(cy - radius))
    y1 = min(h - 1, math.ceil(cy + radius))
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    d2 = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2
    mask = d2 <= radius * radius
    img[y0:y1 + 1, x0:x1 + 1][mask] = color


def _paint_capsule(img: np.ndarray, ax: float, ay: float, bx: float, by: float,
                   radius: float, color) -> None:
    h, w = img.shape[:2]
    x0 = max(0, math.floor(min(ax, bx) - radius))
    x1 = min(w - 1, math.ceil(max(ax, bx) + radius))
    y0 = max(0, math.floor(min(ay, by) - radius))
    y1 = min(h - 1, math.ceil(max(ay, by) + radius))
    if x0 > x1 or y0 > y1:
        return
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        _paint_disc(img, ax, ay, radius, color)
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    px, py = np.meshgrid(xs, ys)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg2, 0.0, 1.0)
    d2 = (px - (ax + t * dx)) ** 2 + (py - (ay + t * dy)) ** 2
    mask = d2 <= radius * radius
    img[y0:y1 + 1, x0:x1 + 1][mask] = color


def render_pose(
    pose: Pose,
    style: RenderStyle = RenderStyle(),
    *,
    topology: LimbTopology = BODY_18_TOPOLOGY,
) -> np.ndarray:
    """Rasterize one pose to an (H, W, 3) uint8 RGB array of its canvas size.

    MISSING joints and limbs with a missing endpoint are skipped. Pure
    function of (pose, style): identical inputs give byte-identical output.
    """
    if len(style.limb_palette) != len(topology):
        raise ContractError(
            f"palette has {len(style.limb_palette)} colors for {len(topology)} edges"
        )
    w, h = pose.canvas
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = style.background

    limb_r = style.limb_thickness / 2.0
    for k, (i, j) in enumerate(topology.edges):
        a, b = pose.body[i], pose.body[j]
        if a.missing or b.missing:
            continue
        _paint_capsule(img, a.x, a.y, b.x, b.y, limb_r, style.limb_palette[k])

    joint_color = {NECK: style.limb_palette[0]}
    for k, (_, j) in enumerate(topology.edges):
        joint_color[j] = style.limb_palette[k]
    for idx, kp in enumerate(pose.body):
        if kp.missing or idx not in joint_color:
            continue
        _paint_disc(img, kp.x, kp.y, float(style.joint_radius), joint_color[idx])

    if style.draw_hands:
        small_r = max(1, style.limb_thickness // 2) / 2.0
        small_joint = float(max(1, style.joint_radius // 2))
        for hand in (pose.hand_right, pose.hand_left):
            if hand is None:
                continue
            for k, (i, j) in enumerate(_HAND_EDGES):
                a, b = hand[i], hand[j]
                if a.missing or b.missing:
                    continue
                _paint_capsule(img, a.x, a.y, b.x, b.y, small_r, _HAND_EDGE_COLORS[k])
            for kp in hand:
                if not kp.missing:
                    _paint_disc(img, kp.x, kp.y, small_joint, _HAND_JOINT_COLOR)

    if style.draw_face and pose.face is not None:
        face_r = float(max(1, style.joint_radius // 2))
        for kp in pose.face:
            if not kp.missing:
                _paint_disc(img, kp.x, kp.y, face_r, _FACE_COLOR)

    return img


def encode_png(img: np.ndarray) -> bytes:
    """PNG bytes for an RGB raster; encoding settings pinned for determinism."""
    import io

    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(buf, format="PNG", compress_level=1)
    return buf.getvalue()


def decode_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def render_sequence(
    seq: PoseSequence,
    style: RenderStyle = RenderStyle(),
    out_dir=".",
    *,
    topology: LimbTopology = BODY_18_TOPOLOGY,
) -> list[Path]:
    """Write one PNG per frame, frame_%05d.png, into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(item):
        index, frame = item
        path = out_dir / f"frame_{index:05d}.png"
        try:
            path.write_bytes(encode_png(render_pose(frame, style, topology=topology)))
        except OSError as exc:
            raise OSError(f"frame {index}: {exc}") from exc
        return path

    return map_frames(one, list(enumerate(seq.frames)))
