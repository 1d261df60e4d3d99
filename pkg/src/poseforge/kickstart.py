"""First-frame conditioning preparation.

Downstream pose-guided image generators want a (reference image, pose)
pair whose pose already matches the motion's opening frame. This module
aligns the template toward the reference, exports the aligned sequence and
a render of its first frame, and packages everything with a manifest. The
generator itself is external; the seam is a small adapter interface with a
pass-through stub so the whole pipeline stays testable offline.

The default root offset here is zero: snapping positions instead invites
mismatches between half-body references and full-body motions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, runtime_checkable

from . import __version__
from .errors import GeneratorError
from .io import parse_sequence, serialize_sequence, write_sequence
from .model import BODY_18_TOPOLOGY, LimbTopology, Pose, PoseSequence
from .render import RenderStyle, encode_png, render_pose
from .retarget import RetargetConfig, retarget_sequence

ALIGNED_NAME = "aligned.ndjson"
FIRST_FRAME_NAME = "first_frame.png"
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class KickstartBundle:
    reference_image_path: Path
    first_frame_pose: Pose
    aligned_sequence_ref: Path
    manifest: dict


@runtime_checkable
class GeneratorAdapter(Protocol):
    """Seam for an external pose-guided image generator.

    ``generate`` receives the reference image path and the aligned
    first-frame pose and must write an image to ``out_path``; a conforming
    adapter is deterministic for a fixed (image, pose) pair and produces
    output with the pose's canvas dimensions.
    """

    name: str

    def generate(self, reference_image: Path, pose: Pose, out_path: Path) -> Path:
        ...


class IdentityGenerator:
    """Pass-through stub: the 'generated' image is a byte-copy of the
    reference image. Lets the full pipeline run without any model."""

    name = "identity"

    def generate(self, reference_image: Path, pose: Pose, out_path: Path) -> Path:
        out_path.write_bytes(Path(reference_image).read_bytes())
        return out_path


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def prepare_kickstart(
    template: PoseSequence,
    reference: Pose,
    reference_image: Path,
    cfg: RetargetConfig = RetargetConfig(),
    out_dir: Path = Path("."),
    *,
    style: RenderStyle = RenderStyle(),
    topology: LimbTopology = BODY_18_TOPOLOGY,
    input_paths: Optional[dict] = None,
) -> KickstartBundle:
    """Align the template onto the reference and write the conditioning pair.

    Writes the aligned NDJSON sequence, a PNG render of its first frame, and
    a manifest echoing every knob that influenced the output. ``input_paths``
    labels the manifest's inputs block; when absent, content digests of the
    in-memory inputs are recorded instead.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reference_image = Path(reference_image)

    aligned = retarget_sequence(template, reference, cfg, topology=topology)
    aligned_path = out_dir / ALIGNED_NAME
    write_sequence(aligned, aligned_path)
    (out_dir / FIRST_FRAME_NAME).write_bytes(
        encode_png(render_pose(aligned.frames[0], style, topology=topology))
    )

    inputs = dict(input_paths or {})
    inputs.setdefault("template", _digest(serialize_sequence(template)))
    inputs.setdefault(
        "reference_pose",
        _digest(serialize_sequence(PoseSequence(frames=(reference,)))),
    )
    inputs.setdefault("reference_image", str(reference_image))

    manifest = cfg.as_manifest()
    manifest["version"] = __version__
    manifest["inputs"] = inputs
    (out_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    return KickstartBundle(
        reference_image_path=reference_image,
        first_frame_pose=aligned.frames[0],
        aligned_sequence_ref=aligned_path,
        manifest=manifest,
    )


def load_bundle(out_dir: Path) -> KickstartBundle:
    """Rehydrate a bundle previously written by prepare_kickstart."""
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    aligned_path = out_dir / ALIGNED_NAME
    aligned = parse_sequence(aligned_path, validate_bounds=False)
    return KickstartBundle(
        reference_image_path=Path(manifest["inputs"]["reference_image"]),
        first_frame_pose=aligned.frames[0],
        aligned_sequence_ref=aligned_path,
        manifest=manifest,
    )


def run_generator(
    adapter: GeneratorAdapter,
    bundle: KickstartBundle,
    out_path: Optional[Path] = None,
) -> Path:
    """Invoke a generator adapter on the bundle's conditioning pair.

    Adapter failures surface as GeneratorError carrying the adapter name and
    the bundle manifest.
    """
    if out_path is None:
        suffix = bundle.reference_image_path.suffix or ".png"
        out_path = bundle.aligned_sequence_ref.parent / f"kickstart{suffix}"
    try:
        result = adapter.generate(
            bundle.reference_image_path, bundle.first_frame_pose, Path(out_path)
        )
    except Exception as exc:
        raise GeneratorError(getattr(adapter, "name", "?"), bundle.manifest, str(exc)) from exc
    return Path(result)
