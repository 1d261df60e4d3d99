"""Command-line entry point.

Subcommands: align, metrics, render, kickstart, demo-gen. Knobs can come
from a JSON config file (--config); explicit flags win. Every command is
deterministic given identical inputs, config, and seed; commands that own
an output directory drop a manifest.json echoing the fully-resolved config.

Exit codes: 0 ok, 2 input validation, 3 I/O, 4 metric threshold exceeded,
5 generator adapter failure. POSEFORGE_THREADS caps internal frame
parallelism (outputs do not depend on it).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import GeneratorError, ParseError, PoseForgeError
from .io import parse_openpose_frame, parse_sequence, write_sequence
from .kickstart import IdentityGenerator, prepare_kickstart, run_generator
from .metrics import evaluate, report_to_json
from .model import Pose, PoseSequence
from .render import RenderStyle, render_sequence
from .retarget import RetargetConfig, compute_edge_ratios, retarget_sequence
from .synth import MOTIONS, REFERENCE_PRESETS, make_reference, make_sequence


def _parse_pair(raw: str, what: str, sep: str, cast) -> tuple:
    parts = raw.split(sep)
    if len(parts) != 2:
        raise ValueError(f"{what}: expected two values separated by {sep!r}, got {raw!r}")
    return (cast(parts[0]), cast(parts[1]))


def _epsilon_config(raw: Optional[str]) -> dict:
    if raw is None or raw == "zero":
        return {"epsilon_mode": "zero"}
    if raw in ("base-diff", "base_diff"):
        return {"epsilon_mode": "base_diff"}
    return {"epsilon_mode": "explicit",
            "epsilon": _parse_pair(raw, "--epsilon", ",", float)}


_STRATEGY_ALIASES = {"first": "first_frame", "first-frame": "first_frame"}


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"config file {path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ParseError(f"config file {path}: expected a JSON object")
    return data


def _pick(flag, config: dict, key: str, default):
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _resolve_retarget_config(args, config: dict) -> RetargetConfig:
    eps = _epsilon_config(_pick(getattr(args, "epsilon", None), config, "epsilon", None))
    strategy = _pick(getattr(args, "ratio_strategy", None), config, "ratio_strategy", "median")
    strategy = _STRATEGY_ALIASES.get(strategy, strategy)
    face_flag = getattr(args, "retarget_face", None)
    return RetargetConfig(
        ratio_strategy=strategy,
        undefined_ratio_policy=_pick(
            getattr(args, "undefined_ratio_policy", None), config,
            "undefined_ratio_policy", "inherit_unity"),
        hand_scale_source=_pick(
            getattr(args, "hand_scale_source", None), config,
            "hand_scale_source", "forearm_ratio"),
        retarget_face=bool(_pick(face_flag, config, "retarget_face", True)),
        **eps,
    )


def _resolve_style(args, config: dict) -> RenderStyle:
    style_cfg = dict(config.get("style", {}))
    style_path = getattr(args, "style", None)
    if style_path:
        style_cfg.update(_load_config(style_path))
    kwargs = {}
    for key in ("joint_radius", "limb_thickness", "draw_hands", "draw_face"):
        if key in style_cfg:
            kwargs[key] = style_cfg[key]
    if "background" in style_cfg:
        kwargs["background"] = tuple(style_cfg["background"])
    if "limb_palette" in style_cfg:
        kwargs["limb_palette"] = tuple(tuple(c) for c in style_cfg["limb_palette"])
    return RenderStyle(**kwargs)


def _style_manifest(style: RenderStyle) -> dict:
    return {
        "limb_palette": [list(c) for c in style.limb_palette],
        "joint_radius": style.joint_radius,
        "limb_thickness": style.limb_thickness,
        "background": list(style.background),
        "draw_hands": style.draw_hands,
        "draw_face": style.draw_face,
    }


def _load_reference_pose(path: str, canvas: Optional[str]) -> Pose:
    """Reference pose file: internal single-frame JSON/NDJSON, or an
    OpenPose document (which needs --reference-canvas for pixel scaling)."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.strip()
    try:
        doc = json.loads(stripped)
        is_single_json = True
    except json.JSONDecodeError:
        doc = None
        is_single_json = False
    if is_single_json and isinstance(doc, dict) and "people" in doc:
        if not canvas:
            raise ParseError(
                f"{path} is an OpenPose document; pass --reference-canvas WxH"
            )
        return parse_openpose_frame(stripped, _parse_pair(canvas, "--reference-canvas", "x", int))
    return parse_sequence(path).frames[0]


def _write_manifest(out_dir: Path, entries: dict) -> None:
    entries = dict(entries)
    entries["version"] = __version__
    (out_dir / "manifest.json").write_text(
        json.dumps(entries, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _add_retarget_flags(sub) -> None:
    sub.add_argument("--epsilon", help="root offset: zero | base-diff | dx,dy pixels")
    sub.add_argument("--ratio-strategy", dest="ratio_strategy",
                     choices=["median", "first", "first_frame", "max"],
                     help="template bone length aggregation (default median)")
    sub.add_argument("--undefined-ratio-policy", dest="undefined_ratio_policy",
                     choices=["inherit_unity", "mark_missing"])
    sub.add_argument("--hand-scale-source", dest="hand_scale_source",
                     choices=["forearm_ratio", "hand_bbox_ratio"])
    sub.add_argument("--no-retarget-face", dest="retarget_face",
                     action="store_const", const=False, default=None)
    sub.add_argument("--config", help="JSON config file; explicit flags win")
    sub.add_argument("--reference-canvas", dest="reference_canvas",
                     help="WxH, required when --reference-pose is an OpenPose document")


def _require(parser, args, config, names: list[str]) -> None:
    for name in names:
        if getattr(args, name, None) is None and name not in config:
            parser.error(f"--{name.replace('_', '-')} is required")


def cmd_align(parser, args) -> int:
    config = _load_config(args.config)
    _require(parser, args, config, ["template", "reference_pose", "out"])
    template_path = _pick(args.template, config, "template", None)
    reference_path = _pick(args.reference_pose, config, "reference_pose", None)
    out_dir = Path(_pick(args.out, config, "out", None))

    cfg = _resolve_retarget_config(args, config)
    template = parse_sequence(template_path)
    reference = _load_reference_pose(reference_path, args.reference_canvas)

    ratios = compute_edge_ratios(template, reference, cfg)
    aligned = retarget_sequence(template, reference, cfg)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_sequence(aligned, out_dir / "aligned.ndjson")

    manifest = cfg.as_manifest()
    manifest["command"] = "align"
    manifest["inputs"] = {"template": str(template_path),
                          "reference_pose": str(reference_path)}
    if args.render:
        style = _resolve_style(args, config)
        render_sequence(aligned, style, out_dir / "frames")
        manifest["style"] = _style_manifest(style)
    _write_manifest(out_dir, manifest)

    defined = int(ratios.defined.sum())
    print(f"aligned {len(aligned)} frames | {defined}/{len(ratios)} edges defined | "
          f"strategy={cfg.ratio_strategy} | epsilon={cfg.epsilon_mode}")
    return 0


def cmd_metrics(parser, args) -> int:
    config = _load_config(args.config)
    _require(parser, args, config, ["template", "output", "reference_pose"])
    template = parse_sequence(_pick(args.template, config, "template", None))
    # adapter output may legitimately leave the canvas; don't reject it here
    output = parse_sequence(_pick(args.output, config, "output", None),
                            validate_bounds=False)
    reference = _load_reference_pose(
        _pick(args.reference_pose, config, "reference_pose", None),
        args.reference_canvas)

    cfg = _resolve_retarget_config(args, config)
    ratios = compute_edge_ratios(template, reference, cfg)
    report = evaluate(template, output, reference, ratios, cfg)
    raw = report_to_json(report)
    if args.report:
        Path(args.report).write_bytes(raw)
    else:
        sys.stdout.write(raw.decode("utf-8"))

    if args.fail_above is not None:
        worst = max(
            max(report.per_edge_length_rel_error),
            max(report.angle_abs_error_rad),
            report.root_offset_drift,
        )
        if worst > args.fail_above:
            print(f"metrics exceed threshold: worst={worst:.6g} > {args.fail_above:.6g}",
                  file=sys.stderr)
            return 4
    return 0


def cmd_render(parser, args) -> int:
    config = _load_config(args.config)
    _require(parser, args, config, ["sequence", "out"])
    seq_path = _pick(args.sequence, config, "sequence", None)
    seq = parse_sequence(seq_path, validate_bounds=False)
    style = _resolve_style(args, config)
    out_dir = Path(_pick(args.out, config, "out", None))
    paths = render_sequence(seq, style, out_dir)
    _write_manifest(out_dir, {"command": "render", "style": _style_manifest(style),
                              "inputs": {"sequence": str(seq_path)}})
    print(f"rendered {len(paths)} frames into {out_dir}")
    return 0


def cmd_kickstart(parser, args) -> int:
    config = _load_config(args.config)
    _require(parser, args, config, ["template", "reference_pose", "reference_image", "out"])
    template_path = _pick(args.template, config, "template", None)
    reference_path = _pick(args.reference_pose, config, "reference_pose", None)
    image_path = Path(_pick(args.reference_image, config, "reference_image", None))
    out_dir = Path(_pick(args.out, config, "out", None))

    template = parse_sequence(template_path)
    reference = _load_reference_pose(reference_path, args.reference_canvas)
    cfg = _resolve_retarget_config(args, config)
    style = _resolve_style(args, config)

    bundle = prepare_kickstart(
        template, reference, image_path, cfg, out_dir, style=style,
        input_paths={"template": str(template_path),
                     "reference_pose": str(reference_path),
                     "reference_image": str(image_path)},
    )
    if args.adapter == "identity":
        generated = run_generator(IdentityGenerator(), bundle)
        print(f"kickstart bundle in {out_dir} | generated {generated.name}")
    else:
        print(f"kickstart bundle in {out_dir} | generation skipped")
    return 0


def cmd_demo_gen(parser, args) -> int:
    canvas = _parse_pair(args.canvas, "--canvas", "x", int)
    seq = make_sequence(
        args.motion, args.frames, canvas=canvas, scale=args.scale,
        seed=args.seed, with_hands=not args.no_hands, with_face=args.face,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sequence(seq, out)
    message = f"wrote {len(seq)} {args.motion} frames to {out}"

    if args.reference_preset:
        multipliers = REFERENCE_PRESETS[args.reference_preset]
        ref_canvas = (_parse_pair(args.reference_canvas, "--reference-canvas", "x", int)
                      if args.reference_canvas else canvas)
        shift = (_parse_pair(args.reference_shift, "--reference-shift", ",", float)
                 if args.reference_shift else (0.0, 0.0))
        reference = make_reference(seq.frames[0], multipliers, canvas=ref_canvas, shift=shift)
        ref_out = Path(args.reference_out) if args.reference_out else out.with_name(
            out.stem + "_reference.ndjson")
        write_sequence(PoseSequence(frames=(reference,)), ref_out)
        message += f" | {args.reference_preset} reference to {ref_out}"
    print(message)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poseforge",
        description="Training-free pose retargeting and alignment preparation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_align = sub.add_parser("align", help="retarget a template sequence onto a reference skeleton")
    p_align.add_argument("--template", help="template sequence (NDJSON file or frame directory)")
    p_align.add_argument("--reference-pose", dest="reference_pose")
    p_align.add_argument("--out")
    p_align.add_argument("--render", action="store_true", help="also write PNG frames")
    p_align.add_argument("--style", help="JSON render style file (with --render)")
    _add_retarget_flags(p_align)
    p_align.set_defaults(func=cmd_align)

    p_metrics = sub.add_parser("metrics", help="measure alignment quality of an output sequence")
    p_metrics.add_argument("--template")
    p_metrics.add_argument("--output")
    p_metrics.add_argument("--reference-pose", dest="reference_pose")
    p_metrics.add_argument("--report", help="write the JSON report here instead of stdout")
    p_metrics.add_argument("--fail-above", dest="fail_above", type=float,
                           help="exit 4 when any error exceeds this")
    _add_retarget_flags(p_metrics)
    p_metrics.set_defaults(func=cmd_metrics)

    p_render = sub.add_parser("render", help="rasterize a sequence to PNG frames")
    p_render.add_argument("--sequence")
    p_render.add_argument("--out")
    p_render.add_argument("--style", help="JSON render style file")
    p_render.add_argument("--config")
    p_render.set_defaults(func=cmd_render)

    p_kick = sub.add_parser("kickstart", help="prepare the first-frame conditioning bundle")
    p_kick.add_argument("--template")
    p_kick.add_argument("--reference-pose", dest="reference_pose")
    p_kick.add_argument("--reference-image", dest="reference_image")
    p_kick.add_argument("--out")
    p_kick.add_argument("--adapter", choices=["identity", "none"], default="identity")
    p_kick.add_argument("--style")
    _add_retarget_flags(p_kick)
    p_kick.set_defaults(func=cmd_kickstart)

    p_demo = sub.add_parser("demo-gen", help="generate a synthetic motion fixture")
    p_demo.add_argument("--motion", choices=list(MOTIONS), required=True)
    p_demo.add_argument("--frames", type=int, required=True)
    p_demo.add_argument("--canvas", default="512x768")
    p_demo.add_argument("--scale", type=float, default=1.0)
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--out", required=True)
    p_demo.add_argument("--no-hands", action="store_true")
    p_demo.add_argument("--face", action="store_true")
    p_demo.add_argument("--reference-preset", dest="reference_preset",
                        choices=sorted(REFERENCE_PRESETS))
    p_demo.add_argument("--reference-canvas", dest="reference_canvas")
    p_demo.add_argument("--reference-shift", dest="reference_shift",
                        help="dx,dy pixels applied to the reference root")
    p_demo.add_argument("--reference-out", dest="reference_out")
    p_demo.set_defaults(func=cmd_demo_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(parser, args)
    except SystemExit as exc:
        # argparse usage errors (and --help/--version) funnel through here
        return int(exc.code or 0)
    except GeneratorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except (PoseForgeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
