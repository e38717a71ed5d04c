"""Command-line interface.

Every command finishes with an explicit status line ("OK: ..." on stdout
or "FAILED: ..." on stderr) and maps failures to stable exit codes:
2 for configuration/validation problems, 3 for I/O and malformed files,
4 for numeric failures.  Commands that write a directory drop a FAILED
marker file into it when they die partway, so partial outputs are never
mistaken for finished ones.

Randomized commands take --seed; without one a seed is drawn from OS
entropy and printed, so any run can be reproduced.  --threads (or the
AKIRA_KIT_THREADS environment variable) caps the kernel thread pool; all
outputs are identical whatever the thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import backend as _backend
from .bokeh import DEFAULT_CAP, DEFAULT_GAIN, blur_radius_map
from .camera import Distortion
from .errors import ConfigError, FormatError, NumericError
from .flow import (
    DEFAULT_THRESHOLD,
    FlowSimResult,
    distortsim,
    flowsim,
    focus_area,
    zoomsim,
)
from .formats import (
    read_flo,
    read_params_jsonl,
    read_pfm,
    write_camera_maps,
    write_params_jsonl,
    write_png,
)
from .pipeline import augment_clip
from .sampling import AugmentConfig
from .synth import SceneSpec, load_clip, render_scene, write_bundle
from .trajectory import align_and_evaluate, read_tum

PROG = "akira-kit"


def _resolve_threads(args) -> int:
    n = args.threads
    if n is None:
        env = os.environ.get("AKIRA_KIT_THREADS", "").strip()
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(f"AKIRA_KIT_THREADS must be an integer, got {env!r}")
        else:
            n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return _backend.set_num_threads(n)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    seed = int(np.random.SeedSequence().entropy) % (2**63)
    print(f"seed: {seed} (generated from entropy)")
    return seed


@contextmanager
def _failure_marker(out_dir):
    """Leave a FAILED file behind if the body dies after output started."""
    try:
        yield
    except BaseException as exc:
        if os.path.isdir(out_dir):
            try:
                with open(os.path.join(out_dir, "FAILED"), "w") as f:
                    f.write(f"{type(exc).__name__}: {exc}\n")
            except OSError:
                pass
        raise


def _emit(args, report: dict, human_lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(report, indent=2))
    else:
        for line in human_lines:
            print(line)


def _load_flow_set(path) -> list[tuple[str, np.ndarray]]:
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.lower().endswith(".flo"))
        if not names:
            raise FormatError("no .flo files found", path=str(path))
        return [(n, read_flo(os.path.join(path, n))) for n in names]
    return [(os.path.basename(path), read_flo(path))]


def _aggregate(results: list[FlowSimResult]) -> dict:
    scores = [r.score for r in results]
    return {
        "pairs": len(results),
        "score": float(np.mean(scores)),
        "score_pct": float(100.0 * np.mean(scores)),
        "valid_fraction": float(np.mean([r.valid_fraction for r in results])),
        "empty_pairs": sum(r.empty for r in results),
    }


# ---------------------------------------------------------------------------
# Commands

def cmd_augment(args) -> str:
    with open(args.config, "r") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ConfigError(f"augment config must be a JSON object, got {type(raw).__name__}")
    cfg_seed = raw.pop("seed", None)
    config = AugmentConfig.from_dict(raw)
    seed = args.seed if args.seed is not None else cfg_seed
    if seed is None:
        seed = _resolve_seed(args)
    frames, params = load_clip(args.input)
    result = augment_clip(frames, params, int(seed), config, backend=args.backend)

    os.makedirs(os.path.join(args.out, "frames"), exist_ok=True)
    with _failure_marker(args.out):
        for i, px in enumerate(result.frames):
            write_png(os.path.join(args.out, "frames", f"{i:05d}.png"), px)
        write_params_jsonl(os.path.join(args.out, "params.jsonl"), result.params)
        maps = [p.camera_map(config.sigmoid_scale) for p in result.params]
        write_camera_maps(os.path.join(args.out, "cameramap.akmp"), maps)
        with open(os.path.join(args.out, "trajectory.json"), "w") as f:
            json.dump(
                {"seed": int(seed), "frames": result.trajectory.records()}, f, indent=2
            )
            f.write("\n")
    flags = result.trajectory.flags
    fired = [n for n, on in (("bokeh", flags.bokeh), ("distortion", flags.distortion), ("zoom", flags.zoom)) if on]
    return (
        f"augmented {len(result.frames)} frames into {args.out} "
        f"(seed {seed}, effects: {', '.join(fired) if fired else 'none'})"
    )


def cmd_cameramap(args) -> str:
    params = read_params_jsonl(args.params)
    maps = [p.camera_map(args.sigmoid_scale) for p in params]
    tmp = args.out + ".tmp"
    write_camera_maps(tmp, maps)
    os.replace(tmp, args.out)
    h, w = maps[0].shape
    return f"wrote {len(maps)} camera maps ({h}x{w}x9) to {args.out}"


def cmd_flowsim(args) -> str:
    ref = _load_flow_set(args.ref)
    gen = _load_flow_set(args.gen)
    if len(ref) != len(gen):
        raise ConfigError(f"{len(ref)} reference flows vs {len(gen)} generated flows")
    results = [flowsim(r, g, args.threshold) for (_, r), (_, g) in zip(ref, gen)]
    report = _aggregate(results)
    lines = [
        f"{name}: score {r.score:+.4f} ({r.percent:+.2f}), valid {100 * r.valid_fraction:.1f}%"
        + ("  [empty mask]" if r.empty else "")
        for (name, _), r in zip(ref, results)
    ]
    lines.append(f"mean score {report['score']:+.4f} ({report['score_pct']:+.2f} x100)")
    _emit(args, report, lines)
    return f"flowsim over {report['pairs']} pairs: {report['score_pct']:+.2f}"


def _pairwise_metric(args, kind: str) -> str:
    params = read_params_jsonl(args.params)
    gen = _load_flow_set(args.gen)
    if len(gen) != len(params) - 1:
        raise ConfigError(
            f"{len(params)} camera records imply {len(params) - 1} flow pairs, "
            f"got {len(gen)} generated flows"
        )
    intr = params[0].intrinsics
    results = []
    for i, (_, g) in enumerate(gen):
        if kind == "zoom":
            s_cur = params[i].intrinsics.fx / intr.fx
            s_next = params[i + 1].intrinsics.fx / intr.fx
            # zooming in pushes content outward: reference is (next, current)
            results.append(zoomsim(g, intr, s_next, s_cur, args.threshold))
        else:
            # a stronger radial gain widens the view and pulls content
            # inward, so the reference pair is (current, next)
            results.append(
                distortsim(g, intr, params[i].distortion, params[i + 1].distortion, args.threshold)
            )
    report = _aggregate(results)
    lines = [
        f"pair {i}: score {r.score:+.4f}" + ("  [empty mask]" if r.empty else "")
        for i, r in enumerate(results)
    ]
    lines.append(f"mean score {report['score']:+.4f} ({report['score_pct']:+.2f} x100)")
    _emit(args, report, lines)
    return f"{kind}sim over {report['pairs']} pairs: {report['score_pct']:+.2f}"


def cmd_zoomsim(args) -> str:
    return _pairwise_metric(args, "zoom")


def cmd_distortsim(args) -> str:
    return _pairwise_metric(args, "distort")


def cmd_focusarea(args) -> str:
    disparity = read_pfm(args.disparity)
    if disparity.ndim != 2:
        raise ConfigError(f"disparity must be single-channel, got shape {disparity.shape}")
    h, w = disparity.shape
    fu = args.focus_u if args.focus_u is not None else (w - 1) / 2.0
    fv = args.focus_v if args.focus_v is not None else (h - 1) / 2.0
    radius = blur_radius_map(disparity, args.alpha, fu, fv, gain=args.gain, cap=args.cap)
    frac = focus_area(radius, args.radius_threshold)
    report = {
        "focus_area": frac,
        "alpha": args.alpha,
        "focus_u": fu,
        "focus_v": fv,
        "radius_threshold": args.radius_threshold,
    }
    _emit(args, report, [f"focus area: {frac:.4f} (blur radius < {args.radius_threshold} px)"])
    return f"focus area {frac:.4f}"


def cmd_rpe(args) -> str:
    est = read_tum(args.est)
    ref = read_tum(args.ref)
    report = align_and_evaluate(est, ref, mode=args.mode, scale=not args.no_scale)
    lines = [
        f"poses: {report['n_poses']}  scale ratio: {report['scale_ratio']:.6g}",
        f"APE  trans {report['ape_trans']:.6f}  rot {report['ape_rot_deg']:.6f} deg",
        f"RPE  trans {report['rpe_trans']:.6f}  rot {report['rpe_rot_deg']:.6f} deg",
    ]
    _emit(args, report, lines)
    return (
        f"rpe trans {report['rpe_trans']:.6f}, rot {report['rpe_rot_deg']:.6f} deg "
        f"over {report['n_poses']} poses"
    )


def cmd_synth(args) -> str:
    with open(args.spec, "r") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ConfigError(f"scene spec must be a JSON object, got {type(raw).__name__}")
    file_seed = raw.pop("seed", None)
    scene = raw.pop("scene", None)
    spec = SceneSpec.from_dict(scene if scene is not None else raw)
    seed = args.seed if args.seed is not None else file_seed
    if seed is None:
        seed = _resolve_seed(args)
    bundle = render_scene(spec, int(seed), backend=args.backend)
    os.makedirs(args.out, exist_ok=True)
    with _failure_marker(args.out):
        write_bundle(bundle, args.out)
    return (
        f"rendered {bundle.n_frames} frames ({spec.width}x{spec.height}, "
        f"texture {spec.texture}) into {args.out} with seed {seed}"
    )


# ---------------------------------------------------------------------------
# Parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Camera-model toolkit: optical augmentation, camera maps, "
        "flow and trajectory fidelity metrics, synthetic oracle scenes.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="kernel thread cap (default: AKIRA_KIT_THREADS or all cores)")
    common.add_argument("--backend", choices=("numba", "numpy"), default=None, help="force a kernel backend (default: numba when available)")
    common.add_argument("--json", action="store_true", help="print the machine-readable report")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", parents=[common], help="apply randomized optical augmentations to a clip")
    p.add_argument("--input", required=True, help="clip directory (frames/, optional disparity/, params.jsonl)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", required=True, help="augmentation config JSON")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("cameramap", parents=[common], help="build packed camera maps from a params sidecar")
    p.add_argument("--params", required=True, help="per-frame camera records (JSON lines)")
    p.add_argument("--out", required=True, help="output .akmp path")
    p.add_argument("--sigmoid-scale", type=float, default=1.0, help="pre-scale on alpha inside the aperture sigmoid")
    p.set_defaults(func=cmd_cameramap)

    p = sub.add_parser("flowsim", parents=[common], help="directional agreement between two flow sets")
    p.add_argument("--ref", required=True, help=".flo file or directory of them")
    p.add_argument("--gen", required=True, help=".flo file or directory of them")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="minimum motion (px) for a pixel to count")
    p.set_defaults(func=cmd_flowsim)

    p = sub.add_parser("zoomsim", parents=[common], help="agreement between generated flows and the zoom implied by camera records")
    p.add_argument("--params", required=True)
    p.add_argument("--gen", required=True, help="directory of per-pair .flo files")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_zoomsim)

    p = sub.add_parser("distortsim", parents=[common], help="agreement between generated flows and the distortion implied by camera records")
    p.add_argument("--params", required=True)
    p.add_argument("--gen", required=True, help="directory of per-pair .flo files")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_distortsim)

    p = sub.add_parser("focusarea", parents=[common], help="fraction of a frame left sharp by an aperture setting")
    p.add_argument("--disparity", required=True, help="disparity map (.pfm, values in [0, 1])")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--focus-u", type=float, default=None)
    p.add_argument("--focus-v", type=float, default=None)
    p.add_argument("--gain", type=float, default=DEFAULT_GAIN)
    p.add_argument("--cap", type=float, default=DEFAULT_CAP)
    p.add_argument("--radius-threshold", type=float, default=1.0)
    p.set_defaults(func=cmd_focusarea)

    p = sub.add_parser("rpe", parents=[common], help="trajectory error of an estimate against a reference (TUM files)")
    p.add_argument("--est", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--mode", choices=("delta", "se3"), default="delta")
    p.add_argument("--no-scale", action="store_true", help="skip the path-length scale correction")
    p.set_defaults(func=cmd_rpe)

    p = sub.add_parser("synth", parents=[common], help="render a synthetic oracle bundle from a scene spec")
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.add_argument("--seed", type=int, default=None, help="overrides the spec seed")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _resolve_threads(args)
        status = args.func(args)
    except ConfigError as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return 4
    print(f"OK: {status}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
