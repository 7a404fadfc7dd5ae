"""Command line: simulate, estimate, postproc, eval, render, bench.

Exit codes: 0 success, 2 usage, 3 config, 4 parse, 5 I/O, 6 domain
(shape mismatch, empty overlap, ...), 1 anything else.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import config as cfgmod
from .errors import ConfigError, EslError, IOFailure
from .events import TimeMap, read_events, write_events
from .metrics import fill_rate, rmse
from .pfm import read_pfm, write_pfm
from .pipeline import estimate, evaluation_ground_truth, format_tsv, run_bench, camera_map
from .postproc import postprocess
from .render import colorize, write_ppm
from .scenes import SCENE_NAMES
from .simulator import simulate_scan

# (flag, config key, type) shortcuts; every key is also reachable with --set
_SIM_FLAGS = [
    ("--scene", "scene.name", str),
    ("--jitter", "noise.jitter_sigma", float),
    ("--latency", "noise.latency", float),
    ("--burst-group", "noise.burst_group", int),
    ("--dropout", "noise.dropout_prob", float),
    ("--seed", "noise.seed", int),
    ("--frequency", "timing.frequency", float),
]
_ESL_FLAGS = [
    ("--window", "esl.window", int),
    ("--disparity-min", None, int),
    ("--disparity-max", None, int),
    ("--min-valid-fraction", "esl.min_valid_fraction", float),
    ("--init-radius", "esl.init_radius", int),
    ("--esl-init", "run.esl_init", str),
    ("--tv-refine-lambda", "esl.tv_refine.lam", float),
    ("--tv-refine-iterations", "esl.tv_refine.iterations", int),
]
_SGM_FLAGS = [
    ("--p1", "sgm.p1", float),
    ("--p2", "sgm.p2", float),
    ("--directions", "sgm.directions", int),
    ("--latency-est", "run.latency_est", float),
]
_POST_FLAGS = [
    ("--median-kernel", "postproc.median_kernel", int),
    ("--max-hole-radius", "postproc.max_hole_radius", float),
    ("--tv-lambda", "postproc.tv_lambda", float),
    ("--tv-iterations", "postproc.tv_iterations", int),
]


def _dest(flag):
    return flag.lstrip("-").replace("-", "_")


def _add_flags(p, table):
    for flag, key, typ in table:
        text = cfgmod.KEY_HELP.get(key, "") if key else "sets the same key in [esl] and [sgm]"
        p.add_argument(flag, type=typ, default=None, help=f"{text} ({key})" if key else text)


def _add_common(p):
    p.add_argument("-c", "--config", help="TOML run configuration")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")


def _collect(args, tables):
    out = []
    for table in tables:
        for flag, key, _ in table:
            v = getattr(args, _dest(flag), None)
            if v is None:
                continue
            keys = [key] if key else [f"esl.{_dest(flag)}", f"sgm.{_dest(flag)}"]
            for k in keys:
                out.append(f"{k}={_toml(v)}")
    for name, key in (("subpixel", "esl.subpixel"), ("median", "postproc.median"),
                      ("inpaint", "postproc.inpaint"), ("tv", "postproc.tv")):
        v = getattr(args, name, None)
        if v is not None:
            out.append(f"{key}={'true' if v else 'false'}")
    return out


def _toml(v):
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(v)


def _load_config(args, tables=()):
    cfg = cfgmod.load(args.config) if getattr(args, "config", None) else cfgmod.RunConfig()
    cfg = cfgmod.apply_overrides(cfg, _collect(args, tables) + list(getattr(args, "set", [])))
    cfg = cfgmod.apply_env(cfg)
    if getattr(args, "threads", 1) < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def cmd_simulate(args):
    cfg = _load_config(args, [_SIM_FLAGS])
    scene = cfg.build_scene()
    stream = simulate_scan(scene, cfg.noise, args.pass_index)
    write_events(stream, args.events)
    if args.gt:
        write_pfm(args.gt, evaluation_ground_truth(cfg))
    if args.tau_c:
        write_pfm(args.tau_c, camera_map(cfg, stream).to_array())
    return 0


def cmd_estimate(args):
    cfg = _load_config(args, [_ESL_FLAGS, _SGM_FLAGS])
    if args.method:
        cfg = replace(cfg, run=replace(cfg.run, method=args.method))
    if args.events:
        tau_c = camera_map(cfg, read_events(args.events))
    else:
        tau_c = TimeMap.from_array(read_pfm(args.tau_c))
    tau_p = TimeMap.from_array(read_pfm(args.tau_p)) if args.tau_p else None
    depth = estimate(cfg, tau_c, tau_p=tau_p, threads=args.threads)
    write_pfm(args.out, depth)
    return 0


def cmd_postproc(args):
    cfg = _load_config(args, [_POST_FLAGS])
    write_pfm(args.out, postprocess(read_pfm(args.input), cfg.postproc))
    return 0


def cmd_eval(args):
    est = read_pfm(args.est)
    gt = read_pfm(args.gt)
    fr = fill_rate(est, gt, args.threshold)
    err = rmse(est, gt)
    text = "scene\tmethod\tFR\tRMSE_cm\n" + f"{args.scene}\t{args.method}\t{fr:.4f}\t{err:.4f}\n"
    _write_text(args.out, text)
    return 0


def cmd_render(args):
    data = read_pfm(args.input)
    write_ppm(args.out, colorize(data, tuple(args.range) if args.range else None))
    return 0


def cmd_bench(args):
    cfg = _load_config(args)
    out_dir = args.out_dir or cfg.run.output_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create {out_dir}: {exc}") from exc
    scenes = args.scenes or list(SCENE_NAMES)
    rows, maps = run_bench(cfg, scenes, args.sigmas, threads=args.threads, keep_maps=not args.no_figures)
    table = format_tsv(rows)
    _write_text(os.path.join(out_dir, "bench.tsv"), table)
    if not args.quiet:
        sys.stdout.write(table)
    if not args.no_figures:
        from .report import write_figures

        write_figures(rows, maps, out_dir, panel_sigma=2.0)
        for key, depth in maps.items():
            if len(key) == 4 and key[3] == "raw" and np.isfinite(depth).any():
                gt = maps[(key[0], "gt")]
                ok = np.isfinite(gt)
                vr = (float(np.min(gt[ok])), float(np.max(gt[ok]))) if ok.any() else None
                write_ppm(os.path.join(out_dir, f"{key[0]}_{key[1]:g}_{key[2]}.ppm"), colorize(depth, vr))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="esl-depth",
        description="Depth from an event camera and a raster-scanning laser projector.",
        epilog="config keys ([section] key in the TOML file, or --set section.key=value):\n"
        + cfgmod.describe_keys()
        + f"\n\n${cfgmod.SEED_ENV} overrides noise.seed.\n"
        "exit codes: 0 ok, 2 usage, 3 config, 4 parse, 5 I/O, 6 domain, 1 other",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate one scan of a scene into an event file")
    _add_common(s)
    _add_flags(s, _SIM_FLAGS)
    s.add_argument("--events", required=True, help="output event file")
    s.add_argument("--gt", help="output ground-truth depth (PFM)")
    s.add_argument("--tau-c", help="output camera time map (PFM)")
    s.add_argument("--pass-index", type=int, default=0, help="scan pass (selects the noise stream)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", help="estimate depth from events or a camera time map")
    _add_common(s)
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--events", help="input event file")
    src.add_argument("--tau-c", help="input camera time map (PFM)")
    s.add_argument("--tau-p", help="projector time map on the camera grid (PFM); default from config")
    s.add_argument("--method", choices=cfgmod.METHODS, help="overrides run.method")
    s.add_argument("--subpixel", action=argparse.BooleanOptionalAction, default=None,
                   help=cfgmod.KEY_HELP["esl.subpixel"])
    _add_flags(s, _ESL_FLAGS)
    _add_flags(s, _SGM_FLAGS)
    s.add_argument("--out", required=True, help="output depth (PFM)")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("postproc", help="median, inpainting and TV on a depth map")
    _add_common(s)
    for name in ("median", "inpaint", "tv"):
        s.add_argument(f"--{name}", action=argparse.BooleanOptionalAction, default=None,
                       help=cfgmod.KEY_HELP[f"postproc.{name}"])
    _add_flags(s, _POST_FLAGS)
    s.add_argument("--in", dest="input", required=True, help="input depth (PFM)")
    s.add_argument("--out", required=True, help="output depth (PFM)")
    s.set_defaults(func=cmd_postproc)

    s = sub.add_parser("eval", help="RMSE and fill rate of a depth map against ground truth")
    s.add_argument("--est", required=True, help="estimated depth (PFM)")
    s.add_argument("--gt", required=True, help="ground-truth depth (PFM)")
    s.add_argument("--out", help="output TSV (default: stdout)")
    s.add_argument("--scene", default="-", help="scene label for the row")
    s.add_argument("--method", default="-", help="method label for the row")
    s.add_argument("--threshold", type=float, default=0.01, help="fill-rate tolerance as a fraction of mean depth")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("render", help="pseudocolor PPM of a depth or time map")
    s.add_argument("--in", dest="input", required=True, help="input map (PFM)")
    s.add_argument("--out", required=True, help="output image (PPM)")
    s.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"), help="value range (default: auto)")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("bench", help="all methods over scenes and a jitter sweep; TSV and figures")
    _add_common(s)
    s.add_argument("--out-dir", help="output directory (default: run.output_dir)")
    s.add_argument("--sigmas", type=float, nargs="+", default=[0.0, 2.0, 8.0], help="jitter levels (µs)")
    s.add_argument("--scenes", nargs="+", choices=SCENE_NAMES, help="scenes (default: all)")
    s.add_argument("--no-figures", action="store_true", help="skip PNG figures and PPM renders")
    s.add_argument("--quiet", action="store_true", help="do not echo the table")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EslError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
