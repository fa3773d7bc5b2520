"""Command-line front door: training, distillation, adjustment, bench, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench as bench_mod
from .errors import CheckpointError, IngestionError, InvalidConfigError, \
    NumericError, RoleMismatchError, ShapeMismatchError
from .imageio import read_gray, read_rgb, write_rgb
from .networks import load_checkpoint
from .pipeline import AdjustRequest, dump_heatmaps, run_adjust
from .training import TrainConfig, distill_student, train_teacher

_ERRORS = (CheckpointError, IngestionError, InvalidConfigError, NumericError,
           RoleMismatchError, ShapeMismatchError, ValueError, OSError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cudi",
                                     description="Controllable exposure adjustment")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train-teacher", help="step 1: zero-reference teacher training")
    t.add_argument("--data", required=True, help="directory of 8-bit PNG images")
    t.add_argument("--out", required=True, help="output checkpoint path")
    t.add_argument("--steps", type=int, default=2000)
    t.add_argument("--width", type=float, default=1.0, help="channel width multiplier")
    t.add_argument("--patch", type=int, default=256)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--batch", type=int, default=8)
    t.add_argument("--trace", default=None, help="optional loss trace CSV")

    d = sub.add_parser("distill", help="step 2: distill the tangent-line student")
    d.add_argument("--teacher", required=True, help="teacher checkpoint")
    d.add_argument("--data", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--steps", type=int, default=3000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--patch", type=int, default=256)
    d.add_argument("--batch", type=int, default=8)
    d.add_argument("--trace", default=None)

    a = sub.add_parser("adjust", help="adjust one image")
    a.add_argument("--model", required=True, help="checkpoint path")
    a.add_argument("--engine", required=True, choices=["teacher", "student"])
    a.add_argument("--input", required=True)
    a.add_argument("--output", required=True)
    spec = a.add_mutually_exclusive_group(required=False)
    spec.add_argument("--exposure", type=float, help="uniform exposure value in [0,1]")
    spec.add_argument("--auto", choices=["under", "over"], help="automatic variant map")
    spec.add_argument("--map", help="painted 8-bit grayscale exposure map PNG")
    a.add_argument("--dump-maps", default=None, help="directory for parameter heatmaps")
    a.add_argument("--bypass", action="store_true",
                   help="skip estimation and apply the identity adjustment")

    b = sub.add_parser("bench", help="time the iterative curve vs the linear map")
    b.add_argument("--sizes", default="512,1024,2048", help="comma-separated square sizes")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--csv", default=None, help="output CSV path")
    b.add_argument("--reps", type=int, default=5)

    s = sub.add_parser("serve", help="run the local HTTP service")
    s.add_argument("--model", required=True)
    s.add_argument("--port", type=int, default=8080)
    s.add_argument("--host", default="127.0.0.1")
    return parser


def _cmd_train_teacher(args) -> int:
    cfg = TrainConfig(corpus_dir=args.data, patch_size=args.patch, steps=args.steps,
                      seed=args.seed, teacher_width=args.width, batch_size=args.batch)
    train_teacher(cfg, out_path=args.out, trace_path=args.trace, log_every=100)
    print(f"teacher checkpoint written to {args.out}")
    return 0


def _cmd_distill(args) -> int:
    cfg = TrainConfig(corpus_dir=args.data, patch_size=args.patch, steps=args.steps,
                      seed=args.seed, batch_size=args.batch)
    distill_student(args.teacher, cfg, out_path=args.out, trace_path=args.trace,
                    log_every=100)
    print(f"student checkpoint written to {args.out}")
    return 0


def _cmd_adjust(args) -> int:
    model = load_checkpoint(args.model)
    if args.exposure is not None:
        mode, value, painted = "uniform", args.exposure, None
    elif args.auto is not None:
        mode, value, painted = f"auto-{args.auto}", None, None
    elif args.map is not None:
        mode, value, painted = "map", None, read_gray(args.map)
    else:
        mode, value, painted = "uniform", 0.65, None
    request = AdjustRequest(image=read_rgb(args.input), engine=args.engine,
                            exposure_mode=mode, exposure_value=value,
                            painted_map=painted, bypass=args.bypass)
    output, stats, maps = run_adjust(model, request)
    write_rgb(args.output, output)
    if args.dump_maps:
        dump_heatmaps(maps, args.dump_maps)
    print(f"wrote {args.output}  region_mean_error={stats['region_mean_error']:.4f} "
          f"mean_brightness={stats['mean_brightness']:.4f} "
          f"elapsed_ms={stats['elapsed_ms']:.1f}")
    return 0


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    rows = []
    for size in sizes:
        for kind in bench_mod.KINDS:
            row = bench_mod.time_op(kind, size, size, repetitions=args.reps,
                                    threads=args.threads)
            rows.append(row)
            print(f"{kind:9s} {size}x{size} threads={args.threads} "
                  f"median={row['median_ns'] / 1e6:.2f} ms flops={row['flops']}")
    if args.csv:
        bench_mod.write_bench_csv(args.csv, rows)
        print(f"wrote {args.csv}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve
    model = load_checkpoint(args.model)
    print(f"serving {model.role} model on {args.host}:{args.port}")
    serve(model, port=args.port, host=args.host)
    return 0


_COMMANDS = {
    "train-teacher": _cmd_train_teacher,
    "distill": _cmd_distill,
    "adjust": _cmd_adjust,
    "bench": _cmd_bench,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
