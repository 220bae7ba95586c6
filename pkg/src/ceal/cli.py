"""Command-line entry points: run experiments, sweep, serve annotations."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from ceal import harness


def _load_spec(args: argparse.Namespace) -> harness.ExperimentSpec:
    if args.spec:
        with open(args.spec) as fh:
            raw = yaml.safe_load(fh) or {}
        return harness.spec_from_dict(raw)
    return harness.preset(args.preset)


def _cmd_run(args: argparse.Namespace) -> int:
    spec = _load_spec(args)
    result = harness.run_experiment(spec)
    out = Path(args.out)
    harness.write_outputs(result, out)
    for variant in spec.variants:
        print(f"{variant}: final accuracy {result.final_accuracy(variant):.4f}")
    print(f"wrote {out / 'curves.csv'}")
    return 0


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = _load_spec(args)
    if args.delta0:
        delta0_values = _parse_floats(args.delta0)
    else:
        d0 = spec.ceal.delta0
        delta0_values = [0.5 * d0, d0, 1.5 * d0]
    if args.dr:
        decay_values = _parse_floats(args.dr)
    else:
        dr = spec.ceal.decay_rate
        decay_values = [0.0, dr, 2.0 * dr]
    cells = harness.sweep_sensitivity(spec, delta0_values, decay_values)
    out = Path(args.out)
    harness.write_sweep_outputs(cells, out)
    for cell in cells:
        print(
            f"delta0={cell.delta0:.5f} dr={cell.decay_rate:.5f} "
            f"final={cell.mean_final_accuracy:.4f} +/- {cell.stddev_final_accuracy:.4f}"
        )
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from ceal import service

    service.serve(port=args.port, images_dir=args.images_dir, ui_dir=args.ui_dir)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ceal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment spec and write curve data")
    run_p.add_argument("--spec", help="YAML experiment spec (see README)")
    run_p.add_argument(
        "--preset",
        default="synthetic",
        choices=["synthetic", "cacd", "caltech256"],
        help="named defaults used when no spec file is given",
    )
    run_p.add_argument("--out", default="out", help="output directory")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="threshold/decay sensitivity sweep")
    sweep_p.add_argument("--spec", help="YAML experiment spec")
    sweep_p.add_argument("--preset", default="synthetic", choices=["synthetic", "cacd", "caltech256"])
    sweep_p.add_argument("--delta0", help="comma-separated delta0 values")
    sweep_p.add_argument("--dr", help="comma-separated decay-rate values")
    sweep_p.add_argument("--out", default="out", help="output directory")
    sweep_p.set_defaults(func=_cmd_sweep)

    serve_p = sub.add_parser("serve", help="start the annotation HTTP service")
    serve_p.add_argument("--port", type=int, default=8080)
    serve_p.add_argument("--images-dir", help="sidecar directory of <id>.png display images")
    serve_p.add_argument("--ui-dir", default="frontend/dist", help="static UI bundle to serve at /ui")
    serve_p.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
