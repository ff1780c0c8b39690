"""Command-line entry point: ``lsemix <subcommand> [flags]``.

Errors are reported as a single JSON object on stderr with a nonzero exit.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex

# flag name -> ExperimentConfig field
OVERRIDES = {
    "model": "model",
    "optimizer": "optimizer",
    "lr": "lr",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "lambda_var": "lambda_var",
    "lambda_tc": "lambda_tc",
    "l1": "l1_weight",
    "data_dir": "data_dir",
    "out_dir": "out_dir",
    "seeds": "seeds",
    "limit": "train_limit",
    "k": "K",
    "probe_iters": "probe_iters",
}

DEFAULT_SEEDS = {"train": [0], "ablation": [0, 1, 2], "benchmark": [0, 1, 2, 3, 4], "dynamics": [0, 1, 2]}


def _add_run_flags(p: argparse.ArgumentParser, multi_seed: bool) -> None:
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--data-dir", help="directory with the MNIST IDX files (fallback: $LSEMIX_DATA_DIR)")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--model", choices=["theory", "sae"])
    p.add_argument("--optimizer", choices=["sgd", "adam"])
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lambda-var", type=float)
    p.add_argument("--lambda-tc", type=float)
    p.add_argument("--l1", type=float, help="SAE L1 weight")
    p.add_argument("--k", type=int, help="number of components")
    p.add_argument("--limit", type=int, help="train on the first N training images only")
    p.add_argument("--probe-iters", type=int)
    p.add_argument("--reuse", action="store_true",
                   help="skip runs whose record.json matches the current code and config")
    if multi_seed:
        p.add_argument("--seed", type=int, help="single seed (shorthand for --seeds N)")
        p.add_argument("--seeds", type=int, nargs="+")
    else:
        p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress logging")
    parser = argparse.ArgumentParser(prog="lsemix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    add = lambda name, **kw: sub.add_parser(name, parents=[common], **kw)  # noqa: E731

    p = add("verify-identity", help="check LSE gradient == responsibilities")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--components", type=int, default=128)
    p.add_argument("--out-dir", help="also write verify_identity.json here")

    _add_run_flags(add("train", help="train one model for one seed"), multi_seed=False)
    _add_run_flags(add("ablation", help="the four loss-term configurations"), True)
    _add_run_flags(add("benchmark", help="theory model against the SAE baseline"), True)
    _add_run_flags(add("dynamics", help="SGD vs Adam across learning rates"), True)

    p = add("visualize", help="export encoder weights as a PPM grid")
    p.add_argument("checkpoint", type=Path)
    p.add_argument("-o", "--output", type=Path, help="output .ppm (default: beside the checkpoint)")
    p.add_argument("--tiles-per-row", type=int, default=8)
    p.add_argument("--separator-px", type=int, default=2)
    return parser


def resolve_config(args: argparse.Namespace) -> ex.ExperimentConfig:
    base = json.loads(args.config.read_text()) if args.config else {}
    if not isinstance(base, dict):
        raise ValueError(f"config file {args.config} must hold a JSON object")
    for flag, key in OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is not None:
            base[key] = val
    if getattr(args, "seed", None) is not None:
        base["seeds"] = [args.seed]
    base.setdefault("seeds", DEFAULT_SEEDS[args.command])
    return ex.ExperimentConfig.from_dict(base)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=1))


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)

    if args.command == "verify-identity":
        report = ex.cmd_verify_identity(args.seed, args.batch, args.components)
        if args.out_dir:
            ex._write_json(report, Path(args.out_dir) / "verify_identity.json")
        _emit(report)
        return 0 if report["passed"] else 1

    if args.command == "visualize":
        out = args.output or args.checkpoint.with_suffix(".ppm")
        path = ex.cmd_visualize(args.checkpoint, out, args.tiles_per_row, args.separator_px)
        _emit({"output": str(path)})
        return 0

    cfg = resolve_config(args)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    (Path(cfg.out_dir) / f"{args.command}_config.json").write_text(
        json.dumps(cfg.to_dict(), sort_keys=True, indent=1) + "\n"
    )
    if args.command == "train":
        rec = ex.cmd_train(cfg, reuse=args.reuse)
        _emit({k: v for k, v in rec.to_dict().items() if k != "epochs"} | {"final_loss": rec.final_loss})
    elif args.command == "ablation":
        _emit(_strip_runs(ex.cmd_ablation(cfg, reuse=args.reuse)))
    elif args.command == "benchmark":
        _emit(_strip_runs(ex.cmd_benchmark(cfg, reuse=args.reuse)))
    elif args.command == "dynamics":
        table = ex.cmd_dynamics(cfg, reuse=args.reuse)
        _emit([{k: v for k, v in r.items() if k != "trajectories"} for r in table["rows"]])
    return 0


def _strip_runs(table: dict) -> dict:
    """Summary view for stdout; full per-run detail stays in the JSON file."""
    key = "configs" if "configs" in table else "models"
    return {name: {k: v for k, v in entry.items() if k != "runs"} for name, entry in table[key].items()}


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit:
        raise
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # noqa: BLE001 - top-level reporter
        err = {"error": type(e).__name__, "message": str(e)}
        for attr in ("path", "field", "epoch", "term", "expected", "actual"):
            if hasattr(e, attr):
                err[attr] = str(getattr(e, attr))
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
