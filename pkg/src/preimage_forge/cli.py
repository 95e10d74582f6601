"""Command line entry points.

Exit codes: 0 success, 2 usage or configuration problems, 3 numerical
failure (a run diverged). argparse's own usage errors already exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .cnn import save_model
from .config import (
    BUILTIN_ARCHS,
    assemble_run,
    canonical_json,
    load_config,
    load_model,
    resolve_config,
)
from .data import synth_dataset
from .demons import run, write_metrics_csv
from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    FitError,
    FormatError,
    NumericalError,
    ParameterError,
)
from .evaluate import DEFAULT_STEPS, PRESET_NAMES, evaluate_models
from .grid import Image, encode_ppm
from .kernels import dirac, fit_kernel_parameter, gaussian_kernel, sobolev_kernel, write_kernel_csv
from .training import DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE, train

DEFAULT_TRAIN_N = 600

_USAGE_ERRORS = (
    ConfigError,
    ParameterError,
    DimensionError,
    DataError,
    FormatError,
    FitError,
    FileNotFoundError,
)


def _writable(path_str: str, flag: str) -> Path:
    path = Path(path_str)
    if not path.parent.exists():
        raise ConfigError(f"{flag}: directory does not exist: {path.parent}")
    return path


def cmd_kernel(args) -> int:
    given = {k: getattr(args, k) for k in ("sigma", "gamma", "threshold") if getattr(args, k) is not None}
    if args.kind == "dirac":
        if given:
            raise ConfigError(f"dirac takes no parameter, got {sorted(given)}")
        kernel = dirac(args.side)
    else:
        param_key = "sigma" if args.kind == "gaussian" else "gamma"
        if set(given) == {param_key}:
            value = given[param_key]
        elif set(given) == {"threshold"}:
            value = fit_kernel_parameter(args.kind, args.side, args.threshold)
            print(f"fitted {param_key} = {value:.17g}")
        else:
            raise ConfigError(f"{args.kind} needs exactly one of --{param_key} or --threshold")
        build = gaussian_kernel if args.kind == "gaussian" else sobolev_kernel
        kernel = build(args.side, value)

    out = _writable(args.out, "--out")
    csv_path = Path(str(out) + ".csv")
    pgm_path = Path(str(out) + ".pgm")
    write_kernel_csv(kernel, csv_path)
    w = kernel.weights
    span = w.max() - w.min()
    vis = (w - w.min()) / span if span > 0 else np.zeros_like(w)
    pgm_path.write_bytes(encode_ppm(Image(vis)))
    print(f"wrote {csv_path} and {pgm_path}")
    return 0


def cmd_train(args) -> int:
    if args.arch not in BUILTIN_ARCHS:
        raise ConfigError(f"unknown arch {args.arch!r}, expected one of {sorted(BUILTIN_ARCHS)}")
    out = _writable(args.out, "--out")
    lr = DEFAULT_LEARNING_RATE[args.arch] if args.learning_rate is None else args.learning_rate
    net = BUILTIN_ARCHS[args.arch](seed=args.seed)
    data = synth_dataset(args.seed, args.n)
    result = train(net, data, args.epochs, lr, args.batch_size, args.seed)
    save_model(result.network, out)
    report = {
        "arch": args.arch,
        "seed": args.seed,
        "n": args.n,
        "epochs": args.epochs,
        "learning_rate": lr,
        "batch_size": args.batch_size,
        "train_accuracy": list(result.train_accuracy),
        "val_accuracy": list(result.val_accuracy),
        "mean_loss": list(result.losses),
    }
    report_path = _writable(args.report or str(out) + ".report.json", "--report")
    report_path.write_text(canonical_json(report) + "\n", encoding="utf-8")
    final_val = result.val_accuracy[-1]
    val_text = "n/a" if final_val is None else f"{final_val:.4f}"
    print(f"wrote {out} and {report_path}  train_acc={result.train_accuracy[-1]:.4f}  val_acc={val_text}")
    return 0


def _run_from_config(args, expected_kind: str) -> int:
    path = Path(args.config)
    raw = load_config(path)
    resolved, net = resolve_config(raw, path.parent)
    if resolved["objective"]["kind"] != expected_kind:
        raise ConfigError(
            f"this subcommand runs {expected_kind!r} objectives, config says "
            f"{resolved['objective']['kind']!r}"
        )
    if args.dry_run:
        print(canonical_json(resolved))
        return 0
    plan = assemble_run(resolved, net)
    result = run(
        plan.net,
        plan.objective,
        plan.config,
        plan.schedule,
        init_shape=plan.init_shape,
    )
    Path(plan.output_image).write_bytes(encode_ppm(result.final))
    write_metrics_csv(result.metrics, plan.output_metrics)
    last = result.metrics[-1]
    print(
        f"wrote {plan.output_image} and {plan.output_metrics}  "
        f"steps={len(result.metrics)}  final_total={last.total:.6g}  "
        f"wall_time={result.wall_time:.2f}s"
    )
    return 0


def cmd_maximize(args) -> int:
    return _run_from_config(args, "activation_max")


def cmd_invert(args) -> int:
    return _run_from_config(args, "inversion")


def _load_model_arg(value: str, flag: str):
    if value in BUILTIN_ARCHS:
        return BUILTIN_ARCHS[value](seed=0)
    path = Path(value)
    if not path.is_file():
        raise ConfigError(f"{flag}: not a builtin arch or a model file: {value}")
    return load_model(path)


def cmd_evaluate(args) -> int:
    net_a = _load_model_arg(args.model_a, "--model-a")
    net_b = _load_model_arg(args.model_b, "--model-b")
    out = _writable(args.out, "--out")
    report = evaluate_models(
        net_a,
        net_b,
        n_images=args.n_images,
        seed=args.seed,
        presets=tuple(args.presets),
        steps=args.steps,
    )
    out.write_text(canonical_json(report) + "\n", encoding="utf-8")
    for direction in ("a_to_b", "b_to_a"):
        for preset, acc in report["accuracy"][direction].items():
            print(f"{direction} {preset}: {acc:.4f}")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="preimage-forge",
        description="Feature pre-image search for small convolutional networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="build a smoothing kernel, write CSV and PGM")
    k.add_argument("--kind", required=True, choices=("dirac", "gaussian", "sobolev"))
    k.add_argument("--side", required=True, type=int)
    k.add_argument("--sigma", type=float)
    k.add_argument("--gamma", type=float)
    k.add_argument("--threshold", type=float)
    k.add_argument("--out", required=True, help="output basename; .csv and .pgm are added")
    k.set_defaults(func=cmd_kernel)

    t = sub.add_parser("train", help="train a classifier on the synthetic shapes")
    t.add_argument("--arch", required=True, choices=sorted(BUILTIN_ARCHS))
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--n", type=int, default=DEFAULT_TRAIN_N)
    t.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    t.add_argument("--learning-rate", type=float, default=None, help="default depends on --arch")
    t.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    t.add_argument("--out", required=True, help="model container path")
    t.add_argument("--report", help="JSON report path (default: <out>.report.json)")
    t.set_defaults(func=cmd_train)

    for name, help_text in (
        ("maximize", "maximize one unit of a feature layer"),
        ("invert", "match the feature code of a target image"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
        p.set_defaults(func=cmd_maximize if name == "maximize" else cmd_invert)

    e = sub.add_parser("evaluate", help="cross-model reconstruction transfer report")
    e.add_argument("--model-a", required=True, help="model file or builtin arch name")
    e.add_argument("--model-b", required=True, help="model file or builtin arch name")
    e.add_argument("--n-images", type=int, default=30)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    e.add_argument("--presets", nargs="+", default=list(PRESET_NAMES))
    e.add_argument("--out", required=True, help="report JSON path")
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.last_metrics is not None:
            m = exc.last_metrics
            print(
                f"last finite step {m.step}: total={m.total:.6g} "
                f"grad_maxnorm={m.grad_maxnorm:.6g}",
                file=sys.stderr,
            )
        return 3
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
