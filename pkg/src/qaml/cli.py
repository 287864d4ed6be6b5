"""Command-line entry point: ``qaml {pca,train,eval,attack,embed}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 divergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .adversarial import AttackConfig
from .data import load_iris_csv, load_mnist_idx, load_processed, prepare_split, save_processed
from .errors import DataError, DivergenceError, PreconditionError, QamlError
from .model import embed, load_model, save_model
from .training import TrainConfig, evaluate, robust_accuracy, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    parser = _Parser(prog="qaml", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"qaml {__version__} ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    overrides = _Parser(add_help=False)
    overrides.add_argument("--config", type=Path, help="TrainConfig JSON; flags override it")
    overrides.add_argument("--seed", type=int)
    overrides.add_argument("--epochs", type=int)
    overrides.add_argument("--margin", type=float)
    overrides.add_argument("--lambda", dest="lam", type=float)
    overrides.add_argument("--shots", type=int)
    overrides.add_argument("--adversarial", action="store_true", default=None)
    overrides.add_argument("--out", type=Path, help="write results JSON here")

    p = sub.add_parser("pca", help="fit PCA + angle scaling and cache train/test splits")
    p.add_argument("--dataset", choices=("iris", "mnist"), required=True)
    p.add_argument("--input", type=Path, help="iris.data CSV")
    p.add_argument("--images", type=Path, help="MNIST IDX images")
    p.add_argument("--labels", type=Path, help="MNIST IDX labels")
    p.add_argument("--classes", type=_ints, help="keep only these labels (default 0,1 / 3,6)")
    p.add_argument("--k", type=int, help="PCA dimension (default 4 / 8)")
    p.add_argument("--identity", action="store_true",
                   help="skip the PCA rotation (default for iris)")
    p.add_argument("--fit-pca", action="store_true", help="force a fitted PCA for iris")
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--split-seed", type=int, default=7)
    p.add_argument("--out", type=Path, required=True, help="processed training split")
    p.add_argument("--test-out", type=Path, required=True, help="processed test split")

    p = sub.add_parser("train", parents=[overrides], help="train a metric model")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--val", type=Path)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--model-out", type=Path)

    p = sub.add_parser("eval", parents=[overrides], help="distance metrics on seeded triplets")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("attack", parents=[overrides], help="robust accuracy over an epsilon sweep")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--epsilon", type=_floats, action="extend",
                   help="budget(s); comma-separated and/or repeated")

    p = sub.add_parser("embed", help="dump embedded statevectors as CSV")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--rows", type=_ints, help="row indices (default: all)")
    p.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    return parser


# --- config handling -------------------------------------------------------

def resolve_config(args):
    cfg = TrainConfig.load(args.config) if args.config else TrainConfig()
    updates = {}
    for key in ("seed", "epochs", "margin", "shots", "adversarial"):
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    attack = {}
    if getattr(args, "lam", None) is not None:
        attack["lam"] = args.lam
    eps = getattr(args, "epsilon", None)
    if isinstance(eps, float):
        attack["epsilon"] = eps
    if attack:
        updates["attack"] = replace(cfg.attack, **attack)
    doc = {**cfg.__dict__, **updates}
    return TrainConfig(**doc)


# --- commands --------------------------------------------------------------

def cmd_pca(args):
    if args.dataset == "iris":
        if args.input is None:
            raise UsageError("pca --dataset iris needs --input")
        ds = load_iris_csv(args.input)
        classes, k, n_train, n_test = args.classes or [0, 1], args.k or 4, 70, 30
        identity = not args.fit_pca
    else:
        if args.images is None or args.labels is None:
            raise UsageError("pca --dataset mnist needs --images and --labels")
        ds = load_mnist_idx(args.images, args.labels)
        classes, k, n_train, n_test = args.classes or [3, 6], args.k or 8, 500, 200
        identity = args.identity
    tr, te, prep = prepare_split(ds, classes, args.n_train or n_train, args.n_test or n_test,
                                 k, args.split_seed, identity)
    save_processed(args.out, tr, prep)
    save_processed(args.test_out, te, prep)
    print(f"{ds.name}: classes {list(classes)}, {len(tr)} train / {len(te)} test rows, "
          f"{tr.dim} features ({'identity' if identity else 'pca'})")
    return EXIT_OK


def cmd_train(args):
    cfg = resolve_config(args)
    train_ds, prep = load_processed(args.data)
    val_ds = load_processed(args.val)[0] if args.val else None
    model, mlog = train(cfg, train_ds, val_ds)
    model.scaling = prep.scaling
    if args.out:
        mlog.save(args.out)
    if args.model_out:
        save_model(model, args.model_out)
    first, last = mlog.records[0], mlog.records[-1]
    print(f"trained {cfg.epochs} epochs ({sum(r['kind'] == 'adversarial' for r in mlog.records)}"
          f" adversarial): loss {first['loss_natural']:.4f} -> {last['loss_natural']:.4f}, "
          f"ordering accuracy {last['ordering_accuracy']:.3f}")
    return EXIT_OK


def _eval_seed(args, cfg):
    return args.seed if args.seed is not None else cfg.eval_seed


def cmd_eval(args):
    cfg = resolve_config(args)
    model = load_model(args.model)
    ds, _ = load_processed(args.data)
    count = args.count or cfg.eval_triplets
    record = evaluate(model, ds, count, _eval_seed(args, cfg), cfg.shots)
    if args.out:
        args.out.write_text(json.dumps(record, indent=2))
    print(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                   for k, v in record.items()))
    return EXIT_OK


def cmd_attack(args):
    cfg = resolve_config(args)
    model = load_model(args.model)
    ds, _ = load_processed(args.data)
    count = args.count or cfg.eval_triplets
    seed = _eval_seed(args, cfg)
    epsilons = args.epsilon if args.epsilon else [cfg.attack.epsilon]
    base = evaluate(model, ds, count, seed)
    sweep = []
    for eps in epsilons:
        atk = AttackConfig(cfg.attack.lam, eps, args.steps, "pgd")
        acc = robust_accuracy(model, ds, atk, count, seed)
        sweep.append({"epsilon": eps, "lambda": atk.lam, "steps": atk.steps,
                      "robust_accuracy": acc,
                      "ordering_accuracy": base["ordering_accuracy"]})
        print(f"epsilon={eps:g} robust_accuracy={acc:.4f} "
              f"(ordering_accuracy={base['ordering_accuracy']:.4f})")
    if args.out:
        args.out.write_text(json.dumps(sweep, indent=2))
    return EXIT_OK


def cmd_embed(args):
    model = load_model(args.model)
    ds, _ = load_processed(args.data)
    rows = args.rows if args.rows is not None else range(len(ds))
    dim = 1 << model.ansatz.num_data_qubits
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(["row", "label"] + [f"amp_{j}" for j in range(dim)])
        for i in rows:
            if not 0 <= i < len(ds):
                raise UsageError(f"row {i} out of range for {len(ds)} rows")
            state = embed(ds.features[i], model)
            if np.abs(state.amps.imag).max() > 1e-12:
                raise QamlError(f"row {i}: embedding has non-real amplitudes")
            writer.writerow([i, int(ds.labels[i])] + [repr(float(v)) for v in state.amps.real])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {"pca": cmd_pca, "train": cmd_train, "eval": cmd_eval,
            "attack": cmd_attack, "embed": cmd_embed}


def cli_main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except (DataError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (UsageError, PreconditionError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(cli_main())
