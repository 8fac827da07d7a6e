"""Command line front end: train, abstract, verify, lift, bench.

Every command prints a single JSON report to stdout, except ``verify`` which
prints one JSON line per query. Logs go to stderr; the level is set by the
ABSTRACTNET_LOG environment variable (error|warn|info|debug, default warn).
Exit codes: 0 success, 2 validation or input-format error, 3 internal error.
Identical invocations produce identical reports except for the timing fields
("time" and everything under "timings").
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .abstraction import AbstractionRecord, abstract, identify_clusters, reduction_rate
from .data import LabeledDataset, accuracy, load_csv, load_idx, split_dataset
from .errors import AbstractnetError, FormatError, TrainingError, ValidationError
from .lifting import EPSILON_SCOPE_NOTE, lift_proof
from .network import Network, RobustnessQuery
from .synthetic import make_synthetic_digits
from .trainer import TrainConfig, train
from .verifier import Verdict, check_robust, falsify, ibp_bounds

log = logging.getLogger("abstractnet.cli")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    name = os.environ.get("ABSTRACTNET_LOG", "warn").strip().lower()
    root = logging.getLogger("abstractnet")
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)
    root.setLevel(_LOG_LEVELS.get(name, logging.WARNING))
    if name not in _LOG_LEVELS:
        root.warning("unknown ABSTRACTNET_LOG value %r, using warn", name)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _emit(report: dict) -> None:
    json.dump(report, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _emit_line(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, separators=(",", ":"), default=_json_default))
    sys.stdout.write("\n")


def _parse_arch(text: str) -> tuple[int, ...]:
    """Hidden widths from '3x100' (3 layers of 100) or '100,50'."""
    s = text.strip().lower()
    try:
        if "x" in s:
            depth_s, width_s = s.split("x", 1)
            sizes = [int(width_s)] * int(depth_s)
        else:
            sizes = [int(tok) for tok in s.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse architecture {text!r}") from None
    if not sizes or any(w < 1 for w in sizes):
        raise ValidationError(f"architecture must list positive widths, got {text!r}")
    return tuple(sizes)


def _parse_kl(text: str) -> dict[int, int]:
    """Cluster counts from 'layer:k' pairs, e.g. '2:80,3:77'."""
    out: dict[int, int] = {}
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            layer_s, k_s = part.split(":")
            layer, k = int(layer_s), int(k_s)
        except ValueError:
            raise ValidationError(f"cannot parse --kl entry {part!r}; expected layer:k") from None
        if layer in out:
            raise ValidationError(f"duplicate layer {layer} in --kl")
        out[layer] = k
    if not out:
        raise ValidationError("--kl is empty")
    return out


def _parse_vector_file(path: str) -> np.ndarray:
    text = Path(path).read_text().strip()
    try:
        if text.startswith("["):
            values = json.loads(text)
        else:
            values = [float(tok) for tok in text.replace(",", " ").split()]
    except (json.JSONDecodeError, ValueError) as exc:
        raise FormatError(f"cannot parse vector file {path}: {exc}") from None
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise FormatError(f"vector file {path} must hold one flat list of finite numbers")
    return arr


def _parse_delta(text: str, n_features: int):
    """A scalar radius, or a path to a per-feature vector (JSON or plain text)."""
    try:
        value = float(text)
    except ValueError:
        arr = _parse_vector_file(text)
        if arr.shape[0] != n_features:
            raise ValidationError(
                f"delta vector has {arr.shape[0]} entries, input has {n_features}"
            )
        if np.any(arr < 0):
            raise ValidationError("delta entries must be >= 0")
        return arr
    if value < 0:
        raise ValidationError(f"delta must be >= 0, got {value}")
    return value


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="dataset path (.gz accepted); images file for idx")
    p.add_argument("--labels", help="labels path, required with --format idx")
    p.add_argument(
        "--format",
        choices=("csv", "idx", "synthetic"),
        default="csv",
        help="csv: label,v1..vn per row; idx: MNIST binary pair; synthetic: bundled 8x8 digits",
    )
    p.add_argument("--synthetic-count", type=int, default=2000, help="synthetic sample count")
    p.add_argument("--noise", type=float, default=0.15, help="synthetic pixel noise level")
    p.add_argument("--data-seed", type=int, default=0, help="synthetic generator seed")


def _load_dataset(args) -> LabeledDataset:
    if args.format == "synthetic":
        return make_synthetic_digits(args.synthetic_count, seed=args.data_seed, noise=args.noise)
    if not args.data:
        raise ValidationError(f"--data is required with --format {args.format}")
    if args.format == "idx":
        if not args.labels:
            raise ValidationError("--format idx needs --labels")
        return load_idx(args.data, args.labels)
    return load_csv(args.data)


def _run_indexed(fn, items, jobs: int):
    """Apply fn to each item, preserving order; jobs > 1 fans out across threads."""
    if jobs < 1:
        raise ValidationError(f"--jobs must be >= 1, got {jobs}")
    if jobs == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _clamped_count(requested: int, available: int, what: str) -> int:
    if requested < 1:
        raise ValidationError(f"--count must be >= 1, got {requested}")
    if requested > available:
        log.warning("only %d %s available, requested %d", available, what, requested)
        return available
    return requested


def _removed_neurons(record: AbstractionRecord) -> int:
    orig = sum(record.original_net.layer_sizes[1:-1])
    kept = sum(record.abstract_net.layer_sizes[1:-1])
    return orig - kept


def _epsilon_maxima(record: AbstractionRecord) -> list[float]:
    return [float(e.max()) if e.size else 0.0 for e in record.layer_epsilons()]


def cmd_train(args) -> int:
    ds = _load_dataset(args)
    hidden = _parse_arch(args.arch)
    cfg = TrainConfig(
        hidden=hidden,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        optimizer=args.optimizer,
        patience=args.patience,
        val_fraction=args.val_fraction,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    net = train(ds, cfg)
    train_s = time.perf_counter() - t0
    acc = accuracy(net, ds)
    if args.out:
        net.save(args.out)
        log.info("saved network to %s", args.out)
    _emit(
        {
            "schema": 1,
            "command": "train",
            "layer_sizes": list(net.layer_sizes),
            "optimizer": cfg.optimizer,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
            "dataset_size": len(ds),
            "accuracy": acc,
            "out": args.out,
            "timings": {"train_s": train_s},
        }
    )
    return 0


def cmd_abstract(args) -> int:
    if (args.alpha is None) == (args.kl is None):
        raise ValidationError("exactly one of --alpha or --kl is required")
    net = Network.load(args.net)
    ds = _load_dataset(args)

    t0 = time.perf_counter()
    if args.kl is not None:
        k_l = _parse_kl(args.kl)
        X = ds.inputs
    else:
        if args.holdout:
            train_part, val_part = split_dataset(ds, args.val_fraction, args.seed)
        else:
            train_part, val_part = ds, ds
        X = {"train": train_part.inputs, "val": val_part.inputs, "all": ds.inputs}[args.x_source]
        k_l = identify_clusters(
            net,
            train_part,
            args.alpha,
            seed=args.seed,
            epsilon_norm=args.epsilon_norm,
            val=val_part,
            X=X,
        )
    record = abstract(net, X, k_l, seed=args.seed, epsilon_norm=args.epsilon_norm)
    abstract_s = time.perf_counter() - t0

    acc_orig = accuracy(net, ds)
    acc_abs = accuracy(record.abstract_net, ds)
    if args.out:
        record.save(args.out)
        log.info("saved abstraction record to %s", args.out)
    _emit(
        {
            "schema": 1,
            "command": "abstract",
            "k_l": {str(layer): k for layer, k in sorted(k_l.items())},
            "reduction_rate": reduction_rate(record),
            "removed_neurons": _removed_neurons(record),
            "accuracy_original": acc_orig,
            "accuracy_abstract": acc_abs,
            "accuracy_drop": acc_orig - acc_abs,
            "epsilon_max_per_layer": _epsilon_maxima(record),
            "epsilon_norm": args.epsilon_norm,
            "alpha": args.alpha,
            "seed": args.seed,
            "x_source": args.x_source if args.alpha is not None else "all",
            "out": args.out,
            "notes": {"epsilon_scope": EPSILON_SCOPE_NOTE},
            "timings": {"abstract_s": abstract_s},
        }
    )
    return 0


def cmd_verify(args) -> int:
    if args.record:
        net = AbstractionRecord.load(args.record).abstract_net
    else:
        net = Network.load(args.net)
    width = net.layer_sizes[0]
    delta = _parse_delta(args.delta, width)

    queries: list[tuple[int | None, np.ndarray]] = []
    if args.input is not None:
        try:
            index = int(args.input)
        except ValueError:
            x = _parse_vector_file(args.input)
            if x.shape[0] != width:
                raise ValidationError(f"input has {x.shape[0]} features, network expects {width}")
            queries.append((None, x))
        else:
            ds = _load_dataset(args)
            if not 0 <= index < len(ds):
                raise ValidationError(f"--input index {index} out of range for {len(ds)} rows")
            queries.append((index, ds.inputs[index]))
    else:
        ds = _load_dataset(args)
        n = _clamped_count(10 if args.count is None else args.count, len(ds), "inputs")
        queries = [(i, ds.inputs[i]) for i in range(n)]

    def run_one(item):
        qid, x = item
        target = int(net.classify(x))
        bounds = ibp_bounds(net, x, delta)
        verdict = check_robust(bounds, target)
        line = {
            "schema": 1,
            "query": qid,
            "target": target,
            "verdict": verdict.value,
            "output_lower": bounds.output_lower,
            "output_upper": bounds.output_upper,
        }
        if args.falsify and verdict is not Verdict.ROBUST:
            witness = falsify(
                net,
                RobustnessQuery(x, delta),
                samples=args.samples,
                seed=args.seed + (qid or 0),
            )
            if witness is None:
                line["witness"] = None
            else:
                line["witness"] = witness
                line["witness_label"] = int(net.classify(witness))
                line["verdict"] = Verdict.NOT_ROBUST.value
        return line

    for line in _run_indexed(run_one, queries, args.jobs):
        _emit_line(line)
    return 0


def cmd_lift(args) -> int:
    record = AbstractionRecord.load(args.record)
    ds = _load_dataset(args)
    delta = _parse_delta(args.delta, record.original_net.layer_sizes[0])
    n = _clamped_count(args.count, len(ds), "inputs")
    abs_net = record.abstract_net

    results = []
    n_abstract = 0
    n_lifted = 0
    verify_s = 0.0
    lift_s = 0.0
    for i in range(n):
        x = ds.inputs[i]
        query = RobustnessQuery(x, delta)
        t0 = time.perf_counter()
        target = int(abs_net.classify(x))
        abstract_verdict = check_robust(ibp_bounds(abs_net, x, delta), target)
        t1 = time.perf_counter()
        if abstract_verdict is Verdict.ROBUST:
            lifted_verdict = lift_proof(record, query)
        else:
            lifted_verdict = Verdict.UNKNOWN
        t2 = time.perf_counter()
        verify_s += t1 - t0
        lift_s += t2 - t1
        n_abstract += abstract_verdict is Verdict.ROBUST
        n_lifted += lifted_verdict is Verdict.ROBUST
        results.append(
            {
                "query": i,
                "target": target,
                "abstract": abstract_verdict.value,
                "lifted": lifted_verdict.value,
            }
        )
    _emit(
        {
            "schema": 1,
            "command": "lift",
            "record": args.record,
            "delta": delta,
            "queries": n,
            "abstract_robust": n_abstract,
            "lifted_robust": n_lifted,
            "reduction_rate": reduction_rate(record),
            "removed_neurons": _removed_neurons(record),
            "epsilon_max_per_layer": _epsilon_maxima(record),
            "results": results,
            "notes": {"epsilon_scope": EPSILON_SCOPE_NOTE},
            "timings": {"verify_s": verify_s, "lift_s": lift_s},
        }
    )
    return 0


def cmd_bench(args) -> int:
    net = Network.load(args.net)
    ds = _load_dataset(args)
    delta = _parse_delta(args.delta, net.layer_sizes[0])
    n = _clamped_count(args.count, len(ds), "inputs")

    t_start = time.perf_counter()
    train_part, val_part = split_dataset(ds, args.val_fraction, args.seed)
    X = train_part.inputs
    k_l = identify_clusters(
        net, train_part, args.alpha, seed=args.seed, epsilon_norm=args.epsilon_norm,
        val=val_part, X=X,
    )
    record = abstract(net, X, k_l, seed=args.seed, epsilon_norm=args.epsilon_norm)
    abstract_s = time.perf_counter() - t_start
    abs_net = record.abstract_net
    if args.record_out:
        record.save(args.record_out)

    timers = {"original_verify_s": 0.0, "abstract_verify_s": 0.0, "lift_s": 0.0}

    def run_query(i: int) -> dict:
        x = ds.inputs[i]
        t0 = time.perf_counter()
        original = check_robust(ibp_bounds(net, x, delta), int(net.classify(x)))
        t1 = time.perf_counter()
        abstract_v = check_robust(ibp_bounds(abs_net, x, delta), int(abs_net.classify(x)))
        t2 = time.perf_counter()
        if abstract_v is Verdict.ROBUST:
            lifted = lift_proof(record, RobustnessQuery(x, delta))
        else:
            lifted = Verdict.UNKNOWN
        t3 = time.perf_counter()
        timers["original_verify_s"] += t1 - t0
        timers["abstract_verify_s"] += t2 - t1
        timers["lift_s"] += t3 - t2
        return {
            "query": i,
            "original": original.value,
            "abstract": abstract_v.value,
            "lifted": lifted.value,
        }

    deadline = t_start + args.timeout_s if args.timeout_s is not None else None
    results: list[dict] = []
    timed_out = False
    pos = 0
    chunk = max(1, args.jobs)
    while pos < n:
        if deadline is not None and time.perf_counter() > deadline:
            timed_out = True
            log.warning("timeout after %d of %d queries", pos, n)
            break
        batch = list(range(pos, min(pos + chunk, n)))
        results.extend(_run_indexed(run_query, batch, args.jobs))
        pos += len(batch)

    total_s = time.perf_counter() - t_start
    _emit(
        {
            "schema": 1,
            "command": "bench",
            "removed_neurons": _removed_neurons(record),
            "reduction_rate": reduction_rate(record),
            "images_verified": sum(r["lifted"] == "robust" for r in results),
            "time": total_s,
            "queries_run": len(results),
            "count": n,
            "timed_out": timed_out,
            "original_robust": sum(r["original"] == "robust" for r in results),
            "abstract_robust": sum(r["abstract"] == "robust" for r in results),
            "lifted_robust": sum(r["lifted"] == "robust" for r in results),
            "k_l": {str(layer): k for layer, k in sorted(k_l.items())},
            "alpha": args.alpha,
            "delta": delta,
            "seed": args.seed,
            "accuracy": {
                "original": accuracy(net, val_part),
                "abstract": accuracy(abs_net, val_part),
            },
            "results": results,
            "notes": {"epsilon_scope": EPSILON_SCOPE_NOTE},
            "timings": {"abstract_s": abstract_s, **timers},
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abstractnet",
        description="Cluster-based neural network abstraction with interval robustness verification",
    )
    parser.add_argument("--version", action="version", version=f"abstractnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a ReLU classifier and save it as JSON")
    _add_data_flags(p)
    p.add_argument("--arch", required=True, help="hidden layers, e.g. 3x100 or 100,50")
    p.add_argument("--out", help="where to write the network JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("abstract", help="merge similar neurons and save the abstraction record")
    p.add_argument("--net", required=True, help="network JSON to abstract")
    _add_data_flags(p)
    p.add_argument("--alpha", type=float, help="accuracy floor; searches cluster counts per layer")
    p.add_argument("--kl", help="explicit cluster counts per hidden layer, e.g. 2:80,3:77")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon-norm", choices=("l2", "linf"), default="l2")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument(
        "--x-source",
        choices=("train", "val", "all"),
        default="train",
        help="which split provides the activation-collection inputs (with --alpha)",
    )
    p.add_argument(
        "--holdout",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="evaluate the accuracy floor on a held-out split (--no-holdout reuses all data)",
    )
    p.add_argument("--out", help="where to write the abstraction record JSON")
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("verify", help="interval-verify robustness queries, one JSON line each")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--net", help="network JSON to verify")
    group.add_argument("--record", help="abstraction record; verifies its abstract network")
    _add_data_flags(p)
    sel = p.add_mutually_exclusive_group()
    sel.add_argument("--input", help="dataset row index, or a vector file (JSON or plain text)")
    sel.add_argument("--count", type=int, default=None, help="verify the first N inputs")
    p.add_argument("--delta", required=True, help="box radius: scalar or vector file")
    p.add_argument("--falsify", action="store_true", help="sample the box for counterexamples")
    p.add_argument("--samples", type=int, default=1000, help="falsifier sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="threads across queries")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lift", help="verify on the abstraction and lift proofs to the original")
    p.add_argument("--record", required=True, help="abstraction record JSON")
    _add_data_flags(p)
    p.add_argument("--delta", required=True, help="box radius: scalar or vector file")
    p.add_argument("--count", type=int, default=10, help="lift the first N inputs")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("bench", help="abstract, verify original vs abstract, lift; one report")
    p.add_argument("--net", required=True, help="network JSON to benchmark")
    _add_data_flags(p)
    p.add_argument("--alpha", type=float, required=True, help="accuracy floor for the search")
    p.add_argument("--delta", default="0.02", help="box radius: scalar or vector file")
    p.add_argument("--count", type=int, default=100, help="number of query images")
    p.add_argument("--timeout-s", type=float, default=None, help="stop issuing queries after this")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon-norm", choices=("l2", "linf"), default="l2")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--jobs", type=int, default=1, help="threads across queries")
    p.add_argument("--record-out", help="also save the abstraction record here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FormatError) as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2
    except TrainingError as exc:
        log.error("training failed: %s", exc)
        return 3
    except AbstractnetError as exc:
        log.error("%s", exc)
        return 3
    except Exception:
        log.exception("internal error")
        return 3


if __name__ == "__main__":
    sys.exit(main())
