"""Command-line surface: `seot synth|run|run2|spectrum|baseline`.

Datasets are delimited text with a header line and one `label,f1,...,fd`
sample per line, where label is an integer or `?` for unlabeled. Floats are
written with 17 significant digits so files round-trip exactly. Runs write a
JSON report (validating against report.schema.json) plus a sidecar
`<out>.timings.json`; wall-clock timings live in the sidecar so the report
itself is byte-identical across runs with the same seed and config.

Exit codes: 0 success, 2 input/config errors, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import classify, graph, pipeline, synth
from .barycenter import BarycenterConfig
from .errors import InvalidInput, NumericalError, SeotError, StageError
from .measures import LabeledDomain, uniform_measure
from .ot import SinkhornConfig

SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"


# ---------------------------------------------------------------------------
# dataset files


def read_dataset(path) -> LabeledDomain:
    """Parse a CSV dataset; labels must be all integers or all `?`."""
    path = Path(path)
    rows: list[list[float]] = []
    labels: list[int] = []
    n_unlabeled = 0
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if lineno == 1 or not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise InvalidInput(
                    f"{path}:{lineno}: expected {width} fields, got {len(parts)}"
                )
            raw_label, *feats = parts
            try:
                if raw_label.strip() == "?":
                    n_unlabeled += 1
                else:
                    labels.append(int(raw_label))
                rows.append([float(f) for f in feats])
            except ValueError as exc:
                raise InvalidInput(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InvalidInput(f"{path}: no samples")
    if n_unlabeled and labels:
        raise InvalidInput(f"{path}: mixes labeled and unlabeled samples")
    x = np.asarray(rows)
    y = None if n_unlabeled else np.asarray(labels, dtype=np.int64)
    return LabeledDomain(uniform_measure(x), y)


def write_dataset(path, domain: LabeledDomain) -> None:
    path = Path(path)
    d = domain.dim
    with open(path, "w") as fh:
        fh.write("label," + ",".join(f"f{i+1}" for i in range(d)) + "\n")
        for i in range(len(domain)):
            label = "?" if domain.labels is None else str(int(domain.labels[i]))
            feats = ",".join(FLOAT_FMT % v for v in domain.points[i])
            fh.write(f"{label},{feats}\n")


# ---------------------------------------------------------------------------
# config files

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(value: str) -> bool:
    try:
        return _BOOL[value.strip().lower()]
    except KeyError:
        raise InvalidInput(f"expected a boolean, got {value!r}") from None


# key -> (target group, parser); documented in the README
CONFIG_KEYS = {
    "seed": int,
    "n_classes": int,
    "epsilon": float,
    "sinkhorn_max_iter": int,
    "sinkhorn_tol": float,
    "log_domain": _parse_bool,
    "n_atoms": lambda v: None if v == "auto" else int(v),
    "source_weights": lambda v: None
    if v == "uniform"
    else tuple(float(x) for x in v.split(":")),
    "bary_max_outer_iter": int,
    "bary_support_tol": float,
    "bary_init": str,
    "prune_threshold": float,
    "k": lambda v: None if v == "auto" else int(v),
    "k_min": int,
    "k_max": int,
    "row_normalize": _parse_bool,
    "classifier": str,
    "knn_k": int,
    "softmax_l2": float,
    "softmax_lr": float,
    "softmax_epochs": int,
    "cost_p": float,
    "standardize": _parse_bool,
    "train_on_sources_too": _parse_bool,
}


def load_config_file(path) -> dict:
    """Flat key=value config; unknown keys are hard errors."""
    values: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise InvalidInput(f"{path}:{lineno}: expected key=value")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise InvalidInput(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = CONFIG_KEYS[key](raw.strip())
            except (ValueError, InvalidInput) as exc:
                raise InvalidInput(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def build_config(values: dict, inferred_classes: int) -> pipeline.SeotConfig:
    v = dict(values)
    n_classes = v.pop("n_classes", inferred_classes)
    ot = SinkhornConfig(
        epsilon=v.pop("epsilon", 1e-2),
        max_iter=v.pop("sinkhorn_max_iter", 10_000),
        tol=v.pop("sinkhorn_tol", 1e-8),
        log_domain=v.pop("log_domain", True),
    )
    sw = v.pop("source_weights", None)
    bary = BarycenterConfig(
        n_atoms=v.pop("n_atoms", None),
        source_weights=np.asarray(sw) if sw is not None else None,
        max_outer_iter=v.pop("bary_max_outer_iter", 100),
        support_tol=v.pop("bary_support_tol", 1e-5),
        init=v.pop("bary_init", "kmeans++"),
    )
    clf = classify.ClassifierConfig(
        kind=v.pop("classifier", "knn"),
        knn_k=v.pop("knn_k", 5),
        l2=v.pop("softmax_l2", 1e-3),
        lr=v.pop("softmax_lr", 0.1),
        epochs=v.pop("softmax_epochs", 300),
    )
    return pipeline.SeotConfig(
        n_classes=n_classes,
        ot=ot,
        bary=bary,
        classifier=clf,
        prune_threshold=v.pop("prune_threshold", graph.DEFAULT_PRUNE),
        k=v.pop("k", None),
        k_min=v.pop("k_min", None),
        k_max=v.pop("k_max", None),
        row_normalize=v.pop("row_normalize", True),
        cost_p=v.pop("cost_p", 2.0),
        standardize=v.pop("standardize", True),
        train_on_sources_too=v.pop("train_on_sources_too", False),
        seed=v.pop("seed", 0),
    )


def config_echo(cfg: pipeline.SeotConfig) -> dict:
    """Flat, JSON-friendly echo of every resolved config value."""
    return {
        "seed": cfg.seed,
        "n_classes": cfg.n_classes,
        "epsilon": cfg.ot.epsilon,
        "sinkhorn_max_iter": cfg.ot.max_iter,
        "sinkhorn_tol": cfg.ot.tol,
        "log_domain": cfg.ot.log_domain,
        "n_atoms": cfg.bary.n_atoms,
        "source_weights": list(cfg.bary.source_weights)
        if cfg.bary.source_weights is not None
        else None,
        "bary_max_outer_iter": cfg.bary.max_outer_iter,
        "bary_support_tol": cfg.bary.support_tol,
        "bary_init": cfg.bary.init,
        "prune_threshold": cfg.prune_threshold,
        "k": cfg.k,
        "k_min": cfg.k_min,
        "k_max": cfg.k_max,
        "row_normalize": cfg.row_normalize,
        "classifier": cfg.classifier.kind,
        "knn_k": cfg.classifier.knn_k,
        "softmax_l2": cfg.classifier.l2,
        "softmax_lr": cfg.classifier.lr,
        "softmax_epochs": cfg.classifier.epochs,
        "cost_p": cfg.cost_p,
        "standardize": cfg.standardize,
        "train_on_sources_too": cfg.train_on_sources_too,
    }


# ---------------------------------------------------------------------------
# reports


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report(out_path, report: dict, timings: dict | None) -> None:
    out_path = Path(out_path)
    with open(out_path, "w") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if timings is not None:
        with open(str(out_path) + ".timings.json", "w") as fh:
            json.dump(_jsonable(timings), fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_predictions(path, predictions) -> None:
    with open(path, "w") as fh:
        fh.write("prediction\n")
        for p in predictions:
            fh.write(f"{int(p)}\n")


def report_schema() -> dict:
    schema_path = Path(__file__).with_name("report.schema.json")
    with open(schema_path) as fh:
        return json.load(fh)


def _base_report(method, cfg, source_paths, target_path):
    return {
        "schema_version": SCHEMA_VERSION,
        "method": method,
        "seed": cfg.seed,
        "n_classes": cfg.n_classes,
        "config": config_echo(cfg),
        "sources": [str(p) for p in source_paths],
        "target": str(target_path),
    }


def _add_eval(report: dict, eval_report) -> None:
    report["accuracy"] = eval_report.accuracy
    report["per_class_accuracy"] = eval_report.per_class_accuracy
    report["confusion"] = eval_report.confusion
    report["n_test"] = eval_report.n_test


# ---------------------------------------------------------------------------
# commands


def _load_inputs(args):
    sources = [read_dataset(p) for p in args.source]
    target = read_dataset(args.target)
    values = load_config_file(args.config) if args.config else {}
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "epsilon", None) is not None:
        values["epsilon"] = args.epsilon
    if getattr(args, "k", None) is not None:
        values["k"] = None if args.k == "auto" else int(args.k)
    labeled = [s.labels for s in sources if s.labels is not None]
    if not labeled:
        raise InvalidInput("source domains must be labeled")
    inferred = int(max(y.max() for y in labeled)) + 1
    cfg = build_config(values, inferred_classes=max(inferred, 2))
    return sources, target, cfg


def cmd_synth(args) -> int:
    kind, param = _parse_shift(args.shift)
    spec = synth.SynthSpec(
        n_classes=args.classes,
        samples_per_class=args.samples_per_class,
        d=args.dim,
        class_separation=args.separation,
        noise_sigma=args.noise_sigma,
        n_sources=args.sources,
        shift_kind=kind,
        shift_param=param,
        seed=args.seed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sources, target = synth.generate(spec)
    files = {}
    for i, src in enumerate(sources):
        name = f"source_{i}.csv"
        write_dataset(out_dir / name, src)
        files[f"source_{i}"] = name
    write_dataset(out_dir / "target.csv", target)
    files["target"] = "target.csv"
    manifest = {
        "spec": dataclasses.asdict(spec),
        "seed": spec.seed,
        "files": files,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _parse_shift(text: str):
    kind, _, raw = text.partition(":")
    kind = kind.strip().lower()
    if kind == synth.TRANSLATE:
        return kind, tuple(float(x) for x in raw.split(",")) if raw else (0.0,)
    if kind in (synth.ROTATE, synth.SCALE, synth.NOISE):
        return kind, float(raw) if raw else 0.0
    raise InvalidInput(f"unknown shift {text!r}; use rotate:DEG, translate:V1,V2,..., "
                       "scale:FACTOR or noise:SIGMA")


def _finish_run(args, run, report):
    report["chosen_k"] = run.chosen_k
    report["eigenvalues"] = run.embedding.eigenvalues
    report["gaps"] = run.gaps
    report["gap_at_class_count"] = run.class_gap
    report["diagnostics"] = run.diagnostics
    pred_path = str(args.out) + ".predictions.csv"
    write_predictions(pred_path, run.predictions)
    report["predictions_file"] = pred_path
    if run.report is not None:
        _add_eval(report, run.report)
    if getattr(args, "dump_graph", None):
        graph.write_edge_list(run.graph, args.dump_graph)
    write_report(args.out, report, run.timings)
    return 0


def cmd_run(args) -> int:
    sources, target, cfg = _load_inputs(args)
    run = pipeline.run_seot(sources, target, cfg)
    report = _base_report("seot", cfg, args.source, args.target)
    return _finish_run(args, run, report)


def cmd_run2(args) -> int:
    sources, target, cfg = _load_inputs(args)
    if len(sources) != 1:
        raise InvalidInput("run2 takes exactly one --source")
    run = pipeline.run_two_domain(
        sources[0], target, cfg, skip_barycenter=not args.via_barycenter
    )
    report = _base_report("seot-bipartite", cfg, args.source, args.target)
    return _finish_run(args, run, report)


def cmd_spectrum(args) -> int:
    sources, target, cfg = _load_inputs(args)
    n_atoms = cfg.bary.n_atoms or min(len(s) for s in sources)
    n_nodes = n_atoms + sum(len(s) for s in sources) + len(target)
    if args.k_max > n_nodes - 2:
        raise InvalidInput(
            f"k_max={args.k_max} too large for a graph on {n_nodes} nodes"
        )
    cfg = dataclasses.replace(cfg, k=None, k_max=args.k_max)
    run = pipeline.run_seot(sources, target, cfg)
    ev = run.embedding.eigenvalues
    k_min = cfg.k_min if cfg.k_min is not None else cfg.n_classes
    with open(args.out, "w") as fh:
        fh.write(
            f"# spectrum K={run.graph.n_nodes} n_classes={cfg.n_classes} "
            f"selected_k={run.chosen_k}\n"
        )
        fh.write("# index\teigenvalue\n")
        for i in range(min(args.k_max + 1, ev.shape[0])):
            fh.write(f"{i + 1}\t{FLOAT_FMT % ev[i]}\n")
        fh.write("# j\tgap\n")
        for offset, g in enumerate(run.gaps):
            fh.write(f"{k_min + offset}\t{FLOAT_FMT % g}\n")
        fh.write(f"# gap_at_class_count\t{FLOAT_FMT % run.class_gap}\n")
    return 0


def cmd_baseline(args) -> int:
    sources, target, cfg = _load_inputs(args)
    if target.labels is None:
        raise InvalidInput("baseline requires a labeled target")
    eval_report = classify.source_only_baseline(
        sources, target, cfg.classifier, seed=cfg.seed
    )
    report = _base_report("source-only", cfg, args.source, args.target)
    report["chosen_k"] = None
    _add_eval(report, eval_report)
    write_report(args.out, report, None)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common_io(sub, multi_source=True):
    sub.add_argument(
        "--source", action="append", required=True, help="source dataset CSV"
        + (" (repeatable)" if multi_source else ""),
    )
    sub.add_argument("--target", required=True, help="target dataset CSV")
    sub.add_argument("--config", default=None, help="key=value config file")
    sub.add_argument("--out", required=True, help="output report path")
    sub.add_argument("--seed", type=int, default=None, help="override config seed")
    sub.add_argument(
        "--epsilon", type=float, default=None, help="override entropic regularization"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seot",
        description="Domain adaptation by spectral embedding of transport plans",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic shift benchmark")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--samples-per-class", type=int, default=100)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--noise-sigma", type=float, default=0.5)
    p.add_argument("--sources", type=int, default=3)
    p.add_argument("--shift", default="rotate:0")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("run", help="multi-source adaptation through the barycenter")
    _add_common_io(p)
    p.add_argument("--k", default=None, help="embedding dimension or 'auto'")
    p.add_argument("--dump-graph", default=None, help="write edge-list debug export")
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("run2", help="two-domain adaptation on the bipartite graph")
    _add_common_io(p, multi_source=False)
    p.add_argument("--k", default=None, help="embedding dimension or 'auto'")
    p.add_argument("--dump-graph", default=None, help="write edge-list debug export")
    p.add_argument(
        "--via-barycenter",
        action="store_true",
        help="route through a degenerate one-source barycenter instead",
    )
    p.set_defaults(func=cmd_run2)

    p = subs.add_parser("spectrum", help="emit eigenvalues and the gap table")
    _add_common_io(p)
    p.add_argument("--k-max", type=int, required=True)
    p.set_defaults(func=cmd_spectrum)

    p = subs.add_parser("baseline", help="source-only baseline, no adaptation")
    _add_common_io(p)
    p.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        cause = exc.__cause__
        code = 3 if isinstance(cause, NumericalError) else 2
        print(f"error: {exc}", file=sys.stderr)
        return code
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InvalidInput, SeotError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
