"""cfx command line: train, generate, benchmark, methods, render.

Exit codes: 0 success (a valid=false counterfactual is still success),
2 usage/config errors, 1 internal errors (uncaught).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .benchmark import BenchmarkConfig, run_benchmark, second_choice_target
from .catalog import CATEGORIES, list_methods
from .config import RunConfig, load_datasets, load_run_config
from .data import Dataset, TimeSeries, parse_ts, parse_ucr_tsv
from .distances import changed_segments
from .errors import CfxError
from .evaluation import evaluate_one, pick_representative
from .generators import CONFIG_TYPES, GENERATOR_IDS, GENERATORS, train_autoencoder
from .models import MLPSpec, load_model, save_model, train_knn, train_mlp
from .plot import render_svg
from .result import CounterfactualSet


class _UsageError(Exception):
    pass


def _resolve_seed(flag: int | None) -> int | None:
    if flag is not None:
        return flag
    env = os.environ.get("CFX_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"CFX_SEED must be an integer, got {env!r}") from None
    return None


def _load_data(path: str, fmt: str) -> Dataset:
    text = Path(path).read_text()
    return parse_ucr_tsv(text) if fmt == "ucr_tsv" else parse_ts(text)


def _run_config(path: str | None) -> RunConfig:
    return load_run_config(path) if path else RunConfig()


def cmd_train(args) -> int:
    cfg = _run_config(args.config)
    seed = _resolve_seed(args.seed)
    dataset = _load_data(args.data, args.format)
    if args.model == "knn":
        model = train_knn(dataset, cfg.knn_k, cfg.knn_metric)
    else:
        spec = cfg.mlp_spec
        if seed is not None:
            spec = dataclasses.replace(spec, seed=seed)
        model = train_mlp(dataset, spec)
    save_model(model, args.out)
    print(f"accuracy={model.train_accuracy}")
    return 0


def _resolve_target(raw: str, dataset: Dataset, model, x: TimeSeries) -> int:
    if raw == "auto":
        return second_choice_target(model.predict_proba(x))
    if raw in dataset.class_names:
        return dataset.class_names.index(raw)
    try:
        t = int(raw)
    except ValueError:
        raise _UsageError(
            f"unknown target {raw!r}, expected auto, a class name or an id"
        ) from None
    if not 0 <= t < len(dataset.class_names):
        raise _UsageError(f"target id {t} out of range [0, {len(dataset.class_names)})")
    return t


def cmd_generate(args) -> int:
    if args.method not in GENERATOR_IDS:
        raise _UsageError(
            f"unknown method {args.method!r}, valid ids: {', '.join(GENERATOR_IDS)}"
        )
    cfg = _run_config(args.config)
    seed = _resolve_seed(args.seed)
    if seed is None:
        seed = cfg.seed
    model = load_model(args.model)
    dataset = _load_data(args.data, args.format)
    if not 0 <= args.index < len(dataset):
        raise _UsageError(f"index {args.index} out of range [0, {len(dataset)})")
    x = dataset.instances[args.index].series

    gen_cfg = cfg.generators.get(args.method)
    cls = CONFIG_TYPES[args.method]
    if any(f.name == "seed" for f in dataclasses.fields(cls)):
        gen_cfg = cls(seed=seed) if gen_cfg is None else dataclasses.replace(gen_cfg, seed=seed)

    autoencoder = None
    if args.method == "latentcf":
        if args.autoencoder:
            autoencoder = load_model(args.autoencoder)
        else:
            autoencoder = train_autoencoder(
                dataset, cfg.latent_dim, MLPSpec(hidden_sizes=(32,), epochs=100, seed=seed)
            )

    target = _resolve_target(args.target, dataset, model, x)
    t0 = time.perf_counter()
    out = GENERATORS[args.method](model, dataset, x, target, gen_cfg, autoencoder)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    if isinstance(out, CounterfactualSet):
        out = pick_representative(out, cfg.tau)
    report = evaluate_one(
        model, dataset, x, out, tau=cfg.tau, generation_time_ms=elapsed_ms
    )
    mask = changed_segments(x, out.counterfactual, cfg.tau)
    record = {
        "generator": args.method,
        "seed": seed,
        "target": target,
        "achieved": out.achieved,
        "valid": out.valid,
        "original": x.values.tolist(),
        "counterfactual": out.counterfactual.values.tolist(),
        "changed_segments": [list(seg) for seg in mask.segments],
        "metrics": report.to_dict(),
    }
    Path(args.out).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(f"valid={str(out.valid).lower()} achieved={out.achieved} l2={report.l2}")
    return 0


def _benchmark_summary(rows) -> str:
    by_gen: dict[str, list[dict]] = {}
    for row in rows:
        by_gen.setdefault(row["generator"], []).append(row)

    def med(vals):
        vals = [v for v in vals if v is not None]
        return float(np.median(vals)) if vals else float("nan")

    header = (
        f"{'generator':<14}{'valid':>8}{'med_l2':>10}{'med_chfr':>10}"
        f"{'med_seg':>9}{'med_ms':>10}"
    )
    lines = [header, "-" * len(header)]
    for gen in sorted(by_gen):
        cell = by_gen[gen]
        metrics = [r["metrics"] for r in cell if r["metrics"]]
        n_valid = sum(1 for m in metrics if m["valid"])
        rate = n_valid / len(cell) if cell else 0.0
        lines.append(
            f"{gen:<14}{rate:>8.2f}"
            f"{med([m['l2'] for m in metrics]):>10.4f}"
            f"{med([m['changed_fraction'] for m in metrics]):>10.3f}"
            f"{med([m['segment_count'] for m in metrics]):>9.1f}"
            f"{med([m['generation_time_ms'] for m in metrics]):>10.1f}"
        )
    return "\n".join(lines)


def cmd_benchmark(args) -> int:
    cfg = load_run_config(args.config)
    seed = _resolve_seed(args.seed)
    if seed is not None:
        cfg.seed = seed
    train, _test = load_datasets(cfg)
    name = cfg.train_path.stem if cfg.train_path else "synthetic"
    bench = BenchmarkConfig(
        datasets={name: train},
        generators=cfg.generators,
        classifier=cfg.classifier,
        mlp_spec=cfg.mlp_spec,
        knn_k=cfg.knn_k,
        knn_metric=cfg.knn_metric,
        instances=cfg.instances,
        seed=cfg.seed,
        latent_dim=cfg.latent_dim,
        tau=cfg.tau,
    )
    report = run_benchmark(bench, out_dir=args.out, jobs=args.jobs)
    print(_benchmark_summary(report.rows))
    errors = sum(1 for r in report.rows if r["error"])
    print(f"rows={len(report.rows)} errors={errors} out={args.out}")
    return 0


def cmd_methods(args) -> int:
    entries = list_methods(args.category)
    if args.json:
        print(json.dumps([e.to_dict() for e in entries], indent=2, sort_keys=True))
        return 0
    header = f"{'name':<16}{'year':<6}{'data':<6}{'category':<14}{'impl':<14}idea"
    print(header)
    print("-" * len(header))
    for e in entries:
        impl = e.generator_id or "-"
        print(f"{e.name:<16}{e.year:<6}{e.data:<6}{e.category:<14}{impl:<14}{e.core_idea}")
    return 0


def cmd_render(args) -> int:
    record = json.loads(Path(args.record).read_text())
    for key in ("original", "counterfactual"):
        if key not in record:
            raise _UsageError(f"record file missing {key!r}")
    original = TimeSeries(np.asarray(record["original"], dtype=np.float64))
    cf = TimeSeries(np.asarray(record["counterfactual"], dtype=np.float64))
    svg = render_svg(original, cf, tau=args.tau, title=args.title)
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfx",
        description="Counterfactual explanations for time series classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier and save it")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("ucr_tsv", "ts"), default="ucr_tsv")
    p.add_argument("--model", choices=("knn", "mlp"), default="mlp")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="generate one counterfactual record")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("ucr_tsv", "ts"), default="ucr_tsv")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--target", default="auto")
    p.add_argument("--method", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--autoencoder", help="saved autoencoder file for latentcf")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("benchmark", help="run the generator grid from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("methods", help="print the method catalog")
    p.add_argument("--category", choices=CATEGORIES)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_methods)

    p = sub.add_parser("render", help="render a generate record as SVG")
    p.add_argument("--record", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=1e-6)
    p.add_argument("--title")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (_UsageError, CfxError) as exc:
        print(f"cfx: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cfx: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
