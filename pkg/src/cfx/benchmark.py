"""Benchmark runner: every configured generator against sampled instances,
with deterministic per-cell seeding and resumable per-cell result files.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .data import Dataset
from .distances import DistanceConfig
from .errors import CfxError, ConfigError
from .evaluation import MetricReport, aggregate, diversity, evaluate_one, pick_representative
from .generators import CONFIG_TYPES, GENERATORS, train_autoencoder
from .models import MLPSpec, train_knn, train_mlp
from .result import CounterfactualSet


@dataclass
class BenchmarkConfig:
    """What to run: datasets are passed in already parsed.

    ``generators`` maps generator ids to config objects (None for the
    defaults). Seed-bearing generator configs are re-seeded per cell from
    (seed, cell id), so cells never share random streams and the run is
    independent of execution order.
    """

    datasets: dict[str, Dataset]
    generators: dict[str, object | None]
    classifier: str = "mlp"
    mlp_spec: MLPSpec | None = None
    knn_k: int = 1
    knn_metric: DistanceConfig = field(default_factory=DistanceConfig)
    instances: int = 10
    seed: int = 0
    latent_dim: int = 8
    ae_spec: MLPSpec | None = None
    tau: float = 1e-6

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("at least one dataset required")
        if not self.generators:
            raise ConfigError("at least one generator required")
        for gid in self.generators:
            if gid not in GENERATORS:
                raise ConfigError(
                    f"unknown generator {gid!r}, expected one of {sorted(GENERATORS)}"
                )
        if self.classifier not in ("mlp", "knn"):
            raise ConfigError("classifier must be mlp or knn")
        if self.instances < 1:
            raise ConfigError("instances must be >= 1")


def _digest(config: BenchmarkConfig) -> str:
    desc = {
        "datasets": {
            name: [len(ds), ds.channels, ds.length, list(ds.class_names)]
            for name, ds in sorted(config.datasets.items())
        },
        "generators": {
            gid: (dataclasses.asdict(cfg) if cfg is not None else None)
            for gid, cfg in sorted(config.generators.items())
        },
        "classifier": config.classifier,
        "mlp_spec": dataclasses.asdict(config.mlp_spec) if config.mlp_spec else None,
        "knn_k": config.knn_k,
        "knn_metric": dataclasses.asdict(config.knn_metric),
        "instances": config.instances,
        "seed": config.seed,
        "latent_dim": config.latent_dim,
        "ae_spec": dataclasses.asdict(config.ae_spec) if config.ae_spec else None,
        "tau": config.tau,
    }
    blob = json.dumps(desc, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _cell_seed(seed: int, cell_id: str) -> int:
    h = hashlib.sha256(f"{seed}|{cell_id}".encode()).digest()
    return int.from_bytes(h[:8], "big") % (2**32)


def _reseed(cfg, cell_seed: int):
    if cfg is not None and any(f.name == "seed" for f in dataclasses.fields(cfg)):
        return dataclasses.replace(cfg, seed=cell_seed)
    return cfg


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", text)


@dataclass
class BenchmarkReport:
    seed: int
    config_digest: str
    created: str
    rows: list[dict]
    aggregates: dict

    def to_json(self, indent: int = 2) -> str:
        payload = {
            "seed": self.seed,
            "config_digest": self.config_digest,
            "created": self.created,
            "rows": self.rows,
            "aggregates": self.aggregates,
        }
        return json.dumps(payload, indent=indent, sort_keys=True, allow_nan=False)

    def to_csv(self) -> str:
        metric_cols = [f.name for f in dataclasses.fields(MetricReport)]
        cols = [
            "dataset", "generator", "instance", "target", "achieved", "error",
            *metric_cols, "set_size", "set_diversity",
        ]
        lines = [",".join(cols)]
        for row in self.rows:
            rec = []
            for col in cols:
                if col in ("dataset", "generator", "instance", "target", "achieved", "error"):
                    v = row.get(col)
                elif col in ("set_size", "set_diversity"):
                    v = row.get(col)
                else:
                    v = (row.get("metrics") or {}).get(col)
                if v is None:
                    rec.append("")
                elif isinstance(v, bool):
                    rec.append("true" if v else "false")
                elif isinstance(v, float):
                    rec.append(repr(v))
                else:
                    rec.append(str(v).replace(",", ";"))
            lines.append(",".join(rec))
        return "\n".join(lines) + "\n"


def second_choice_target(probs: np.ndarray) -> int:
    """Default target: the class with the second-highest probability."""
    order = np.argsort(-probs, kind="stable")
    return int(order[1])


def _train(config: BenchmarkConfig, dataset: Dataset):
    if config.classifier == "knn":
        return train_knn(dataset, config.knn_k, config.knn_metric)
    spec = config.mlp_spec or MLPSpec(seed=config.seed)
    return train_mlp(dataset, spec)


def _run_cell(model, dataset, gen_id, cfg, inst, target, autoencoder, tau):
    t0 = time.perf_counter()
    out = GENERATORS[gen_id](model, dataset, inst, target, cfg, autoencoder)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    set_size = set_div = None
    if isinstance(out, CounterfactualSet):
        set_size = len(out)
        set_div = diversity([r.counterfactual for r in out])
        out = pick_representative(out, tau)
    report = evaluate_one(
        model, dataset, inst, out, tau=tau, generation_time_ms=elapsed_ms
    )
    return {
        "achieved": out.achieved,
        "error": None,
        "metrics": report.to_dict(),
        "set_size": set_size,
        "set_diversity": set_div,
    }


def run_benchmark(
    config: BenchmarkConfig, out_dir: str | Path | None = None, jobs: int = 1
) -> BenchmarkReport:
    """Run the full grid; deterministic for a fixed config and seed.

    With ``out_dir`` set, each finished cell lands in ``out_dir/cells/`` and
    a rerun picks up finished cells instead of recomputing them, then
    report.json and report.csv are written.
    """
    cells_dir = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        cells_dir = out_dir / "cells"
        cells_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for ds_name in sorted(config.datasets):
        dataset = config.datasets[ds_name]
        model = _train(config, dataset)
        autoencoder = None
        if "latentcf" in config.generators:
            ae_spec = config.ae_spec or MLPSpec(
                hidden_sizes=(32,), epochs=100, seed=config.seed
            )
            autoencoder = train_autoencoder(dataset, config.latent_dim, ae_spec)
        rng = np.random.default_rng(
            np.random.SeedSequence((config.seed & 0xFFFFFFFF, hash_name(ds_name)))
        )
        count = min(config.instances, len(dataset))
        picked = sorted(rng.choice(len(dataset), size=count, replace=False).tolist())
        targets = {}
        for idx in picked:
            probs = model.predict_proba(dataset.instances[idx].series)
            targets[idx] = second_choice_target(probs)
        for gen_id in sorted(config.generators):
            for idx in picked:
                tasks.append((ds_name, dataset, model, autoencoder, gen_id, idx, targets[idx]))

    def execute(task):
        ds_name, dataset, model, autoencoder, gen_id, idx, target = task
        cell_id = f"{ds_name}/{gen_id}/{idx}"
        cell_path = (
            cells_dir / f"{_safe_name(ds_name)}__{gen_id}__{idx}.json"
            if cells_dir is not None
            else None
        )
        if cell_path is not None and cell_path.exists():
            return json.loads(cell_path.read_text())
        cfg = _reseed(config.generators[gen_id], _cell_seed(config.seed, cell_id))
        base = {
            "dataset": ds_name,
            "generator": gen_id,
            "instance": idx,
            "target": target,
        }
        try:
            body = _run_cell(
                model, dataset, gen_id, cfg,
                dataset.instances[idx].series, target, autoencoder, config.tau,
            )
        except CfxError as exc:
            body = {
                "achieved": None,
                "error": f"{type(exc).__name__}: {exc}",
                "metrics": None,
                "set_size": None,
                "set_diversity": None,
            }
        row = {**base, **body}
        if cell_path is not None:
            cell_path.write_text(json.dumps(row, sort_keys=True, allow_nan=False))
        return row

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(execute, tasks))
    else:
        rows = [execute(task) for task in tasks]
    rows.sort(key=lambda r: (r["dataset"], r["generator"], r["instance"]))

    aggregates = {}
    for ds_name in sorted(config.datasets):
        for gen_id in sorted(config.generators):
            cell_rows = [
                r for r in rows
                if r["dataset"] == ds_name and r["generator"] == gen_id
            ]
            reports = [
                MetricReport(**r["metrics"]) for r in cell_rows if r["metrics"]
            ]
            agg = aggregate(reports)
            agg["errors"] = sum(1 for r in cell_rows if r["error"])
            aggregates[f"{ds_name}::{gen_id}"] = agg

    report = BenchmarkReport(
        seed=config.seed,
        config_digest=_digest(config),
        created=datetime.now(timezone.utc).isoformat(),
        rows=rows,
        aggregates=aggregates,
    )
    if out_dir is not None:
        (out_dir / "report.json").write_text(report.to_json())
        (out_dir / "report.csv").write_text(report.to_csv())
    return report


def hash_name(name: str) -> int:
    """Stable 32-bit hash for dataset names (python hash() is salted)."""
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "big")
