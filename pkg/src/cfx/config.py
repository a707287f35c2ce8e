"""INI run configuration: one file describes dataset, classifier,
generators, evaluation knobs and output, with strict key checking.
"""

from __future__ import annotations

import configparser
import types
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path

from .data import Dataset, parse_ts, parse_ucr_tsv, planted_bump_dataset, znormalize
from .distances import DistanceConfig
from .errors import ConfigError
from .generators import CONFIG_TYPES, GENERATOR_IDS
from .models import MLPSpec

FORMATS = ("ucr_tsv", "ts", "synthetic")

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _parse_bool(raw: str, where: str) -> bool:
    low = raw.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigError(f"{where}: expected a boolean, got {raw!r}")


def _parse_typed(raw: str, tp, where: str):
    raw = raw.strip()
    if tp is bool:
        return _parse_bool(raw, where)
    if tp is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if tp is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
    if tp is str:
        return raw
    origin = typing.get_origin(tp)
    if isinstance(tp, types.UnionType) or origin is typing.Union:
        args = typing.get_args(tp)
        if type(None) in args:
            if raw.lower() in ("none", ""):
                return None
            inner = [a for a in args if a is not type(None)]
            if len(inner) == 1:
                return _parse_typed(raw, inner[0], where)
    if origin is tuple:
        args = typing.get_args(tp)
        parts = [p for p in (s.strip() for s in raw.split(",")) if p]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_parse_typed(p, args[0], where) for p in parts)
        if len(parts) != len(args):
            raise ConfigError(f"{where}: expected {len(args)} comma separated values")
        return tuple(_parse_typed(p, a, where) for p, a in zip(parts, args))
    raise ConfigError(f"{where}: unsupported value type")


def _build_dataclass(cls, items: dict[str, str], section: str):
    """Fill a config dataclass from raw strings, strict about key names.

    A DistanceConfig-typed field named f accepts ``f`` for the metric name
    plus dotted keys ``f.band``, ``f.mode``, ``f.tau``, ``f.dtw_squared``.
    """
    hints = typing.get_type_hints(cls)
    by_name = {f.name: f for f in fields(cls)}
    kwargs: dict = {}
    nested: dict[str, dict[str, str]] = {}
    for key, raw in items.items():
        base, _, sub = key.partition(".")
        if base not in by_name:
            raise ConfigError(f"[{section}]: unknown key {key!r}")
        tp = hints[base]
        if tp is DistanceConfig:
            nested.setdefault(base, {})
            nested[base]["metric" if not sub else sub] = raw
        elif sub:
            raise ConfigError(f"[{section}]: unknown key {key!r}")
        else:
            kwargs[base] = _parse_typed(raw, tp, f"[{section}] {key}")
    for base, sub_items in nested.items():
        dc_hints = typing.get_type_hints(DistanceConfig)
        dc_kwargs = {}
        for sub, raw in sub_items.items():
            if sub not in dc_hints:
                raise ConfigError(f"[{section}]: unknown key {base}.{sub!r}")
            dc_kwargs[sub] = _parse_typed(raw, dc_hints[sub], f"[{section}] {base}.{sub}")
        kwargs[base] = DistanceConfig(**dc_kwargs)
    return cls(**kwargs)


@dataclass
class RunConfig:
    """Everything one invocation needs, resolved from an INI file."""

    train_path: Path | None = None
    test_path: Path | None = None
    data_format: str = "ucr_tsv"
    apply_znorm: bool = False
    synthetic: dict = field(default_factory=dict)
    classifier: str = "mlp"
    mlp_spec: MLPSpec = field(default_factory=MLPSpec)
    knn_k: int = 1
    knn_metric: DistanceConfig = field(default_factory=DistanceConfig)
    generators: dict = field(default_factory=dict)
    instances: int = 10
    seed: int = 0
    latent_dim: int = 8
    tau: float = 1e-6
    max_lag: int | None = None
    out_dir: Path | None = None
    plots: bool = False


_SYNTH_KEYS = {"n": int, "length": int, "channels": int, "bump_len": int,
               "amplitude": float, "noise": float}


def _read_dataset_section(items: dict[str, str], cfg: RunConfig, base_dir: Path):
    known = {"train", "test", "format", "znormalize", *_SYNTH_KEYS}
    for key in items:
        if key not in known:
            raise ConfigError(f"[dataset]: unknown key {key!r}")
    fmt = items.get("format", "ucr_tsv")
    if fmt not in FORMATS:
        raise ConfigError(f"[dataset]: format must be one of {FORMATS}")
    cfg.data_format = fmt
    if "znormalize" in items:
        cfg.apply_znorm = _parse_bool(items["znormalize"], "[dataset] znormalize")
    if fmt == "synthetic":
        for key, tp in _SYNTH_KEYS.items():
            if key in items:
                cfg.synthetic[key] = _parse_typed(items[key], tp, f"[dataset] {key}")
        return
    for key in _SYNTH_KEYS:
        if key in items:
            raise ConfigError(f"[dataset]: {key!r} only applies to format=synthetic")
    if "train" not in items:
        raise ConfigError("[dataset]: train path required unless format=synthetic")
    cfg.train_path = (base_dir / items["train"]).resolve()
    if not cfg.train_path.is_file():
        raise ConfigError(f"[dataset]: train file not found: {cfg.train_path}")
    if "test" in items:
        cfg.test_path = (base_dir / items["test"]).resolve()
        if not cfg.test_path.is_file():
            raise ConfigError(f"[dataset]: test file not found: {cfg.test_path}")


def _read_classifier_section(items: dict[str, str], cfg: RunConfig):
    kind = items.get("kind", "mlp")
    if kind not in ("mlp", "knn"):
        raise ConfigError("[classifier]: kind must be mlp or knn")
    cfg.classifier = kind
    rest = {k: v for k, v in items.items() if k != "kind"}
    if kind == "mlp":
        cfg.mlp_spec = _build_dataclass(MLPSpec, rest, "classifier")
        return
    known = {"k", "metric", "metric.band", "metric.mode", "metric.tau",
             "metric.dtw_squared"}
    for key in rest:
        if key not in known:
            raise ConfigError(f"[classifier]: unknown key {key!r}")
    if "k" in rest:
        cfg.knn_k = _parse_typed(rest["k"], int, "[classifier] k")
    metric_items = {k: v for k, v in rest.items() if k.startswith("metric")}
    if metric_items:
        holder = _build_dataclass(_MetricHolder, metric_items, "classifier")
        cfg.knn_metric = holder.metric


@dataclass
class _MetricHolder:
    metric: DistanceConfig = field(default_factory=DistanceConfig)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"bad config syntax: {exc}") from None

    cfg = RunConfig()
    base_dir = path.parent
    seen_dataset = False
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "dataset":
            _read_dataset_section(items, cfg, base_dir)
            seen_dataset = True
        elif section == "classifier":
            _read_classifier_section(items, cfg)
        elif section == "run":
            known = {"instances": int, "seed": int, "latent_dim": int}
            for key, raw in items.items():
                if key not in known:
                    raise ConfigError(f"[run]: unknown key {key!r}")
                setattr(cfg, key, _parse_typed(raw, known[key], f"[run] {key}"))
        elif section == "evaluation":
            for key, raw in items.items():
                if key == "tau":
                    cfg.tau = _parse_typed(raw, float, "[evaluation] tau")
                elif key == "max_lag":
                    cfg.max_lag = _parse_typed(raw, int | None, "[evaluation] max_lag")
                else:
                    raise ConfigError(f"[evaluation]: unknown key {key!r}")
        elif section == "output":
            for key, raw in items.items():
                if key == "dir":
                    cfg.out_dir = (base_dir / raw).resolve()
                elif key == "plots":
                    cfg.plots = _parse_bool(raw, "[output] plots")
                else:
                    raise ConfigError(f"[output]: unknown key {key!r}")
        elif section.startswith("generator."):
            gid = section[len("generator."):]
            if gid not in GENERATOR_IDS:
                raise ConfigError(
                    f"unknown generator section {section!r}, ids: {sorted(GENERATOR_IDS)}"
                )
            cls = CONFIG_TYPES[gid]
            cfg.generators[gid] = _build_dataclass(cls, items, section) if items else None
        else:
            raise ConfigError(f"unknown section [{section}]")
    if not seen_dataset:
        raise ConfigError("config needs a [dataset] section")
    if not cfg.generators:
        cfg.generators = {gid: None for gid in GENERATOR_IDS}
    if cfg.instances < 1:
        raise ConfigError("[run]: instances must be >= 1")
    return cfg


def _parse_file(path: Path, fmt: str) -> Dataset:
    text = path.read_text()
    if fmt == "ucr_tsv":
        return parse_ucr_tsv(text)
    return parse_ts(text)


def load_datasets(cfg: RunConfig) -> tuple[Dataset, Dataset | None]:
    """Materialize (train, test or None) from a RunConfig."""
    if cfg.data_format == "synthetic":
        train = planted_bump_dataset(seed=cfg.seed, **cfg.synthetic)
        test = None
    else:
        train = _parse_file(cfg.train_path, cfg.data_format)
        test = _parse_file(cfg.test_path, cfg.data_format) if cfg.test_path else None
    if cfg.apply_znorm:
        train = znormalize(train)
        test = znormalize(test) if test is not None else None
    return train, test
