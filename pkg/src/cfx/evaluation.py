"""Counterfactual quality metrics and the shared evaluation entry point.

Validity is always re-derived from the model's argmax here, never read
off the generator's flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .data import Dataset, TimeSeries
from .distances import DistanceConfig, changed_segments, distance, dtw, frechet, minkowski
from .errors import CfxError, ConfigError, MetricUnavailable
from .models import Classifier
from .result import CounterfactualResult, CounterfactualSet


def autocorr_distance(a: TimeSeries, b: TimeSeries, max_lag: int | None = None) -> float:
    """L2 gap between autocorrelation profiles (lags 1..K, all channels).

    Uses the biased mean-removed estimator, r(l) = c(l) / c(0). Constant
    channels contribute an all-zero profile. K defaults to min(20, T // 2).
    """
    if a.values.shape != b.values.shape:
        raise ConfigError("series shapes must match")
    t = a.length
    k = min(20, t // 2) if max_lag is None else max_lag
    if k < 0 or k >= t:
        raise ConfigError(f"max_lag must be in [0, {t - 1}]")
    if k == 0:
        return 0.0

    def profile(vals: np.ndarray) -> np.ndarray:
        out = np.zeros((vals.shape[0], k))
        for c in range(vals.shape[0]):
            centered = vals[c] - vals[c].mean()
            c0 = float(centered @ centered)
            if c0 < 1e-300:
                continue
            for lag in range(1, k + 1):
                out[c, lag - 1] = float(centered[:-lag] @ centered[lag:]) / c0
        return out

    return float(np.linalg.norm(profile(a.values) - profile(b.values)))


def spectral_distance(a: TimeSeries, b: TimeSeries) -> float:
    """L2 gap between normalized periodograms, summed over channels.

    Periodogram = squared DFT magnitudes over all T bins, normalized to
    sum 1; an all-zero channel maps to the uniform spectrum.
    """
    if a.values.shape != b.values.shape:
        raise ConfigError("series shapes must match")

    def spectrum(row: np.ndarray) -> np.ndarray:
        power = np.abs(np.fft.fft(row)) ** 2
        total = power.sum()
        if total < 1e-300:
            return np.full(len(row), 1.0 / len(row))
        return power / total

    total = 0.0
    for c in range(a.channels):
        total += float(np.linalg.norm(spectrum(a.values[c]) - spectrum(b.values[c])))
    return total


def ood_score(
    dataset: Dataset,
    cf: TimeSeries,
    target: int,
    metric: DistanceConfig | None = None,
) -> float:
    """Nearest-neighbor distance to the target class, normalized by that
    class's mean leave-one-out nearest-neighbor distance.

    Raises MetricUnavailable with fewer than two target instances or a
    degenerate (all-identical) reference class.
    """
    metric = metric or DistanceConfig()
    idx = dataset.indices_of_class(target)
    if len(idx) < 2:
        raise MetricUnavailable(
            f"need >= 2 instances of class {target}, have {len(idx)}"
        )
    members = [dataset.instances[i].series for i in idx]
    numerator = min(distance(cf, s, metric) for s in members)
    loo = []
    for i, s in enumerate(members):
        loo.append(min(distance(s, o, metric) for j, o in enumerate(members) if j != i))
    denominator = float(np.mean(loo))
    if denominator <= 0.0:
        raise MetricUnavailable("target class instances are all identical")
    return float(numerator / denominator)


def diversity(series: list[TimeSeries], metric: DistanceConfig | None = None) -> float:
    """Mean pairwise distance; zero for empty or singleton collections."""
    metric = metric or DistanceConfig()
    if len(series) < 2:
        return 0.0
    total, pairs = 0.0, 0
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            total += distance(series[i], series[j], metric)
            pairs += 1
    return total / pairs


def stability(
    generator,
    model: Classifier,
    dataset: Dataset,
    x: TimeSeries,
    target: int,
    sigma: float,
    n_trials: int = 20,
    seed: int = 0,
) -> dict:
    """Perturbation stability of a generator around one query.

    Reruns the generator on x + noise and measures (a) the mean L2 gap
    between the rerun counterfactuals and the clean one, and (b) how often
    the clean counterfactual still classifies as the target after
    independent noise is added to it. A generator failure inside a trial
    counts as an invalid trial, never an error.
    """
    if sigma < 0 or n_trials < 1:
        raise ConfigError("sigma >= 0 and n_trials >= 1 required")

    def run(query: TimeSeries):
        out = generator(model, dataset, query, target)
        return out.best if isinstance(out, CounterfactualSet) else out

    base = run(x)
    rng = np.random.default_rng(seed)
    dists, failed = [], 0
    for _ in range(n_trials):
        noise = rng.normal(0.0, sigma, size=x.values.shape) if sigma > 0 else 0.0
        try:
            trial = run(TimeSeries(x.values + noise))
        except CfxError:
            failed += 1
            continue
        dists.append(
            float(np.linalg.norm(trial.counterfactual.values - base.counterfactual.values))
        )
    retained = 0
    for _ in range(n_trials):
        noise = rng.normal(0.0, sigma, size=x.values.shape) if sigma > 0 else 0.0
        noisy_cf = TimeSeries(base.counterfactual.values + noise)
        if int(np.argmax(model.predict_proba(noisy_cf))) == target:
            retained += 1
    return {
        "cf_distance_mean": float(np.mean(dists)) if dists else math.nan,
        "validity_retention": retained / n_trials,
        "failed_trials": failed,
    }


@dataclass(frozen=True)
class MetricReport:
    """Per-counterfactual metric row; ``ood_score`` may be absent (None)."""

    valid: bool
    p_target: float
    l1: float
    l2: float
    linf: float
    dtw: float
    frechet: float
    l0_count: int
    changed_fraction: float
    segment_count: int
    mean_segment_length: float
    autocorr_distance: float
    spectral_distance: float
    ood_score: float | None
    generation_time_ms: float | None
    model_calls: int

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"metric {f.name} must be finite, got {v}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def pick_representative(out, tau: float = 1e-6) -> CounterfactualResult:
    """One result from a generator's output, set-valued or not.

    A Pareto set spans a proximity/sparsity trade-off; the benchmark reports
    the sparsest valid member (changed fraction, then segment count, then
    L2) since sets exist to offer exactly that end. Falls back to the
    set's proximity-best member when nothing is valid.
    """
    if isinstance(out, CounterfactualResult):
        return out
    valid = [r for r in out if r.valid]
    if not valid:
        return out.best

    def key(r: CounterfactualResult):
        mask = changed_segments(r.counterfactual, r.original, tau)
        return (
            mask.changed_fraction,
            mask.segment_count,
            float(np.linalg.norm(r.delta)),
        )

    return min(valid, key=key)


def evaluate_one(
    model: Classifier,
    dataset: Dataset,
    x: TimeSeries,
    result: CounterfactualResult,
    tau: float = 1e-6,
    max_lag: int | None = None,
    generation_time_ms: float | None = None,
) -> MetricReport:
    """Fill a MetricReport for one result against its originating query."""
    cf = result.counterfactual
    probs = model.predict_proba(cf)
    mask = changed_segments(cf, x, tau)
    try:
        ood = ood_score(dataset, cf, result.target)
    except MetricUnavailable:
        ood = None
    if generation_time_ms is None:
        generation_time_ms = result.info.get("generation_time_ms")
    return MetricReport(
        valid=int(np.argmax(probs)) == result.target,
        p_target=float(probs[result.target]),
        l1=minkowski(cf, x, 1),
        l2=minkowski(cf, x, 2),
        linf=minkowski(cf, x, math.inf),
        dtw=dtw(cf, x),
        frechet=frechet(cf, x),
        l0_count=int(mask.changed_count),
        changed_fraction=mask.changed_fraction,
        segment_count=mask.segment_count,
        mean_segment_length=mask.mean_segment_length,
        autocorr_distance=autocorr_distance(cf, x, max_lag),
        spectral_distance=spectral_distance(cf, x),
        ood_score=ood,
        generation_time_ms=generation_time_ms,
        model_calls=result.model_calls,
    )


_AGG_FIELDS = (
    "p_target",
    "l1",
    "l2",
    "linf",
    "dtw",
    "frechet",
    "l0_count",
    "changed_fraction",
    "segment_count",
    "mean_segment_length",
    "autocorr_distance",
    "spectral_distance",
    "ood_score",
    "generation_time_ms",
)


def aggregate(reports: list[MetricReport]) -> dict:
    """Mean/median/stddev per metric plus the validity rate."""
    out: dict = {
        "n": len(reports),
        "validity_rate": (
            float(np.mean([r.valid for r in reports])) if reports else 0.0
        ),
    }
    for name in _AGG_FIELDS:
        vals = [getattr(r, name) for r in reports]
        vals = [v for v in vals if v is not None]
        if not vals:
            out[name] = None
            continue
        arr = np.asarray(vals, dtype=np.float64)
        out[name] = {
            "mean": float(arr.mean()),
            "median": float(np.median(arr)),
            "stddev": float(arr.std()),
            "n": len(vals),
        }
    return out
