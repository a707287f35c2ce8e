"""Instance-based counterfactuals: borrow values from a real target-class
instance, either over a saliency-chosen time window or whole channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..data import Dataset, TimeSeries
from ..distances import DistanceConfig, distance
from ..errors import ConfigError, NoNeighborError
from ..models import Classifier
from ..result import CounterfactualResult
from .common import counting, degenerate_if_target, finalize

BASELINES = ("series_mean", "zero", "nun")


@dataclass(frozen=True)
class NUNResult:
    """Nearest unlike neighbor: closest training instance of the wanted class."""

    index: int
    series: TimeSeries
    distance: float


def nearest_unlike_neighbor(
    dataset: Dataset, x: TimeSeries, target: int, metric: DistanceConfig | None = None
) -> NUNResult:
    """Closest instance of class ``target``; distance ties keep the lower index."""
    metric = metric or DistanceConfig()
    best = None
    for i in dataset.indices_of_class(target):
        d = distance(dataset.instances[i].series, x, metric)
        if best is None or d < best.distance:
            best = NUNResult(i, dataset.instances[i].series, d)
    if best is None:
        raise NoNeighborError(f"no instance of class {target} in dataset")
    return best


def occlusion_saliency(
    model: Classifier,
    x: TimeSeries,
    window: int,
    baseline: str = "series_mean",
    baseline_series: TimeSeries | None = None,
) -> np.ndarray:
    """Per-entry saliency from sliding-window occlusion.

    Each (channel, start) occlusion replaces that span with the baseline and
    measures the drop in the predicted class probability. A position's score
    is the mean drop over all windows covering it, clamped at zero, then
    max-normalized to [0, 1] (left all-zero when nothing moves the model).
    """
    if not 1 <= window <= x.length:
        raise ConfigError(f"window must be in [1, {x.length}]")
    if baseline not in BASELINES:
        raise ConfigError(f"baseline must be one of {BASELINES}")
    if baseline == "nun":
        if baseline_series is None:
            raise ConfigError("baseline 'nun' needs baseline_series")
        if baseline_series.values.shape != x.values.shape:
            raise ConfigError("baseline_series shape differs from x")
    probs = model.predict_proba(x)
    pred = int(np.argmax(probs))
    p0 = probs[pred]
    heat = np.zeros_like(x.values)
    cover = np.zeros_like(x.values)
    for c in range(x.channels):
        for s in range(x.length - window + 1):
            occluded = x.values.copy()
            if baseline == "series_mean":
                occluded[c, s : s + window] = x.values[c].mean()
            elif baseline == "zero":
                occluded[c, s : s + window] = 0.0
            else:
                occluded[c, s : s + window] = baseline_series.values[c, s : s + window]
            drop = p0 - model.predict_proba(TimeSeries(occluded))[pred]
            heat[c, s : s + window] += drop
            cover[c, s : s + window] += 1.0
    heat = np.maximum(heat / cover, 0.0)
    top = heat.max()
    if top > 0.0:
        heat = heat / top
    return heat


def _plateau_peak(row: np.ndarray) -> int:
    """Index of the maximum; a tied plateau resolves to its midpoint."""
    i = int(np.argmax(row))
    j = i
    while j + 1 < len(row) and row[j + 1] == row[i]:
        j += 1
    return (i + j) // 2


@dataclass(frozen=True)
class NativeGuideConfig:
    metric: DistanceConfig = DistanceConfig()
    saliency_window: int = 5
    saliency_baseline: str = "nun"
    max_expand: int | None = None


def native_guide_generate(
    model: Classifier,
    dataset: Dataset,
    x: TimeSeries,
    target: int,
    config: NativeGuideConfig | None = None,
) -> CounterfactualResult:
    """Transplant a growing window of the nearest unlike neighbor.

    The window starts one step wide at the saliency peak and expands one
    step per side per round, stopping at the first valid transplant or at
    full replacement (which equals the neighbor itself).
    """
    cfg = config or NativeGuideConfig()
    wrapped = counting(model)
    deg = degenerate_if_target(wrapped, x, target, "native_guide")
    if deg is not None:
        return deg
    nun = nearest_unlike_neighbor(dataset, x, target, cfg.metric)
    sal = occlusion_saliency(
        wrapped,
        x,
        min(cfg.saliency_window, x.length),
        cfg.saliency_baseline,
        baseline_series=nun.series if cfg.saliency_baseline == "nun" else None,
    )
    peak = _plateau_peak(sal.sum(axis=0))
    t = x.length
    max_radius = max(peak, t - 1 - peak)
    if cfg.max_expand is not None:
        max_radius = min(max_radius, cfg.max_expand)
    attempts = 0
    cand = x.values.copy()
    lo = hi = peak
    for radius in range(max_radius + 1):
        lo, hi = max(0, peak - radius), min(t - 1, peak + radius)
        cand = x.values.copy()
        cand[:, lo : hi + 1] = nun.series.values[:, lo : hi + 1]
        attempts += 1
        if int(np.argmax(wrapped.predict_proba(TimeSeries(cand)))) == target:
            break
    return finalize(
        wrapped, x, cand, target, "native_guide",
        iterations=attempts,
        info={"window": [int(lo), int(hi)], "nun_index": nun.index, "peak": int(peak)},
    )


@dataclass(frozen=True)
class ComteConfig:
    metric: DistanceConfig = DistanceConfig()
    exact_below: int = 10

    def __post_init__(self):
        if self.exact_below < 1:
            raise ConfigError("exact_below must be >= 1")


def comte_generate(
    model: Classifier,
    dataset: Dataset,
    x: TimeSeries,
    target: int,
    config: ComteConfig | None = None,
) -> CounterfactualResult:
    """Substitute whole channels from the nearest unlike neighbor.

    Up to ``exact_below`` channels every non-empty subset is tried and the
    valid one minimizing (subset size, then distance) wins; above that a
    greedy forward pass adds the channel with the best p_target gain each
    round until the prediction flips.
    """
    cfg = config or ComteConfig()
    wrapped = counting(model)
    deg = degenerate_if_target(wrapped, x, target, "comte")
    if deg is not None:
        return deg
    nun = nearest_unlike_neighbor(dataset, x, target, cfg.metric)
    c = x.channels

    def substituted(chans) -> np.ndarray:
        cand = x.values.copy()
        cand[list(chans), :] = nun.series.values[list(chans), :]
        return cand

    attempts = 0
    chosen: tuple[int, ...] | None = None
    chosen_vals: np.ndarray | None = None
    if c <= cfg.exact_below:
        for size in range(1, c + 1):
            best_d = np.inf
            for subset in combinations(range(c), size):
                cand = substituted(subset)
                attempts += 1
                if int(np.argmax(wrapped.predict_proba(TimeSeries(cand)))) == target:
                    d = distance(TimeSeries(cand), x, cfg.metric)
                    if d < best_d:
                        best_d, chosen, chosen_vals = d, subset, cand
            if chosen is not None:
                break
    else:
        selected: list[int] = []
        remaining = list(range(c))
        while remaining:
            gains = []
            for ch in remaining:
                cand = substituted(selected + [ch])
                attempts += 1
                gains.append(wrapped.predict_proba(TimeSeries(cand))[target])
            pick = remaining[int(np.argmax(gains))]
            selected.append(pick)
            remaining.remove(pick)
            cand = substituted(selected)
            if int(np.argmax(wrapped.predict_proba(TimeSeries(cand)))) == target:
                chosen, chosen_vals = tuple(sorted(selected)), cand
                break
    if chosen is None:
        chosen = tuple(range(c))  # full substitution equals the neighbor
        chosen_vals = substituted(chosen)
    return finalize(
        wrapped, x, chosen_vals, target, "comte",
        iterations=attempts,
        info={"channels": [int(ch) for ch in chosen], "nun_index": nun.index},
    )
