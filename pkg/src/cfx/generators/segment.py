"""Segment-level counterfactuals: discord replacement and greedy window
substitution.

The matrix profile here is the exact brute-force kind: z-normalized
Euclidean distance between all subsequence pairs outside an exclusion
zone of ceil(m/2). Pairs where either window is near-constant
(std < 1e-9) fall back to unnormalized Euclidean distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..data import Dataset, TimeSeries
from ..distances import DistanceConfig
from ..errors import ConfigError, NoNeighborError, ShapeError
from ..models import Classifier
from ..result import CounterfactualResult
from .common import counting, degenerate_if_target, finalize
from .instance import nearest_unlike_neighbor, occlusion_saliency

_CONST_STD = 1e-9


@dataclass(frozen=True)
class MatrixProfile:
    """Nearest-neighbor distance and match index per subsequence start."""

    distances: np.ndarray
    indices: np.ndarray
    window: int
    exclusion: int


def _znorm_windows(subs: np.ndarray):
    means = subs.mean(axis=1, keepdims=True)
    stds = subs.std(axis=1, keepdims=True)
    const = stds[:, 0] < _CONST_STD
    safe = np.where(stds < _CONST_STD, 1.0, stds)
    return (subs - means) / safe, const


def _pair_dists(subs: np.ndarray) -> np.ndarray:
    z, const = _znorm_windows(subs)
    dz = np.sqrt(np.maximum(((z[:, None, :] - z[None, :, :]) ** 2).sum(axis=2), 0.0))
    draw = np.sqrt(
        np.maximum(((subs[:, None, :] - subs[None, :, :]) ** 2).sum(axis=2), 0.0)
    )
    either_const = const[:, None] | const[None, :]
    return np.where(either_const, draw, dz)


def matrix_profile(series, m: int) -> MatrixProfile:
    """Brute-force self-join matrix profile of a univariate series."""
    if isinstance(series, TimeSeries):
        if series.channels != 1:
            raise ShapeError("matrix_profile takes a univariate series")
        values = series.values[0]
    else:
        values = np.asarray(series, dtype=np.float64)
        if values.ndim != 1:
            raise ShapeError("matrix_profile takes a 1-D array")
    n = len(values)
    if m < 2 or m > n:
        raise ConfigError(f"window m must be in [2, {n}]")
    excl = math.ceil(m / 2)
    n_sub = n - m + 1
    if n_sub <= excl:
        raise ConfigError(
            f"series too short: {n_sub} subsequences with exclusion zone {excl}"
        )
    subs = sliding_window_view(values, m)
    dists = _pair_dists(subs)
    idx = np.arange(n_sub)
    dists[np.abs(idx[:, None] - idx[None, :]) < excl] = np.inf
    return MatrixProfile(
        distances=dists.min(axis=1),
        indices=dists.argmin(axis=1),
        window=m,
        exclusion=excl,
    )


def top_discord(profile: MatrixProfile, k: int = 1) -> list[int]:
    """Up to k subsequence starts by descending profile distance.

    Ties break toward the lower index; picked positions keep at least the
    exclusion-zone spacing from each other.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    order = np.argsort(-profile.distances, kind="stable")
    picks: list[int] = []
    for pos in order:
        pos = int(pos)
        if all(abs(pos - q) >= profile.exclusion for q in picks):
            picks.append(pos)
            if len(picks) == k:
                break
    return picks


def _best_donor(
    dataset: Dataset, target: int, channel: int, x_win: np.ndarray
) -> tuple[int, int, np.ndarray]:
    """Target-class window minimizing z-normalized distance to x_win."""
    m = len(x_win)
    xm, xs = x_win.mean(), x_win.std()
    x_const = xs < _CONST_STD
    xz = x_win - xm if x_const else (x_win - xm) / xs
    best = None
    for i in dataset.indices_of_class(target):
        row = dataset.instances[i].series.values[channel]
        if len(row) < m:
            continue
        subs = sliding_window_view(row, m)
        z, const = _znorm_windows(subs)
        for s in range(len(subs)):
            if x_const or const[s]:
                d = float(np.linalg.norm(subs[s] - x_win))
            else:
                d = float(np.linalg.norm(z[s] - xz))
            if best is None or d < best[0]:
                best = (d, i, s)
    if best is None:
        raise NoNeighborError(f"no class-{target} window of length {m} available")
    _, i, s = best
    donor = dataset.instances[i].series.values[channel, s : s + m]
    dm, ds = donor.mean(), donor.std()
    donor_z = donor - dm if ds < _CONST_STD else (donor - dm) / ds
    if x_const:
        rescaled = donor - dm + xm  # keep donor shape, match the level
    else:
        rescaled = donor_z * xs + xm
    return i, s, rescaled


@dataclass(frozen=True)
class DiscordConfig:
    window: int | None = None  # default max(4, length // 10)
    k: int = 3
    metric: DistanceConfig = field(default_factory=DistanceConfig)

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")


def discord_generate(
    model: Classifier,
    dataset: Dataset,
    x: TimeSeries,
    target: int,
    config: DiscordConfig | None = None,
) -> CounterfactualResult:
    """Replace anomalous subsequences with matched target-class windows.

    Top-k discords are pooled over channels; combinations are tried in
    rank order (all single discords, then pairs, ...) until the
    replacement flips the model. Donor windows are rescaled to the
    replaced window's own mean/std before transplanting.
    """
    cfg = config or DiscordConfig()
    wrapped = counting(model)
    deg = degenerate_if_target(wrapped, x, target, "discord")
    if deg is not None:
        return deg
    if not dataset.indices_of_class(target):
        raise NoNeighborError(f"no instance of class {target} in dataset")
    m = cfg.window if cfg.window is not None else max(4, x.length // 10)
    pooled: list[tuple[float, int, int]] = []
    for c in range(x.channels):
        profile = matrix_profile(x.values[c], m)
        for pos in top_discord(profile, cfg.k):
            pooled.append((float(profile.distances[pos]), c, pos))
    pooled.sort(key=lambda item: (-item[0], item[1], item[2]))
    pooled = pooled[: cfg.k]

    donors = {}
    for _, c, pos in pooled:
        donors[(c, pos)] = _best_donor(dataset, target, c, x.values[c, pos : pos + m])

    attempts = 0
    cand = x.values.copy()
    used: list[tuple[int, int]] = []
    found = False
    for size in range(1, len(pooled) + 1):
        for combo in combinations(range(len(pooled)), size):
            cand = x.values.copy()
            used = []
            for ci in combo:
                _, c, pos = pooled[ci]
                _, _, rescaled = donors[(c, pos)]
                cand[c, pos : pos + m] = rescaled
                used.append((c, pos))
            attempts += 1
            if int(np.argmax(wrapped.predict_proba(TimeSeries(cand)))) == target:
                found = True
                break
        if found:
            break
    return finalize(
        wrapped, x, cand, target, "discord",
        iterations=attempts,
        info={
            "window": m,
            "windows": [[c, pos, pos + m - 1] for c, pos in used],
            "donors": [
                [donors[(c, pos)][0], donors[(c, pos)][1]] for c, pos in used
            ],
        },
    )


@dataclass(frozen=True)
class GreedyWindowConfig:
    window: int = 10
    max_windows: int | None = None
    saliency_baseline: str = "nun"
    metric: DistanceConfig = field(default_factory=DistanceConfig)

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError("window must be >= 1")


def greedy_window_generate(
    model: Classifier,
    dataset: Dataset,
    x: TimeSeries,
    target: int,
    config: GreedyWindowConfig | None = None,
) -> CounterfactualResult:
    """Replace saliency-ranked tiles with neighbor values until the flip.

    The series is tiled into consecutive windows (last one truncated),
    ranked by mean occlusion saliency, and replaced cumulatively from the
    most salient down. Replacing every tile reproduces the neighbor.
    """
    cfg = config or GreedyWindowConfig()
    wrapped = counting(model)
    deg = degenerate_if_target(wrapped, x, target, "greedy_window")
    if deg is not None:
        return deg
    nun = nearest_unlike_neighbor(dataset, x, target, cfg.metric)
    w = min(cfg.window, x.length)
    sal = occlusion_saliency(
        wrapped,
        x,
        w,
        cfg.saliency_baseline,
        baseline_series=nun.series if cfg.saliency_baseline == "nun" else None,
    )
    tiles = [(s, min(s + w, x.length) - 1) for s in range(0, x.length, w)]
    scores = [float(sal[:, lo : hi + 1].mean()) for lo, hi in tiles]
    order = sorted(range(len(tiles)), key=lambda i: (-scores[i], tiles[i][0]))
    limit = len(tiles) if cfg.max_windows is None else min(cfg.max_windows, len(tiles))
    cand = x.values.copy()
    replaced = []
    attempts = 0
    for i in order[:limit]:
        lo, hi = tiles[i]
        cand[:, lo : hi + 1] = nun.series.values[:, lo : hi + 1]
        replaced.append([lo, hi])
        attempts += 1
        if int(np.argmax(wrapped.predict_proba(TimeSeries(cand)))) == target:
            break
    return finalize(
        wrapped, x, cand, target, "greedy_window",
        iterations=attempts,
        info={"windows": replaced, "nun_index": nun.index},
    )
