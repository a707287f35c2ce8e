"""Distance kernels: Minkowski, change counting, DTW, discrete Fréchet.

All kernels accept :class:`~cfx.data.TimeSeries` and work channel-major.
DTW and Fréchet allow differing lengths; everything else requires equal
shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import TimeSeries
from .errors import BandError, ConfigError, ShapeError

METRICS = ("l1", "l2", "linf", "dtw", "frechet")
MODES = ("dependent", "independent")


@dataclass(frozen=True)
class DistanceConfig:
    """Knobs shared by the distance kernels.

    band: Sakoe-Chiba half-width for DTW, None for unbanded.
    tau: absolute change threshold for the L0/segment kernels.
    mode: multivariate DTW treatment, "dependent" (one path, L2 over the
        channel vector per cell) or "independent" (sum of per-channel DTW).
    dtw_squared: use squared local cost instead of raw absolute cost.
    """

    metric: str = "l2"
    band: int | None = None
    tau: float = 1e-6
    mode: str = "dependent"
    dtw_squared: bool = False

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}, expected one of {METRICS}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.tau < 0:
            raise ConfigError("tau must be >= 0")
        if self.band is not None and self.band < 0:
            raise ConfigError("band must be >= 0 or None")


@dataclass(frozen=True)
class ChangeMask:
    """Boolean change mask plus its contiguous per-channel segments.

    Segments are (channel, start, end) with inclusive ends, sorted by
    (channel, start), non-overlapping within a channel.
    """

    mask: np.ndarray
    segments: tuple[tuple[int, int, int], ...] = field(default=())

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    @property
    def changed_count(self) -> int:
        return int(self.mask.sum())

    @property
    def changed_fraction(self) -> float:
        return float(self.mask.sum() / self.mask.size)

    @property
    def mean_segment_length(self) -> float:
        if not self.segments:
            return 0.0
        return float(np.mean([e - s + 1 for _, s, e in self.segments]))


def _same_shape(a: TimeSeries, b: TimeSeries):
    if a.values.shape != b.values.shape:
        raise ShapeError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")


def minkowski(a: TimeSeries, b: TimeSeries, p) -> float:
    """L1, L2, or L-infinity distance over all channel/time entries."""
    _same_shape(a, b)
    diff = (a.values - b.values).ravel()
    if p == 1:
        return float(np.abs(diff).sum())
    if p == 2:
        return float(np.sqrt((diff * diff).sum()))
    if p == math.inf:
        return float(np.abs(diff).max())
    raise ConfigError(f"p must be 1, 2, or inf, got {p!r}")


def l0_changed(a: TimeSeries, b: TimeSeries, tau: float = 1e-6) -> int:
    """Number of entries differing by more than tau."""
    _same_shape(a, b)
    return int((np.abs(a.values - b.values) > tau).sum())


def changed_fraction(a: TimeSeries, b: TimeSeries, tau: float = 1e-6) -> float:
    _same_shape(a, b)
    return l0_changed(a, b, tau) / a.values.size


def changed_segments(a: TimeSeries, b: TimeSeries, tau: float = 1e-6) -> ChangeMask:
    """Change mask with contiguous runs extracted per channel."""
    _same_shape(a, b)
    mask = np.abs(a.values - b.values) > tau
    segments = []
    for c in range(mask.shape[0]):
        row = mask[c]
        # run boundaries via sign flips of the padded mask
        edges = np.flatnonzero(np.diff(np.concatenate(([0], row.view(np.int8), [0]))))
        for s, e in zip(edges[::2], edges[1::2]):
            segments.append((c, int(s), int(e - 1)))
    return ChangeMask(mask=mask, segments=tuple(segments))


def _dtw_1d_cost(a: np.ndarray, b: np.ndarray, squared: bool) -> np.ndarray:
    diff = np.abs(a[:, None] - b[None, :])
    return diff * diff if squared else diff


def _dtw_dependent_cost(a: np.ndarray, b: np.ndarray, squared: bool) -> np.ndarray:
    # a: (c, n), b: (c, m); cell cost is the L2 norm over channels
    diff = a[:, :, None] - b[:, None, :]
    cost = np.sqrt((diff * diff).sum(axis=0))
    return cost * cost if squared else cost


def _dtw_dp(cost: np.ndarray, band: int | None) -> float:
    n, m = cost.shape
    if band is not None and abs(n - m) > band:
        raise BandError(f"band {band} cannot align lengths {n} and {m}")
    inf = math.inf
    prev = np.full(m, inf)
    for i in range(n):
        cur = np.full(m, inf)
        lo = 0 if band is None else max(0, i - band)
        hi = m if band is None else min(m, i + band + 1)
        for j in range(lo, hi):
            if i == 0 and j == 0:
                best = 0.0
            else:
                best = inf
                if i > 0:
                    best = min(best, prev[j])
                if j > 0:
                    best = min(best, cur[j - 1])
                if i > 0 and j > 0:
                    best = min(best, prev[j - 1])
            cur[j] = cost[i, j] + best
        prev = cur
    if not math.isfinite(prev[m - 1]):
        raise BandError(f"band {band} admits no path for lengths {n} and {m}")
    return float(prev[m - 1])


def dtw(a: TimeSeries, b: TimeSeries, config: DistanceConfig | None = None) -> float:
    """Dynamic time warping distance.

    Dependent mode warps one path over the channel-vector cost; independent
    mode sums per-channel univariate DTW. Local cost is the raw difference
    norm unless ``config.dtw_squared`` is set. ``config.band`` restricts
    the path to |i - j| <= band and raises BandError when no path fits.
    """
    cfg = config or DistanceConfig()
    if a.channels != b.channels:
        raise ShapeError(f"channel mismatch: {a.channels} vs {b.channels}")
    if cfg.mode == "independent" and a.channels > 1:
        return float(
            sum(
                _dtw_dp(_dtw_1d_cost(a.values[c], b.values[c], cfg.dtw_squared), cfg.band)
                for c in range(a.channels)
            )
        )
    cost = _dtw_dependent_cost(a.values, b.values, cfg.dtw_squared)
    return _dtw_dp(cost, cfg.band)


def frechet(a: TimeSeries, b: TimeSeries) -> float:
    """Discrete Fréchet distance with L2 cost over channels per cell."""
    if a.channels != b.channels:
        raise ShapeError(f"channel mismatch: {a.channels} vs {b.channels}")
    diff = a.values[:, :, None] - b.values[:, None, :]
    cost = np.sqrt((diff * diff).sum(axis=0))
    n, m = cost.shape
    d = np.empty((n, m))
    d[0, 0] = cost[0, 0]
    for j in range(1, m):
        d[0, j] = max(cost[0, j], d[0, j - 1])
    for i in range(1, n):
        d[i, 0] = max(cost[i, 0], d[i - 1, 0])
        for j in range(1, m):
            reach = min(d[i - 1, j], d[i, j - 1], d[i - 1, j - 1])
            d[i, j] = max(cost[i, j], reach)
    return float(d[n - 1, m - 1])


def distance(a: TimeSeries, b: TimeSeries, config: DistanceConfig) -> float:
    """Dispatch on ``config.metric``."""
    if config.metric == "l1":
        return minkowski(a, b, 1)
    if config.metric == "l2":
        return minkowski(a, b, 2)
    if config.metric == "linf":
        return minkowski(a, b, math.inf)
    if config.metric == "dtw":
        return dtw(a, b, config)
    return frechet(a, b)
