"""Multi-objective evolutionary counterfactual search (NSGA-II style).

Objectives, all minimized:

    validity_gap  max(0, 0.5 + margin - p_target)
    proximity     L2(x', x) / sqrt(channels * length)
    sparsity      fraction of entries changed beyond tau
    segments      number of changed contiguous segments

Candidate randomness is drawn from per-candidate streams keyed by
(seed, generation, index), so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import Dataset, TimeSeries
from ..distances import DistanceConfig, changed_segments
from ..errors import ConfigError
from ..models import Classifier
from ..result import CounterfactualResult, CounterfactualSet
from .common import counting, degenerate_if_target, finalize
from .instance import nearest_unlike_neighbor


def dominates(a, b) -> bool:
    """True if a is no worse in every objective and better in at least one."""
    a, b = tuple(a), tuple(b)
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def nondominated_sort(objectives) -> list[list[int]]:
    """Fast non-dominated sorting; fronts hold ascending indices."""
    n = len(objectives)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if dominates(objectives[i], objectives[j]):
                dominated_by[i].append(j)
            elif dominates(objectives[j], objectives[i]):
                counts[i] += 1
        if counts[i] == 0:
            fronts[0].append(i)
    k = 0
    while fronts[k]:
        nxt = []
        for i in fronts[k]:
            for j in dominated_by[i]:
                counts[j] -= 1
                if counts[j] == 0:
                    nxt.append(j)
        k += 1
        fronts.append(sorted(nxt))
    return fronts[:-1]


def crowding_distance(objectives, front) -> np.ndarray:
    """Crowding distances aligned with ``front``; boundaries get inf."""
    size = len(front)
    dist = np.zeros(size)
    if size <= 2:
        dist[:] = np.inf
        return dist
    objs = np.asarray([tuple(objectives[i]) for i in front], dtype=np.float64)
    for m in range(objs.shape[1]):
        order = np.argsort(objs[:, m], kind="stable")
        lo, hi = objs[order[0], m], objs[order[-1], m]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi - lo <= 0.0:
            continue
        for pos in range(1, size - 1):
            gap = objs[order[pos + 1], m] - objs[order[pos - 1], m]
            if not np.isinf(dist[order[pos]]):
                dist[order[pos]] += gap / (hi - lo)
    return dist


@dataclass(frozen=True)
class EvoConfig:
    population_size: int = 100
    generations: int = 100
    crossover_prob: float = 0.9
    gaussian_point_prob: float = 0.05
    gaussian_sigma: float = 0.1
    segment_swap_prob: float = 0.3
    segment_len_range: tuple[float, float] = (0.05, 0.3)
    tournament_size: int = 2
    target_margin: float = 0.0
    tau: float = 1e-6
    max_model_calls: int = 200_000
    metric: DistanceConfig = field(default_factory=DistanceConfig)
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4 or self.generations < 0:
            raise ConfigError("population_size >= 4 and generations >= 0 required")
        for name in ("crossover_prob", "gaussian_point_prob", "segment_swap_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        lo, hi = self.segment_len_range
        if not 0.0 < lo <= hi <= 1.0:
            raise ConfigError("segment_len_range must satisfy 0 < lo <= hi <= 1")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be >= 1")
        if self.max_model_calls < 1:
            raise ConfigError("max_model_calls must be >= 1")


@dataclass
class _Candidate:
    values: np.ndarray
    objectives: tuple = ()
    p_target: float = 0.0
    argmax_valid: bool = False


def _stream(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(seed & 0xFFFFFFFF, generation, index))
    )


def _segment_bounds(rng, length, frac_range):
    lo = max(1, int(round(frac_range[0] * length)))
    hi = max(lo, int(round(frac_range[1] * length)))
    seg = int(rng.integers(lo, hi + 1))
    start = int(rng.integers(0, length - seg + 1))
    return start, seg


def evolve_generate(
    model: Classifier,
    dataset: Dataset,
    x: TimeSeries,
    target: int,
    config: EvoConfig | None = None,
) -> CounterfactualSet:
    """NSGA-II search seeded with x, the NUN, and NUN-segment transplants.

    Returns all valid members of the final first front (plus an archived
    best-valid candidate if it is still non-dominated), sorted by
    proximity. With no valid member the least-invalid candidate comes
    back alone, flagged invalid.
    """
    cfg = config or EvoConfig()
    wrapped = counting(model)
    deg = degenerate_if_target(wrapped, x, target, "evo", seed=cfg.seed)
    if deg is not None:
        return CounterfactualSet((deg,))
    nun = nearest_unlike_neighbor(dataset, x, target, cfg.metric)
    c, t = x.channels, x.length
    scale = float(np.sqrt(c * t))
    budget_exhausted = False

    def evaluate(cand: _Candidate) -> bool:
        nonlocal budget_exhausted
        if wrapped.calls >= cfg.max_model_calls:
            budget_exhausted = True
            return False
        p = wrapped.predict_proba(TimeSeries(cand.values))
        pt = float(p[target])
        delta = cand.values - x.values
        mask = changed_segments(TimeSeries(cand.values), x, cfg.tau)
        cand.objectives = (
            max(0.0, 0.5 + cfg.target_margin - pt),
            float(np.linalg.norm(delta)) / scale,
            mask.changed_fraction,
            float(mask.segment_count),
        )
        cand.p_target = pt
        cand.argmax_valid = int(np.argmax(p)) == target
        return True

    def transplant(rng) -> np.ndarray:
        vals = x.values.copy()
        start, seg = _segment_bounds(rng, t, cfg.segment_len_range)
        ch = int(rng.integers(0, c)) if c > 1 else 0
        vals[ch, start : start + seg] = nun.series.values[ch, start : start + seg]
        return vals

    population: list[_Candidate] = [_Candidate(x.values.copy()), _Candidate(nun.series.values.copy())]
    for i in range(2, cfg.population_size):
        population.append(_Candidate(transplant(_stream(cfg.seed, 0, i))))
    population = [cand for cand in population if evaluate(cand)]

    archive: _Candidate | None = None

    def consider_archive(cand: _Candidate):
        nonlocal archive
        if cand.argmax_valid and (
            archive is None or cand.objectives[1] < archive.objectives[1]
        ):
            archive = cand

    for cand in population:
        consider_archive(cand)

    gap_curve: list[float] = []
    if population:
        gap_curve.append(min(cand.objectives[0] for cand in population))
    generations_run = 0
    for g in range(1, cfg.generations + 1):
        if budget_exhausted or not population:
            break
        objs = [cand.objectives for cand in population]
        fronts = nondominated_sort(objs)
        rank = np.empty(len(population), dtype=np.int64)
        crowd = np.empty(len(population))
        for fi, front in enumerate(fronts):
            cd = crowding_distance(objs, front)
            for pos, idx in enumerate(front):
                rank[idx] = fi
                crowd[idx] = cd[pos]

        def tournament(rng) -> int:
            picks = rng.integers(0, len(population), size=cfg.tournament_size)
            best = int(picks[0])
            for p in picks[1:]:
                p = int(p)
                if (rank[p], -crowd[p], p) < (rank[best], -crowd[best], best):
                    best = p
            return best

        offspring: list[_Candidate] = []
        for i in range(cfg.population_size):
            rng = _stream(cfg.seed, g, i)
            pa = population[tournament(rng)].values
            pb = population[tournament(rng)].values
            if rng.random() < cfg.crossover_prob and t > 1:
                cut = int(rng.integers(1, t))
                child = np.concatenate([pa[:, :cut], pb[:, cut:]], axis=1)
            else:
                child = pa.copy()
            noise = rng.normal(0.0, cfg.gaussian_sigma, size=child.shape)
            mask = rng.random(child.shape) < cfg.gaussian_point_prob
            child = child + noise * mask
            if rng.random() < cfg.segment_swap_prob:
                start, seg = _segment_bounds(rng, t, cfg.segment_len_range)
                ch = int(rng.integers(0, c)) if c > 1 else 0
                child[ch, start : start + seg] = nun.series.values[ch, start : start + seg]
            offspring.append(_Candidate(child))

        evaluated = []
        for cand in offspring:
            if evaluate(cand):
                evaluated.append(cand)
                consider_archive(cand)
            else:
                break
        combined = population + evaluated
        objs = [cand.objectives for cand in combined]
        fronts = nondominated_sort(objs)
        next_pop: list[_Candidate] = []
        for front in fronts:
            if len(next_pop) + len(front) <= cfg.population_size:
                next_pop.extend(combined[i] for i in front)
            else:
                cd = crowding_distance(objs, front)
                order = sorted(
                    range(len(front)), key=lambda p: (-cd[p], front[p])
                )
                room = cfg.population_size - len(next_pop)
                next_pop.extend(combined[front[p]] for p in order[:room])
                break
        # truncation must not lose the best validity gap seen in combined
        if next_pop:
            best_gap = min(cand.objectives[0] for cand in combined)
            if all(cand.objectives[0] > best_gap for cand in next_pop):
                keeper = min(combined, key=lambda cand: (cand.objectives[0], cand.objectives[1]))
                next_pop[-1] = keeper
        population = next_pop
        if population:
            gap_curve.append(min(cand.objectives[0] for cand in population))
        generations_run = g

    # final front, with the archive merged back in if still non-dominated
    pool = list(population)
    if archive is not None and all(archive is not cand for cand in pool):
        pool.append(archive)
    objs = [cand.objectives for cand in pool]
    front0 = nondominated_sort(objs)[0] if pool else []
    members = [pool[i] for i in front0]
    valid = [cand for cand in members if cand.argmax_valid]
    info = {
        "budget_exhausted": budget_exhausted,
        "nun_index": nun.index,
        "front_size": len(members),
        "gap_curve": [float(v) for v in gap_curve],
    }
    if not valid:
        fallback = min(pool, key=lambda cand: cand.objectives) if pool else _Candidate(x.values.copy())
        res = finalize(
            wrapped, x, fallback.values, target, "evo",
            iterations=generations_run, seed=cfg.seed, info=info,
        )
        return CounterfactualSet((res,))
    valid.sort(key=lambda cand: cand.objectives[1])
    results = tuple(
        finalize(
            wrapped, x, cand.values, target, "evo",
            iterations=generations_run, seed=cfg.seed,
            info={**info, "objectives": list(cand.objectives)},
        )
        for cand in valid
    )
    return CounterfactualSet(results)
