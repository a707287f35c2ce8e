"""Result containers shared by every generator family."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import TimeSeries
from .errors import ShapeError


@dataclass(frozen=True)
class CounterfactualResult:
    """One counterfactual attempt.

    ``valid`` always means: the model's argmax on ``counterfactual`` equals
    ``target``, re-checked at construction time, never trusted from an
    optimizer's internal state. ``info`` carries generator-specific detail
    (replaced windows, substituted channels, budget flags, model calls).
    """

    original: TimeSeries
    counterfactual: TimeSeries
    target: int
    achieved: int
    valid: bool
    generator_id: str
    iterations: int = 0
    model_calls: int = 0
    seed: int | None = None
    trace: tuple | None = field(default=None, compare=False)
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.original.values.shape != self.counterfactual.values.shape:
            raise ShapeError("counterfactual shape differs from original")

    @property
    def delta(self) -> np.ndarray:
        return self.counterfactual.values - self.original.values


@dataclass(frozen=True)
class CounterfactualSet:
    """Several counterfactuals for one query, sorted by L2 proximity."""

    results: tuple[CounterfactualResult, ...]

    def __post_init__(self):
        if not self.results:
            raise ShapeError("empty counterfactual set")
        first = self.results[0]
        for r in self.results:
            if r.original != first.original or r.target != first.target:
                raise ShapeError("set members must share original and target")
        ordered = tuple(
            sorted(
                self.results,
                key=lambda r: float(np.linalg.norm(r.delta)),
            )
        )
        object.__setattr__(self, "results", ordered)

    def __len__(self) -> int:
        return len(self.results)

    def __iter__(self):
        return iter(self.results)

    @property
    def best(self) -> CounterfactualResult:
        """Closest member, preferring valid ones."""
        for r in self.results:
            if r.valid:
                return r
        return self.results[0]
