"""Helpers shared by the generator families."""

from __future__ import annotations

import numpy as np

from ..data import TimeSeries
from ..errors import CapabilityError
from ..models import Classifier, CountingClassifier, GradientClassifier
from ..result import CounterfactualResult


def counting(model: Classifier) -> CountingClassifier:
    if isinstance(model, CountingClassifier):
        return model
    return CountingClassifier(model)


def require_gradients(model: Classifier):
    inner = model.model if isinstance(model, CountingClassifier) else model
    if not isinstance(inner, GradientClassifier):
        raise CapabilityError(
            f"{type(inner).__name__} does not expose input gradients"
        )


def finalize(
    model: CountingClassifier,
    x: TimeSeries,
    values: np.ndarray,
    target: int,
    generator_id: str,
    iterations: int = 0,
    seed: int | None = None,
    trace=None,
    info: dict | None = None,
) -> CounterfactualResult:
    """Re-check validity by argmax and assemble the result record."""
    cf = TimeSeries(values)
    achieved = int(np.argmax(model.predict_proba(cf)))
    return CounterfactualResult(
        original=x,
        counterfactual=cf,
        target=target,
        achieved=achieved,
        valid=achieved == target,
        generator_id=generator_id,
        iterations=iterations,
        model_calls=model.calls,
        seed=seed,
        trace=tuple(trace) if trace is not None else None,
        info=info or {},
    )


def degenerate_if_target(
    model: CountingClassifier,
    x: TimeSeries,
    target: int,
    generator_id: str,
    seed: int | None = None,
) -> CounterfactualResult | None:
    """Shared fast path: x already classified as target is its own answer."""
    achieved = int(np.argmax(model.predict_proba(x)))
    if achieved != target:
        return None
    return CounterfactualResult(
        original=x,
        counterfactual=x,
        target=target,
        achieved=achieved,
        valid=True,
        generator_id=generator_id,
        iterations=0,
        model_calls=model.calls,
        seed=seed,
        info={"degenerate": True},
    )
