"""Gradient-descent counterfactuals: plain hinge loss and its smooth variant.

Both run the same staged loop: minimize

    max(0, max_{k != target} z_k - z_target + margin)  +  d(x, x') / lambda
        (+ smoothness_weight * TV(delta) + sparsity_weight * L1(delta))

with lambda growing multiplicatively per stage, so proximity dominates
early and validity pressure takes over late. The best margin-valid iterate
by proximity across all stages is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..data import TimeSeries
from ..errors import ConfigError
from ..models import Classifier
from ..result import CounterfactualResult
from .common import counting, finalize, require_gradients


@dataclass(frozen=True)
class OptConfig:
    """Settings for the staged descent loop.

    metric: proximity term, "l1" or "l2" (unsquared norms).
    target_margin: required logit gap over the runner-up class; 0 stops
        exactly at the decision boundary.
    """

    metric: str = "l2"
    lambda_init: float = 0.1
    lambda_growth: float = 1.5
    lambda_max: float = 1e4
    learning_rate: float = 0.05
    max_iters: int = 2000
    inner_iters: int = 200
    target_margin: float = 0.05
    smoothness_weight: float = 0.0
    sparsity_weight: float = 0.0
    max_backtracks: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.metric not in ("l1", "l2"):
            raise ConfigError("proximity metric must be l1 or l2")
        if self.lambda_init <= 0 or self.lambda_max < self.lambda_init:
            raise ConfigError("need 0 < lambda_init <= lambda_max")
        if self.lambda_growth <= 1.0:
            raise ConfigError("lambda_growth must be > 1")
        if self.learning_rate <= 0 or self.max_iters < 1 or self.inner_iters < 1:
            raise ConfigError("learning_rate, max_iters, inner_iters must be positive")
        if self.target_margin < 0 or self.smoothness_weight < 0 or self.sparsity_weight < 0:
            raise ConfigError("margin and penalty weights must be >= 0")


def _prox(delta: np.ndarray, metric: str) -> float:
    if metric == "l1":
        return float(np.abs(delta).sum())
    return float(np.sqrt((delta * delta).sum()))


def _prox_grad(delta: np.ndarray, metric: str) -> np.ndarray:
    if metric == "l1":
        return np.sign(delta)
    norm = np.sqrt((delta * delta).sum())
    if norm < 1e-12:
        return np.zeros_like(delta)
    return delta / norm


def _tv(delta: np.ndarray) -> float:
    return float(np.abs(np.diff(delta, axis=1)).sum())


def _tv_grad(delta: np.ndarray) -> np.ndarray:
    s = np.sign(np.diff(delta, axis=1))
    g = np.zeros_like(delta)
    g[:, :-1] -= s
    g[:, 1:] += s
    return g


def _descend(
    model: Classifier,
    x: TimeSeries,
    target: int,
    cfg: OptConfig,
    generator_id: str,
) -> CounterfactualResult:
    require_gradients(model)
    wrapped = counting(model)
    if not 0 <= target < wrapped.num_classes:
        raise ConfigError(f"target class {target} out of range")
    x_vals = x.values
    m = cfg.target_margin
    others = [k for k in range(wrapped.num_classes) if k != target]
    if not others:
        raise ConfigError("model has a single class, nothing to flip to")

    def evaluate(v: np.ndarray):
        z = wrapped.logits(TimeSeries(v))
        rival = others[int(np.argmax(z[others]))]
        gap = float(z[rival] - z[target] + m)
        delta = v - x_vals
        shifted = z - z.max()
        p_target = float(np.exp(shifted[target]) / np.exp(shifted).sum())
        return {
            "gap": gap,
            "validity": max(0.0, gap),
            "proximity": _prox(delta, cfg.metric),
            "smoothness": _tv(delta),
            "sparsity": float(np.abs(delta).sum()),
            "p_target": p_target,
            "rival": rival,
        }

    def compose(comp: dict, lam: float) -> float:
        return (
            comp["validity"]
            + comp["proximity"] / lam
            + cfg.smoothness_weight * comp["smoothness"]
            + cfg.sparsity_weight * comp["sparsity"]
        )

    comp = evaluate(x_vals)
    # degenerate input: already target with the required margin
    if comp["gap"] <= 0.0 and int(np.argmax(wrapped.predict_proba(x))) == target:
        return finalize(
            wrapped, x, x_vals, target, generator_id, iterations=0,
            seed=cfg.seed, trace=(), info={"degenerate": True, "margin_valid": True},
        )

    v = x_vals.copy()
    lam = cfg.lambda_init
    best: np.ndarray | None = None
    best_d = np.inf
    fallback, fallback_gap = v.copy(), comp["gap"]
    trace = []
    it = 0
    while it < cfg.max_iters and lam <= cfg.lambda_max:
        for _ in range(cfg.inner_iters):
            if it >= cfg.max_iters:
                break
            delta = v - x_vals
            grad = _prox_grad(delta, cfg.metric) / lam
            if cfg.smoothness_weight > 0.0:
                grad = grad + cfg.smoothness_weight * _tv_grad(delta)
            if cfg.sparsity_weight > 0.0:
                grad = grad + cfg.sparsity_weight * np.sign(delta)
            if comp["validity"] > 0.0:
                vt = TimeSeries(v)
                grad = grad + wrapped.input_gradient(vt, comp["rival"]) - wrapped.input_gradient(vt, target)
            cur_loss = compose(comp, lam)
            step = cfg.learning_rate
            accepted = False
            for _bt in range(cfg.max_backtracks + 1):
                v_new = v - step * grad
                comp_new = evaluate(v_new)
                if compose(comp_new, lam) <= cur_loss:
                    accepted = True
                    break
                step /= 2.0
            if not accepted:
                # no halving helps: stage converged at this resolution
                break
            v, comp = v_new, comp_new
            it += 1
            trace.append(
                {
                    "iter": it,
                    "lambda": lam,
                    "loss": compose(comp, lam),
                    "gap": comp["gap"],
                    "validity": comp["validity"],
                    "proximity": comp["proximity"],
                    "smoothness": comp["smoothness"],
                    "sparsity": comp["sparsity"],
                    "p_target": comp["p_target"],
                }
            )
            if comp["gap"] <= 0.0 and comp["proximity"] < best_d:
                best, best_d = v.copy(), comp["proximity"]
            if comp["gap"] < fallback_gap:
                fallback, fallback_gap = v.copy(), comp["gap"]
        lam *= cfg.lambda_growth

    chosen = best if best is not None else fallback
    return finalize(
        wrapped, x, chosen, target, generator_id,
        iterations=it, seed=cfg.seed, trace=trace,
        info={"margin_valid": best is not None, "lambda_final": lam},
    )


def wachter_generate(
    model: Classifier, x: TimeSeries, target: int, config: OptConfig | None = None
) -> CounterfactualResult:
    """Hinge-on-logits descent with a growing-lambda schedule."""
    cfg = config or OptConfig()
    if cfg.smoothness_weight != 0.0 or cfg.sparsity_weight != 0.0:
        cfg = replace(cfg, smoothness_weight=0.0, sparsity_weight=0.0)
    return _descend(model, x, target, cfg, "wachter")


def tscf_generate(
    model: Classifier, x: TimeSeries, target: int, config: OptConfig | None = None
) -> CounterfactualResult:
    """Same loop plus total-variation smoothness and L1 sparsity on delta.

    With both weights at zero this reduces exactly to the plain variant.
    """
    cfg = config or OptConfig(smoothness_weight=0.5)
    return _descend(model, x, target, cfg, "tscf")
