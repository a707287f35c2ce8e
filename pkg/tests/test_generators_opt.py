import numpy as np
import pytest

from cfx import (
    CapabilityError,
    ConfigError,
    MLPClassifier,
    MLPSpec,
    OptConfig,
    TimeSeries,
    train_knn,
    tscf_generate,
    wachter_generate,
)


def sigmoid_boundary_model():
    """One feature, p(target | x) = sigmoid(2x - 1); boundary at x = 0.5."""
    return MLPClassifier(
        channels=1,
        length=1,
        class_names=("0", "1"),
        spec=MLPSpec(hidden_sizes=()),
        weights=[np.array([[0.0], [2.0]])],
        biases=[np.array([0.0, -1.0])],
    )


def tv(delta):
    return float(np.abs(np.diff(delta, axis=1)).sum())


class TestOptConfig:
    def test_defaults(self):
        cfg = OptConfig()
        assert cfg.lambda_init == 0.1
        assert cfg.lambda_growth == 1.5
        assert cfg.lambda_max == 1e4
        assert cfg.inner_iters == 200
        assert cfg.target_margin == 0.05

    def test_validation(self):
        with pytest.raises(ConfigError):
            OptConfig(metric="linf")
        with pytest.raises(ConfigError):
            OptConfig(lambda_init=0.0)
        with pytest.raises(ConfigError):
            OptConfig(lambda_growth=1.0)
        with pytest.raises(ConfigError):
            OptConfig(lambda_init=10.0, lambda_max=1.0)
        with pytest.raises(ConfigError):
            OptConfig(smoothness_weight=-0.5)


class TestWachter:
    def test_degenerate_input_returned_unchanged(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(1)[0]
        x = small_ds.instances[idx].series
        assert small_mlp.predict(x) == 1
        r = wachter_generate(small_mlp, x, 1, OptConfig(target_margin=0.0))
        assert r.valid
        assert r.counterfactual == x
        assert float(np.linalg.norm(r.delta)) == 0.0

    def test_linear_boundary_closed_form(self):
        model = sigmoid_boundary_model()
        x = TimeSeries([0.0])
        r = wachter_generate(model, x, 1, OptConfig(target_margin=0.0))
        assert r.valid
        cf = float(r.counterfactual.values[0, 0])
        assert cf >= 0.5
        assert abs(abs(cf - 0.0) - 0.5) < 0.1

    def test_valid_on_planted_toy_and_argmax_recheck(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        r = wachter_generate(small_mlp, x, 1)
        assert r.valid
        assert int(np.argmax(small_mlp.predict_proba(r.counterfactual))) == 1
        assert r.achieved == 1

    def test_margin_reflected_in_logits(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        m = 0.3
        r = wachter_generate(small_mlp, x, 1, OptConfig(target_margin=m))
        assert r.valid
        z = small_mlp.logits(r.counterfactual)
        rival = max(k for k in range(2) if k != 1)
        assert z[1] - z[rival] >= m - 1e-9

    def test_returned_candidate_is_distance_minimal_over_trace(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        r = wachter_generate(small_mlp, x, 1)
        assert r.valid
        returned_prox = None
        for entry in r.trace:
            if entry["gap"] <= 0.0:
                if returned_prox is None or entry["proximity"] < returned_prox:
                    returned_prox = entry["proximity"]
        # the chosen candidate matches the best valid iterate observed
        delta_norm = float(np.linalg.norm(r.delta))
        assert returned_prox is not None
        assert delta_norm == pytest.approx(returned_prox, abs=1e-9)

    def test_deterministic(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[1]
        x = small_ds.instances[idx].series
        a = wachter_generate(small_mlp, x, 1, OptConfig(seed=3))
        b = wachter_generate(small_mlp, x, 1, OptConfig(seed=3))
        assert np.array_equal(a.counterfactual.values, b.counterfactual.values)
        assert a.iterations == b.iterations

    def test_loss_nonincreasing_within_stages(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        r = wachter_generate(small_mlp, x, 1)
        ok = bad = 0
        for prev, cur in zip(r.trace, r.trace[1:]):
            if prev["lambda"] != cur["lambda"]:
                continue
            if cur["loss"] <= prev["loss"] + 1e-9:
                ok += 1
            else:
                bad += 1
        assert ok + bad > 0
        assert ok / (ok + bad) >= 0.95

    def test_gradient_free_model_rejected(self, small_ds):
        knn = train_knn(small_ds, k=1)
        x = small_ds.instances[0].series
        with pytest.raises(CapabilityError):
            wachter_generate(knn, x, 1)

    def test_target_out_of_range(self, small_mlp, small_ds):
        x = small_ds.instances[0].series
        with pytest.raises(ConfigError):
            wachter_generate(small_mlp, x, 5)

    def test_iterates_capped(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        r = wachter_generate(small_mlp, x, 1, OptConfig(max_iters=50, inner_iters=10))
        assert r.iterations <= 50


class TestTscf:
    def test_zero_weights_reduce_to_wachter(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        cfg = OptConfig(smoothness_weight=0.0, sparsity_weight=0.0)
        a = wachter_generate(small_mlp, x, 1, cfg)
        b = tscf_generate(small_mlp, x, 1, cfg)
        assert np.array_equal(a.counterfactual.values, b.counterfactual.values)
        assert len(a.trace) == len(b.trace)

    def test_wachter_ignores_penalty_weights(self, small_mlp, small_ds):
        # the plain variant always runs unpenalized, whatever the config says
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        a = wachter_generate(small_mlp, x, 1, OptConfig(smoothness_weight=5.0))
        b = wachter_generate(small_mlp, x, 1, OptConfig())
        assert np.array_equal(a.counterfactual.values, b.counterfactual.values)

    def test_tv_shrinks_as_smoothness_weight_grows(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        tvs = []
        for w in (0.0, 0.5, 2.0):
            r = tscf_generate(small_mlp, x, 1, OptConfig(smoothness_weight=w))
            tvs.append(tv(r.delta))
        assert tvs[1] <= tvs[0] + 1e-9
        assert tvs[2] <= tvs[1] + 1e-9

    def test_valid_result_argmax_contract(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[1]
        x = small_ds.instances[idx].series
        r = tscf_generate(small_mlp, x, 1)
        if r.valid:
            assert int(np.argmax(small_mlp.predict_proba(r.counterfactual))) == 1

    def test_trace_records_components(self, small_mlp, small_ds):
        idx = small_ds.indices_of_class(0)[0]
        x = small_ds.instances[idx].series
        r = tscf_generate(small_mlp, x, 1, OptConfig(max_iters=20, inner_iters=10))
        assert r.trace
        for key in ("loss", "validity", "proximity", "smoothness", "sparsity", "p_target"):
            assert key in r.trace[0]
