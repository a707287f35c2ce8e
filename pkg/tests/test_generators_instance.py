import numpy as np
import pytest

from cfx import (
    Classifier,
    ComteConfig,
    ConfigError,
    Dataset,
    DistanceConfig,
    LabeledInstance,
    MLPClassifier,
    MLPSpec,
    NativeGuideConfig,
    NoNeighborError,
    TimeSeries,
    comte_generate,
    distance,
    native_guide_generate,
    nearest_unlike_neighbor,
    occlusion_saliency,
)
from oracles import minimal_subset_oracle, minimal_window_oracle


def make_ds(rows, labels, class_names=("a", "b")):
    return Dataset(
        tuple(LabeledInstance(TimeSeries(r), int(l)) for r, l in zip(rows, labels)),
        class_names,
    )


class BandMinModel(Classifier):
    """Class 1 iff every value of channel 0 inside the band exceeds theta."""

    def __init__(self, length, band, theta=0.5, channels=1):
        self.channels = channels
        self.length = length
        self.class_names = ("neg", "pos")
        self.band = band
        self.theta = theta

    def predict_proba(self, x):
        self._check_input(x)
        lo, hi = self.band
        hit = float(x.values[0, lo : hi + 1].min()) > self.theta
        return np.array([0.1, 0.9]) if hit else np.array([0.9, 0.1])


class ChannelMeanModel(Classifier):
    """Class 1 iff the mean of every required channel exceeds theta."""

    def __init__(self, channels, length, required, theta=0.5):
        self.channels = channels
        self.length = length
        self.class_names = ("neg", "pos")
        self.required = frozenset(required)
        self.theta = theta

    def predict_proba(self, x):
        self._check_input(x)
        hit = all(float(x.values[c].mean()) > self.theta for c in self.required)
        return np.array([0.1, 0.9]) if hit else np.array([0.9, 0.1])


class StuckModel(Classifier):
    def __init__(self, channels, length):
        self.channels = channels
        self.length = length
        self.class_names = ("neg", "pos")

    def predict_proba(self, x):
        return np.array([1.0, 0.0])


class TestNearestUnlikeNeighbor:
    def test_self_match_distance_zero(self):
        ds = make_ds([[0.0, 1.0], [5.0, 5.0]], [0, 1])
        r = nearest_unlike_neighbor(ds, ds.instances[0].series, 0)
        assert r.index == 0
        assert r.distance == 0.0
        assert r.series == ds.instances[0].series

    def test_closer_of_two_targets(self):
        ds = make_ds([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [0, 1, 1])
        r = nearest_unlike_neighbor(ds, ds.instances[0].series, 1)
        assert r.index == 1
        assert r.distance == pytest.approx(1.0)

    def test_tie_keeps_lower_index(self):
        ds = make_ds([[0.0], [3.0], [3.0]], [0, 1, 1])
        r = nearest_unlike_neighbor(ds, ds.instances[0].series, 1)
        assert r.index == 1

    def test_full_scan_oracle_agreement(self, rng):
        rows = rng.normal(size=(50, 6))
        labels = rng.integers(0, 2, size=50)
        labels[:2] = [0, 1]  # both classes present
        ds = make_ds(rows, labels)
        q = TimeSeries(rng.normal(size=6))
        for target in (0, 1):
            r = nearest_unlike_neighbor(ds, q, target)
            cand = ds.indices_of_class(target)
            dists = [distance(ds.instances[i].series, q, DistanceConfig()) for i in cand]
            assert r.index == cand[int(np.argmin(dists))]
            assert ds.instances[r.index].label == target

    def test_missing_class_raises(self):
        ds = make_ds([[0.0], [1.0]], [0, 0])
        with pytest.raises(NoNeighborError):
            nearest_unlike_neighbor(ds, ds.instances[0].series, 1)

    def test_dtw_metric_selectable(self):
        # under DTW a shifted copy is nearer than under L2
        ds = make_ds([[0, 0, 1, 0, 0], [0, 1, 0, 0, 0], [0.4, 0.4, 0.4, 0.4, 0.4]], [0, 1, 1])
        q = ds.instances[0].series
        l2 = nearest_unlike_neighbor(ds, q, 1, DistanceConfig())
        dtw = nearest_unlike_neighbor(ds, q, 1, DistanceConfig(metric="dtw"))
        assert l2.index == 2
        assert dtw.index == 1


class TestOcclusionSaliency:
    def test_window_bounds(self, small_mlp, small_ds):
        x = small_ds.instances[0].series
        with pytest.raises(ConfigError):
            occlusion_saliency(small_mlp, x, x.length + 1)
        with pytest.raises(ConfigError):
            occlusion_saliency(small_mlp, x, 0)

    def test_constant_model_all_zero(self):
        model = StuckModel(1, 12)
        x = TimeSeries(np.arange(12.0))
        sal = occlusion_saliency(model, x, 3)
        assert sal.shape == x.values.shape
        assert np.all(sal == 0.0)

    def test_first_step_reader_concentrates_at_zero(self):
        t = 10
        w = np.zeros((2, 1 * t))
        w[1, 0] = 4.0
        model = MLPClassifier(
            channels=1, length=t, class_names=("a", "b"),
            spec=MLPSpec(hidden_sizes=()),
            weights=[w], biases=[np.zeros(2)],
        )
        x = TimeSeries(np.ones(t))
        sal = occlusion_saliency(model, x, 3, baseline="zero")
        row = sal[0]
        assert int(np.argmax(row)) == 0
        assert row[0] == 1.0
        assert np.all(row[3:] == 0.0)  # windows past t=0 never touch the read cell

    def test_range_and_shape(self, small_mlp, small_ds):
        x = small_ds.instances[0].series
        sal = occlusion_saliency(small_mlp, x, 5)
        assert sal.shape == x.values.shape
        assert sal.min() >= 0.0
        assert sal.max() <= 1.0

    def test_nun_baseline_checks(self, small_mlp, small_ds):
        x = small_ds.instances[0].series
        with pytest.raises(ConfigError):
            occlusion_saliency(small_mlp, x, 3, baseline="nun")
        with pytest.raises(ConfigError):
            occlusion_saliency(small_mlp, x, 3, baseline="nun",
                              baseline_series=TimeSeries(np.zeros((2, x.length))))
        with pytest.raises(ConfigError):
            occlusion_saliency(small_mlp, x, 3, baseline="median")


def band_toy(t, lo, hi, theta=0.5):
    """Query of zeros plus a donor carrying a plateau over [lo, hi]."""
    donor = np.zeros(t)
    donor[lo : hi + 1] = 1.0
    x = np.zeros(t)
    ds = make_ds([x, donor], [0, 1])
    model = BandMinModel(t, (lo, hi), theta)
    return model, ds, ds.instances[0].series


class TestNativeGuide:
    def test_degenerate_input(self):
        model, ds, x = band_toy(24, 8, 12)
        donor = ds.instances[1].series
        r = native_guide_generate(model, ds, donor, 1)
        assert r.valid
        assert r.counterfactual == donor
        assert r.iterations == 0

    def test_recovers_band_exactly(self):
        # saliency window must span the band for occlusion to register a drop;
        # odd band lengths keep the symmetric expansion aligned with it
        for t, lo, hi in [(24, 8, 12), (40, 15, 21), (64, 30, 42), (33, 6, 6)]:
            model, ds, x = band_toy(t, lo, hi)
            cfg = NativeGuideConfig(saliency_window=max(5, hi - lo + 1))
            r = native_guide_generate(model, ds, x, 1, cfg)
            assert r.valid
            assert r.info["window"] == [lo, hi]
            mask = r.counterfactual.values != x.values
            assert set(np.nonzero(mask[0])[0]) == set(range(lo, hi + 1))

    def test_matches_exhaustive_window_oracle(self):
        for t, lo, hi in [(24, 8, 12), (48, 20, 28), (64, 30, 42)]:
            model, ds, x = band_toy(t, lo, hi)
            donor = ds.instances[1].series
            cfg = NativeGuideConfig(saliency_window=max(5, hi - lo + 1))
            r = native_guide_generate(model, ds, x, 1, cfg)
            best = minimal_window_oracle(
                lambda v: int(np.argmax(model.predict_proba(TimeSeries(v)))),
                x.values, donor.values, 1,
            )
            assert best is not None
            min_len, spans = best
            got_lo, got_hi = r.info["window"]
            assert got_hi - got_lo + 1 == min_len
            assert (got_lo, got_hi) in spans

    def test_unflippable_model_returns_invalid_nun(self):
        t = 16
        ds = make_ds([np.zeros(t), np.ones(t)], [0, 1])
        model = StuckModel(1, t)
        r = native_guide_generate(model, ds, ds.instances[0].series, 1)
        assert not r.valid
        assert r.counterfactual == ds.instances[1].series  # full replacement reached

    def test_transplant_values_come_from_donor(self):
        model, ds, x = band_toy(40, 15, 21)
        donor = ds.instances[1].series
        r = native_guide_generate(model, ds, x, 1, NativeGuideConfig(saliency_window=7))
        lo, hi = r.info["window"]
        assert np.array_equal(
            r.counterfactual.values[:, lo : hi + 1], donor.values[:, lo : hi + 1]
        )
        outside = np.ones(40, dtype=bool)
        outside[lo : hi + 1] = False
        assert np.array_equal(r.counterfactual.values[:, outside], x.values[:, outside])

    def test_max_expand_caps_window(self):
        model, ds, x = band_toy(40, 15, 21)
        r = native_guide_generate(
            model, ds, x, 1, NativeGuideConfig(saliency_window=7, max_expand=1)
        )
        assert not r.valid  # band needs radius 3 from its center
        lo, hi = r.info["window"]
        assert hi - lo <= 2

    def test_generator_id_and_nun_index(self):
        model, ds, x = band_toy(24, 8, 12)
        r = native_guide_generate(model, ds, x, 1)
        assert r.generator_id == "native_guide"
        assert r.info["nun_index"] == 1


def channel_toy(c, t, required, theta=0.5):
    x = np.zeros((c, t))
    donor = np.zeros((c, t))
    donor[list(required), :] = 1.0
    ds = make_ds([x, donor], [0, 1])
    model = ChannelMeanModel(c, t, required, theta)
    return model, ds, ds.instances[0].series


class TestComte:
    def test_single_channel_equals_full_nun(self):
        model, ds, x = channel_toy(1, 8, {0})
        r = comte_generate(model, ds, x, 1)
        assert r.valid
        assert r.counterfactual == ds.instances[1].series
        assert r.info["channels"] == [0]

    def test_signal_channel_found(self):
        model, ds, x = channel_toy(3, 8, {2})
        r = comte_generate(model, ds, x, 1)
        assert r.valid
        assert r.info["channels"] == [2]

    def test_matches_subset_oracle(self, rng):
        for c in (2, 3, 4, 5, 6):
            size = int(rng.integers(1, c + 1))
            required = set(map(int, rng.choice(c, size=size, replace=False)))
            model, ds, x = channel_toy(c, 6, required)
            donor = ds.instances[1].series
            r = comte_generate(model, ds, x, 1)
            oracle = minimal_subset_oracle(
                lambda v: int(np.argmax(model.predict_proba(TimeSeries(v)))),
                x.values, donor.values, 1,
            )
            assert oracle is not None
            assert frozenset(r.info["channels"]) == oracle
            assert r.valid

    def test_substituting_all_channels_equals_nun(self):
        model, ds, x = channel_toy(3, 8, {0, 1, 2})
        r = comte_generate(model, ds, x, 1)
        assert r.valid
        assert r.counterfactual == ds.instances[1].series
        assert r.info["channels"] == [0, 1, 2]

    def test_no_valid_subset_flags_invalid(self):
        c, t = 3, 8
        ds = make_ds([np.zeros((c, t)), np.ones((c, t))], [0, 1])
        model = StuckModel(c, t)
        r = comte_generate(model, ds, ds.instances[0].series, 1)
        assert not r.valid
        assert r.counterfactual == ds.instances[1].series

    def test_greedy_path_above_exact_threshold(self):
        model, ds, x = channel_toy(4, 6, {1})
        r = comte_generate(model, ds, x, 1, ComteConfig(exact_below=2))
        assert r.valid
        assert r.info["channels"] == [1]

    def test_exact_prefers_smaller_then_closer(self):
        # two singleton flips possible; channel 1 substitution is cheaper
        c, t = 3, 4

        class EitherModel(Classifier):
            def __init__(self):
                self.channels, self.length = c, t
                self.class_names = ("neg", "pos")

            def predict_proba(self, x):
                hit = x.values[0].mean() > 0.5 or x.values[1].mean() > 0.5
                return np.array([0.1, 0.9]) if hit else np.array([0.9, 0.1])

        donor = np.zeros((c, t))
        donor[0] = 2.0
        donor[1] = 1.0
        ds = make_ds([np.zeros((c, t)), donor], [0, 1])
        r = comte_generate(EitherModel(), ds, ds.instances[0].series, 1)
        assert r.valid
        assert r.info["channels"] == [1]

    def test_degenerate_input(self):
        model, ds, x = channel_toy(3, 8, {2})
        donor = ds.instances[1].series
        r = comte_generate(model, ds, donor, 1)
        assert r.valid
        assert r.counterfactual == donor
        assert r.iterations == 0

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            ComteConfig(exact_below=0)
