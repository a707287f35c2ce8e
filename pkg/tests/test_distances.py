import math

import numpy as np
import pytest

from cfx import (
    BandError,
    ChangeMask,
    ConfigError,
    DistanceConfig,
    ShapeError,
    TimeSeries,
    changed_segments,
    dtw,
    frechet,
    l0_changed,
    minkowski,
)
from oracles import dtw_brute, frechet_brute, minkowski_naive


def ts(vals):
    return TimeSeries(np.asarray(vals, dtype=np.float64))


class TestDistanceConfig:
    def test_defaults(self):
        cfg = DistanceConfig()
        assert cfg.metric == "l2"
        assert cfg.band is None
        assert cfg.tau == 1e-6

    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            DistanceConfig(metric="manhattan")
        with pytest.raises(ConfigError):
            DistanceConfig(tau=-0.1)
        with pytest.raises(ConfigError):
            DistanceConfig(band=-1)
        with pytest.raises(ConfigError):
            DistanceConfig(mode="joint")


class TestMinkowski:
    def test_identity(self):
        a = ts([1.0, -2.0, 3.0])
        for p in (1, 2, math.inf):
            assert minkowski(a, a, p) == 0.0

    def test_three_four_five(self):
        a, b = ts([0.0, 0.0]), ts([3.0, 4.0])
        assert minkowski(a, b, 2) == 5.0
        assert minkowski(a, b, 1) == 7.0
        assert minkowski(a, b, math.inf) == 4.0

    def test_matches_naive_loop(self, rng):
        for _ in range(20):
            a = rng.normal(size=(2, 7))
            b = rng.normal(size=(2, 7))
            for p in (1, 2, math.inf):
                assert abs(minkowski(ts(a), ts(b), p) - minkowski_naive(a, b, p)) <= 1e-12

    def test_symmetry(self, rng):
        a, b = ts(rng.normal(size=5)), ts(rng.normal(size=5))
        for p in (1, 2, math.inf):
            assert minkowski(a, b, p) == minkowski(b, a, p)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            minkowski(ts([1.0]), ts([1.0, 2.0]), 2)

    def test_bad_p(self):
        with pytest.raises(ConfigError):
            minkowski(ts([1.0]), ts([2.0]), 3)


class TestL0:
    def test_identical(self):
        a = ts([1.0, 2.0, 3.0])
        assert l0_changed(a, a, 0.0) == 0

    def test_single_entry_exceeds_tau(self):
        assert l0_changed(ts([0.0, 0.0, 0.0]), ts([0.0, 0.5, 0.0]), 0.1) == 1

    def test_all_within_tolerance(self):
        assert l0_changed(ts([0.0, 0.0, 0.0]), ts([0.05, 0.05, 0.05]), 0.1) == 0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            l0_changed(ts([0.0]), ts([[0.0], [1.0]]))


class TestChangedSegments:
    def test_two_endpoint_segments(self):
        mask = changed_segments(ts([0.0, 0.0, 0.0, 0.0]), ts([1.0, 0.0, 0.0, 1.0]), 0.0)
        assert mask.segments == ((0, 0, 0), (0, 3, 3))
        assert mask.segment_count == 2

    def test_full_change_single_segment(self):
        mask = changed_segments(ts([0.0] * 6), ts([2.0] * 6), 0.0)
        assert mask.segments == ((0, 0, 5),)
        assert mask.mean_segment_length == 6.0

    def test_identical_no_segments(self):
        a = ts([1.0, 2.0])
        mask = changed_segments(a, a, 0.0)
        assert mask.segments == ()
        assert mask.changed_fraction == 0.0
        assert mask.mean_segment_length == 0.0

    def test_multichannel_sorted_and_disjoint(self):
        a = ts([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        b = ts([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
        mask = changed_segments(a, b, 0.0)
        assert mask.segments == ((0, 1, 1), (1, 0, 0), (1, 2, 2))

    def test_segments_cover_mask_exactly(self, rng):
        for _ in range(20):
            a = rng.normal(size=(2, 12))
            b = a + rng.normal(scale=0.5, size=a.shape) * (rng.random(a.shape) > 0.5)
            mask = changed_segments(ts(a), ts(b), 1e-9)
            rebuilt = np.zeros_like(a, dtype=bool)
            for c, s, e in mask.segments:
                assert not rebuilt[c, s : e + 1].any()  # disjoint
                rebuilt[c, s : e + 1] = True
            assert np.array_equal(rebuilt, mask.mask)
            # count relations with the flat counter
            total = sum(e - s + 1 for _, s, e in mask.segments)
            assert total == l0_changed(ts(a), ts(b), 1e-9)
            assert mask.segment_count <= total


class TestDtw:
    def test_identity(self):
        a = ts([0.3, -1.0, 2.0])
        assert dtw(a, a) == 0.0

    def test_pinned_small_cases(self):
        assert dtw(ts([0.0, 0.0, 1.0]), ts([0.0, 1.0, 1.0])) == 0.0
        assert dtw(ts([0.0, 1.0]), ts([1.0, 0.0])) == 2.0

    def test_matches_path_enumeration(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 9))
            m = int(rng.integers(1, 9))
            a = rng.normal(size=n)
            b = rng.normal(size=m)
            assert dtw(ts(a), ts(b)) == dtw_brute(a, b)

    def test_multivariate_dependent_matches_enumeration(self, rng):
        for _ in range(10):
            a = rng.normal(size=(2, 5))
            b = rng.normal(size=(2, 6))
            assert dtw(ts(a), ts(b)) == dtw_brute(a, b)

    def test_squared_cost_flag(self, rng):
        a, b = rng.normal(size=6), rng.normal(size=6)
        cfg = DistanceConfig(dtw_squared=True)
        assert dtw(ts(a), ts(b), cfg) == dtw_brute(a, b, squared=True)

    def test_independent_mode_sums_channels(self, rng):
        a = rng.normal(size=(3, 7))
        b = rng.normal(size=(3, 7))
        cfg = DistanceConfig(mode="independent")
        expect = sum(dtw(ts(a[c]), ts(b[c])) for c in range(3))
        assert abs(dtw(ts(a), ts(b), cfg) - expect) < 1e-12

    def test_wide_band_equals_unbanded(self, rng):
        a, b = rng.normal(size=8), rng.normal(size=8)
        assert dtw(ts(a), ts(b), DistanceConfig(band=8)) == dtw(ts(a), ts(b))

    def test_band_too_small(self):
        with pytest.raises(BandError):
            dtw(ts([0.0, 1.0]), ts([0.0, 1.0, 2.0, 3.0, 4.0]), DistanceConfig(band=1))

    def test_symmetry(self, rng):
        a, b = rng.normal(size=6), rng.normal(size=4)
        assert dtw(ts(a), ts(b)) == dtw(ts(b), ts(a))

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            dtw(ts([[0.0], [1.0]]), ts([0.0]))

    def test_bounded_by_l1_on_equal_length(self, rng):
        # the diagonal path is one admissible warping, so dtw can only be lower
        for _ in range(50):
            t = int(rng.integers(1, 17))
            a, b = rng.normal(size=t), rng.normal(size=t)
            assert dtw(ts(a), ts(b)) <= minkowski(ts(a), ts(b), 1) + 1e-12


class TestFrechet:
    def test_identity(self):
        a = ts([1.0, 2.0, 3.0])
        assert frechet(a, a) == 0.0

    def test_pinned_pair(self):
        assert frechet(ts([0.0, 0.0]), ts([0.0, 1.0])) == 1.0

    def test_matches_recursion_oracle(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 9))
            m = int(rng.integers(1, 9))
            a = rng.normal(size=n)
            b = rng.normal(size=m)
            assert frechet(ts(a), ts(b)) == frechet_brute(a, b)

    def test_multivariate_matches_oracle(self, rng):
        for _ in range(10):
            a = rng.normal(size=(2, 6))
            b = rng.normal(size=(2, 5))
            assert frechet(ts(a), ts(b)) == frechet_brute(a, b)

    def test_symmetry(self, rng):
        a, b = rng.normal(size=5), rng.normal(size=7)
        assert frechet(ts(a), ts(b)) == frechet(ts(b), ts(a))

    def test_endpoint_lower_bound(self, rng):
        # both endpoints are always coupled, so their costs bound from below
        a, b = rng.normal(size=6), rng.normal(size=6)
        lo = max(abs(a[0] - b[0]), abs(a[-1] - b[-1]))
        assert frechet(ts(a), ts(b)) >= lo - 1e-12

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            frechet(ts([[0.0], [1.0]]), ts([0.0]))


class TestMetricAxioms:
    def test_nonnegative_and_zero_iff_equal_at_tau_zero(self, rng):
        a = rng.normal(size=6)
        b = a.copy()
        b[3] += 0.5
        for fn in (
            lambda u, v: minkowski(u, v, 1),
            lambda u, v: minkowski(u, v, 2),
            lambda u, v: minkowski(u, v, math.inf),
            dtw,
            frechet,
        ):
            assert fn(ts(a), ts(a)) == 0.0
            assert fn(ts(a), ts(b)) >= 0.0
        assert l0_changed(ts(a), ts(b), 0.0) == 1

    def test_changemask_properties(self):
        mask = ChangeMask(
            mask=np.array([[True, True, False]]),
            segments=((0, 0, 1),),
        )
        assert mask.changed_count == 2
        assert mask.changed_fraction == pytest.approx(2 / 3)
        assert mask.mean_segment_length == 2.0
