"""Synthetic two-stage generator: determinism, truncation, resampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distreg import (
    ConfigError,
    InputError,
    MetaDistributionSpec,
    generate,
    resample_second_stage,
)
from distreg.embedding import Bag
from distreg.synth import TARGETS


def meta(**overrides) -> MetaDistributionSpec:
    base = dict(
        dim=1, scale=0.1, target="linear_mean", noise_sd=0.05, noise_bound=2.0, seed=314
    )
    base.update(overrides)
    return MetaDistributionSpec(**base)


class TestTargets:
    def test_linear_mean_is_theta(self):
        assert meta().target_value(np.array([0.5])) == 0.5

    def test_quadratic_mean(self):
        m = meta(target="quadratic_mean", dim=2)
        assert m.target_value(np.array([0.5, 0.3])) == pytest.approx((0.25 + 0.09) / 2)

    def test_mean_plus_variance(self):
        m = meta(target="mean_plus_variance", scale=0.2)
        assert m.target_value(np.array([0.4])) == pytest.approx(0.4 + 0.04)

    def test_smooth_composite_peak(self):
        m = meta(target="smooth_composite")
        assert m.target_value(np.array([0.5])) == pytest.approx(1.0)
        assert m.target_value(np.array([0.2])) < 1.0

    def test_smoothness_ladder_ordering(self):
        assert (
            TARGETS["linear_mean"].smoothness_rank
            < TARGETS["quadratic_mean"].smoothness_rank
            < TARGETS["smooth_composite"].smoothness_rank
        )

    def test_unknown_target(self):
        with pytest.raises(ConfigError):
            meta(target="fourier_soup")


class TestGenerate:
    def test_noiseless_labels_equal_targets(self):
        ds = generate(meta(noise_sd=0.0), 8, 12)
        assert np.array_equal(ds.labels(), ds.targets)

    def test_same_seed_bitwise_identical(self):
        a = generate(meta(), 6, 9)
        b = generate(meta(), 6, 9)
        assert np.array_equal(a.targets, b.targets)
        for ba, bb in zip(a.bags, b.bags):
            assert ba.id == bb.id
            assert ba.label == bb.label
            assert np.array_equal(ba.points, bb.points)

    def test_different_seed_differs(self):
        a = generate(meta(), 4, 6)
        b = generate(meta(seed=315), 4, 6)
        assert not np.array_equal(a.bags[0].points, b.bags[0].points)

    def test_points_in_unit_box(self):
        ds = generate(meta(dim=2, scale=0.2), 20, 50)
        for bag in ds.bags:
            assert np.all(bag.points >= 0.0) and np.all(bag.points <= 1.0)

    def test_labels_bounded(self):
        ds = generate(meta(noise_sd=0.5, noise_bound=1.5), 50, 3)
        assert np.max(np.abs(ds.labels())) <= 1.5

    def test_params_enable_target_recomputation(self):
        ds = generate(meta(noise_sd=0.3), 10, 5)
        for bag, target in zip(ds.bags, ds.targets):
            assert bag.params is not None
            assert ds.meta.target_value(bag.params.theta) == pytest.approx(target)

    def test_bag_sizes_and_dimension(self):
        ds = generate(meta(dim=3), 4, 17)
        assert all(b.size == 17 and b.dim == 3 for b in ds.bags)

    def test_invalid_counts(self):
        with pytest.raises(InputError):
            generate(meta(), 0, 5)
        with pytest.raises(InputError):
            generate(meta(), 5, 0)

    def test_target_exceeding_bound_rejected(self):
        # mean_plus_variance with huge scale stays within [0.2, 0.8] + s^2 but
        # a tiny bound makes the precondition fail.
        with pytest.raises(ConfigError):
            generate(meta(target="mean_plus_variance", noise_bound=0.1, noise_sd=0.1), 3, 3)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_label_bound_holds_for_any_seed(self, seed):
        ds = generate(meta(seed=seed, noise_sd=0.4, noise_bound=1.2), 10, 2)
        assert np.max(np.abs(ds.labels())) <= 1.2


class TestResample:
    def test_same_seed_same_n_reproduces_points(self):
        ds = generate(meta(), 5, 8)
        again = resample_second_stage(ds, 8, seed=ds.meta.seed)
        for a, b in zip(ds.bags, again.bags):
            assert np.array_equal(a.points, b.points)

    def test_n_new_one(self):
        ds = generate(meta(), 5, 8)
        small = resample_second_stage(ds, 1, seed=777)
        assert all(b.size == 1 for b in small.bags)

    def test_labels_and_targets_unchanged(self):
        ds = generate(meta(), 5, 8)
        re = resample_second_stage(ds, 20, seed=1)
        assert np.array_equal(re.targets, ds.targets)
        assert [b.label for b in re.bags] == [b.label for b in ds.bags]

    def test_requires_params(self):
        ds = generate(meta(), 2, 3)
        stripped = ds.bags[0]
        bare = Bag(id=stripped.id, points=stripped.points, label=stripped.label)
        broken = type(ds)(bags=(bare,) + ds.bags[1:], targets=ds.targets, meta=ds.meta)
        with pytest.raises(InputError):
            resample_second_stage(broken, 5, seed=2)

    def test_bag_means_concentrate(self):
        # |mean - theta| at N = 10_000 must beat N = 10 for >= 45 of 50 bags.
        ds = generate(meta(dim=1, scale=0.15, seed=2718), 50, 10)
        big = resample_second_stage(ds, 10_000, seed=999)
        wins = 0
        for small_bag, big_bag in zip(ds.bags, big.bags):
            theta = small_bag.params.theta
            err_small = abs(float(np.mean(small_bag.points)) - float(theta[0]))
            err_big = abs(float(np.mean(big_bag.points)) - float(theta[0]))
            wins += err_big < err_small
        assert wins >= 45


def test_spec_validation():
    with pytest.raises(ConfigError):
        meta(scale=0.0)
    with pytest.raises(ConfigError):
        meta(noise_sd=-0.1)
    with pytest.raises(ConfigError):
        meta(noise_bound=0.0)
    with pytest.raises(ConfigError):
        meta(dim=0)
