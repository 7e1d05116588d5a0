
import numpy as np
import pytest

from rnnsearch.encoding import Genotype, Scheme, SearchSpace, enumerate_genotypes, sample_lhs
from rnnsearch.exceptions import DimensionMismatch, InsufficientData
from rnnsearch.surrogate import ForestConfig, fit, predict


def grid_genotypes():
    """Enumerable size-scheme grid with a known target f(g) = sum of slots."""
    space = SearchSpace(Scheme.SIZE, 2, 1, 5, 3, lookback_min=2)
    genos = enumerate_genotypes(space)
    genos = [g for g in genos if g.values[-1] >= 2]
    ys = [float(sum(g.values)) for g in genos]
    return genos, ys


class TestFit:
    def test_single_tree_interpolates_distinct_points(self):
        rng = np.random.default_rng(0)
        genos = [Genotype((int(a), int(b)), Scheme.SIZE) for a, b in rng.integers(0, 50, (20, 2))]
        genos = list(dict.fromkeys(genos))
        ys = [float(i) for i in range(len(genos))]
        cfg = ForestConfig(n_trees=1, min_samples_leaf=1, bootstrap=False)
        model = fit(genos, ys, cfg, np.random.default_rng(1))
        for g, y in zip(genos, ys):
            mean, sd = predict(model, g)
            assert mean == y
            assert sd == 0.0

    def test_constant_targets_collapse_to_constant(self):
        genos, _ = grid_genotypes()
        model = fit(genos, [3.25] * len(genos), ForestConfig(), np.random.default_rng(2))
        for g in genos[::7]:
            mean, sd = predict(model, g)
            assert mean == 3.25
            assert sd == 0.0

    def test_learns_additive_target_well(self):
        genos, ys = grid_genotypes()
        model = fit(genos, ys, ForestConfig(), np.random.default_rng(3))
        preds = np.array([predict(model, g)[0] for g in genos])
        y = np.asarray(ys)
        r2 = 1.0 - np.sum((preds - y) ** 2) / np.sum((y - y.mean()) ** 2)
        assert r2 > 0.9

    def test_too_few_points_rejected(self):
        with pytest.raises(InsufficientData):
            fit([Genotype((1, 2), Scheme.SIZE)], [1.0], ForestConfig(), np.random.default_rng(4))

    def test_mixed_lengths_rejected(self):
        with pytest.raises(DimensionMismatch):
            fit(
                [Genotype((1, 2), Scheme.SIZE), Genotype((1, 2, 3), Scheme.SIZE)],
                [1.0, 2.0],
                ForestConfig(),
                np.random.default_rng(5),
            )


class TestPredict:
    def test_identical_trees_have_zero_spread(self):
        # one feature and no bootstrap: every tree must make the same splits
        genos = [Genotype((v,), Scheme.SIZE) for v in range(20)]
        ys = [float(v) ** 1.5 for v in range(20)]
        cfg = ForestConfig(n_trees=5, bootstrap=False, max_features=1.0, min_samples_leaf=2)
        model = fit(genos, ys, cfg, np.random.default_rng(6))
        for g in genos[::4]:
            assert predict(model, g)[1] == 0.0

    def test_single_tree_zero_spread_everywhere(self):
        genos, ys = grid_genotypes()
        cfg = ForestConfig(n_trees=1, min_samples_leaf=2)
        model = fit(genos, ys, cfg, np.random.default_rng(6))
        for g in genos[::9]:
            assert predict(model, g)[1] == 0.0

    def test_wrong_dimension_rejected(self):
        genos, ys = grid_genotypes()
        model = fit(genos, ys, ForestConfig(), np.random.default_rng(7))
        with pytest.raises(DimensionMismatch):
            predict(model, Genotype((1, 2, 3, 4, 5), Scheme.SIZE))

    def test_predictions_bounded_by_target_range(self):
        genos, ys = grid_genotypes()
        model = fit(genos, ys, ForestConfig(), np.random.default_rng(8))
        rng = np.random.default_rng(9)
        queries = rng.integers(-3, 12, size=(60, 4)).astype(np.float64)
        means, _ = model.predict_batch(queries)
        assert np.all(means >= min(ys) - 1e-12)
        assert np.all(means <= max(ys) + 1e-12)

    def test_uncertainty_lower_at_training_points(self):
        # averaged over seeds: spread at seen points <= spread far away
        space = SearchSpace(Scheme.SIZE, 2, 1, 20, 5, lookback_min=2)
        rng = np.random.default_rng(10)
        genos = sample_lhs(space, 25, rng)
        ys = [float(sum(g.values)) for g in genos]
        far = np.array([[60.0, 60.0, 9.0, 9.0]])
        sd_train, sd_far = [], []
        for seed in range(20):
            cfg = ForestConfig(n_trees=40, min_samples_leaf=1)
            model = fit(genos, ys, cfg, np.random.default_rng(200 + seed))
            sds = [predict(model, g)[1] for g in genos]
            sd_train.append(np.mean(sds))
            sd_far.append(model.predict_batch(far)[1][0])
        assert np.mean(sd_train) <= np.mean(sd_far)


class TestDeterminism:
    def test_same_seed_same_model(self):
        genos, ys = grid_genotypes()
        m1 = fit(genos, ys, ForestConfig(), np.random.default_rng(11))
        m2 = fit(genos, ys, ForestConfig(), np.random.default_rng(11))
        for a, b in zip(
            (m1.feat, m1.thr, m1.left, m1.right, m1.value, m1.counts),
            (m2.feat, m2.thr, m2.left, m2.right, m2.value, m2.counts),
        ):
            assert np.array_equal(a, b)

    def test_permuted_training_data_same_model(self):
        genos, ys = grid_genotypes()
        order = np.random.default_rng(12).permutation(len(genos))
        shuffled = [genos[i] for i in order]
        ys_shuffled = [ys[i] for i in order]
        m1 = fit(genos, ys, ForestConfig(), np.random.default_rng(13))
        m2 = fit(shuffled, ys_shuffled, ForestConfig(), np.random.default_rng(13))
        queries = np.array([g.values for g in genos[::5]], dtype=np.float64)
        mean1, sd1 = m1.predict_batch(queries)
        mean2, sd2 = m2.predict_batch(queries)
        assert np.array_equal(mean1, mean2)
        assert np.array_equal(sd1, sd2)
