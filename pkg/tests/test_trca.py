import numpy as np
import pytest

from mrcp_decode.errors import ConfigError, DataError
from mrcp_decode.trca import (
    class_covariances,
    fit_binary_filter,
    fit_multiclass_filter,
)


from util import planted_component_trials, planted_direction_correlation


def naive_intertrial_sum(trials):
    # Direct O(I^2) evaluation of the pairwise inter-trial covariance sum.
    c = trials[0].shape[0]
    s = np.zeros((c, c))
    for i in range(len(trials)):
        for j in range(i + 1, len(trials)):
            s += trials[i] @ trials[j].T + trials[j] @ trials[i].T
    return s


class TestClassCovariances:
    def test_two_identical_trials(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 16))
        pair = class_covariances([x, x.copy()])
        assert np.allclose(pair.s, 2 * x @ x.T, atol=1e-10)
        assert np.allclose(pair.q, 2 * x @ x.T, atol=1e-10)

    def test_fast_identity_matches_naive_pairwise_sum(self):
        rng = np.random.default_rng(1)
        trials = [rng.standard_normal((4, 32)) for _ in range(6)]
        pair = class_covariances(trials)
        naive = naive_intertrial_sum(trials)
        rel = np.abs(pair.s - naive).max() / np.abs(naive).max()
        assert rel < 1e-9

    def test_single_trial_rejected(self):
        with pytest.raises(DataError, match="at least 2"):
            class_covariances([np.zeros((2, 8))])

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        pair = class_covariances([rng.standard_normal((5, 20)) for _ in range(4)])
        assert np.allclose(pair.s, pair.s.T, atol=1e-10)
        assert np.allclose(pair.q, pair.q.T, atol=1e-10)


class TestBinaryFilter:
    def test_width_is_two_p(self):
        rng = np.random.default_rng(3)
        c1 = class_covariances([rng.standard_normal((6, 40)) for _ in range(5)], 0)
        c2 = class_covariances([rng.standard_normal((6, 40)) for _ in range(5)], 1)
        w = fit_binary_filter(c1, c2, p=2)
        assert w.w.shape == (6, 4)
        assert w.variant == "binary"

    def test_identical_classes_give_identical_blocks(self):
        rng = np.random.default_rng(4)
        trials = [rng.standard_normal((4, 30)) for _ in range(5)]
        pair = class_covariances(trials, 0)
        w = fit_binary_filter(pair, pair, p=2)
        assert np.allclose(w.w[:, :2], w.w[:, 2:], atol=1e-12)

    def test_planted_component_recovery(self):
        # The top eigenvector should align with the Q-weighted planted
        # direction (the matched-filter solution for a rank-one S).
        rng = np.random.default_rng(5)
        trials, mixing = planted_component_trials(rng, 40, 8, 1024, snr_db=10.0)
        pair = class_covariances(trials)
        w = fit_binary_filter(pair, pair, p=1).w[:, 0]
        assert planted_direction_correlation(w, pair.q, mixing) > 0.95


class TestMulticlassFilter:
    def test_width_is_p_for_any_k(self):
        rng = np.random.default_rng(6)
        covs = [
            class_covariances([rng.standard_normal((11, 64)) for _ in range(4)], k)
            for k in range(7)
        ]
        w = fit_multiclass_filter(covs, p=3)
        assert w.w.shape == (11, 3)
        assert w.variant == "multiclass"

    def test_pooling_identical_summands_matches_per_class_problem(self):
        rng = np.random.default_rng(7)
        trials = [rng.standard_normal((5, 40)) for _ in range(6)]
        pair = class_covariances(trials, 0)
        pooled = fit_multiclass_filter([pair, pair], p=5)
        from mrcp_decode.numerics import sym_generalized_eig

        single = sym_generalized_eig(pair.s, pair.q, 5)
        # 2S w = lambda 2Q w has the same eigenvalues as S w = lambda Q w.
        assert np.allclose(pooled.w, single.eigenvectors, atol=1e-9)

    def test_full_rank_at_p_equals_c(self):
        rng = np.random.default_rng(8)
        covs = [
            class_covariances([rng.standard_normal((4, 32)) for _ in range(4)], k)
            for k in range(3)
        ]
        w = fit_multiclass_filter(covs, p=4).w
        assert w.shape == (4, 4)
        assert np.linalg.matrix_rank(w) == 4

    def test_needs_two_classes(self):
        rng = np.random.default_rng(9)
        pair = class_covariances([rng.standard_normal((3, 16)) for _ in range(3)])
        with pytest.raises(ConfigError):
            fit_multiclass_filter([pair], p=1)

    def test_filtered_variance_concentrates_planted_signal(self):
        # Spatially filtered component should beat every raw channel on
        # signal recovery for planted data.
        rng = np.random.default_rng(10)
        trials, _ = planted_component_trials(rng, 24, 6, 200, snr_db=0.0)
        pair = class_covariances(trials)
        w = fit_multiclass_filter([pair, pair], p=1).w[:, 0]
        t = trials[0].shape[1]
        source = np.sin(2 * np.pi * 2.0 * np.arange(t) / t) * np.hanning(t)
        grand = np.mean(trials, axis=0)
        filtered_corr = abs(np.corrcoef(w @ grand, source)[0, 1])
        channel_corrs = [abs(np.corrcoef(grand[i], source)[0, 1])
                         for i in range(6)]
        assert filtered_corr > max(channel_corrs)
