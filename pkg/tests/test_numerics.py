import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrcp_decode.errors import ConfigError, DegenerateInputError
from mrcp_decode.numerics import cca, corr2, sym_generalized_eig


def random_spd(rng, n, scale=1.0):
    m = rng.standard_normal((n, n))
    return scale * (m @ m.T + n * np.eye(n))


class TestGevd:
    def test_identity_pair(self):
        res = sym_generalized_eig(np.eye(3), np.eye(3), 3)
        assert np.allclose(res.eigenvalues, 1.0)
        w = res.eigenvectors
        assert np.allclose(w.T @ w, np.eye(3), atol=1e-12)

    def test_diagonal_case(self):
        res = sym_generalized_eig(np.diag([2.0, 1.0]), np.eye(2), 1)
        assert res.eigenvalues[0] == pytest.approx(2.0)
        assert np.allclose(res.eigenvectors[:, 0], [1.0, 0.0], atol=1e-12)

    def test_residual_on_random_spd_pair(self):
        # Oracle: direct substitution into S w = lambda Q w.
        rng = np.random.default_rng(7)
        s = random_spd(rng, 5)
        q = random_spd(rng, 5)
        res = sym_generalized_eig(s, q, 5)
        resid = s @ res.eigenvectors - q @ res.eigenvectors * res.eigenvalues
        bound = 1e-8 * max(np.abs(s).max(), np.abs(q).max())
        assert np.abs(resid).max() < bound

    def test_eigenvalues_descending(self):
        rng = np.random.default_rng(3)
        res = sym_generalized_eig(random_spd(rng, 6), random_spd(rng, 6), 6)
        assert np.all(np.diff(res.eigenvalues) <= 1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(11)
        s = random_spd(rng, 4)
        q = random_spd(rng, 4)
        base = sym_generalized_eig(s, q, 4)
        scaled = sym_generalized_eig(3.7 * s, 3.7 * q, 4)
        assert np.allclose(base.eigenvalues, scaled.eigenvalues, atol=1e-10)
        assert np.allclose(base.eigenvectors, scaled.eigenvectors, atol=1e-10)

    def test_sign_convention(self):
        rng = np.random.default_rng(5)
        s = random_spd(rng, 4)
        q = random_spd(rng, 4)
        w = sym_generalized_eig(s, q, 4).eigenvectors
        peaks = w[np.argmax(np.abs(w), axis=0), np.arange(4)]
        assert np.all(peaks > 0)

    def test_ridge_handles_singular_q(self):
        # Rank-1 Q from a single short trial; the ridge must rescue it.
        rng = np.random.default_rng(9)
        x = rng.standard_normal((4, 1))
        q = x @ x.T
        s = random_spd(rng, 4)
        res = sym_generalized_eig(s, q, 2)
        assert np.all(np.isfinite(res.eigenvalues))

    def test_shape_errors(self):
        with pytest.raises(ConfigError):
            sym_generalized_eig(np.eye(3), np.eye(2), 1)
        with pytest.raises(ConfigError):
            sym_generalized_eig(np.ones((2, 3)), np.ones((2, 3)), 1)

    def test_p_out_of_range(self):
        with pytest.raises(ConfigError):
            sym_generalized_eig(np.eye(3), np.eye(3), 4)
        with pytest.raises(ConfigError):
            sym_generalized_eig(np.eye(3), np.eye(3), 0)


class TestCca:
    def test_identical_blocks_give_unit_correlations(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((50, 3))
        res = cca(a, a)
        assert np.allclose(res.correlations, 1.0, atol=1e-10)

    def test_invariance_under_invertible_map(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((60, 3))
        m = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        res = cca(a, a @ m)
        assert np.allclose(res.correlations, 1.0, atol=1e-8)

    def test_independent_noise_correlations_small(self):
        # Monte-Carlo oracle: independent blocks decorrelate as T grows.
        rng = np.random.default_rng(2)
        a = rng.standard_normal((10000, 2))
        b = rng.standard_normal((10000, 2))
        assert np.all(cca(a, b).correlations < 0.05)

    def test_projection_identity(self):
        # Pearson correlation of each projected pair equals the reported value.
        rng = np.random.default_rng(4)
        a = rng.standard_normal((80, 3))
        b = 0.5 * a[:, [0, 2, 1]] + 0.8 * rng.standard_normal((80, 3))
        res = cca(a, b)
        pa = (a - a.mean(axis=0)) @ res.coeffs_a
        pb = (b - b.mean(axis=0)) @ res.coeffs_b
        for i in range(res.correlations.size):
            r = np.corrcoef(pa[:, i], pb[:, i])[0, 1]
            assert abs(r - res.correlations[i]) < 1e-8

    def test_correlation_count(self):
        rng = np.random.default_rng(6)
        res = cca(rng.standard_normal((40, 4)), rng.standard_normal((40, 2)))
        assert res.correlations.size == 2

    def test_degenerate_block_raises(self):
        rng = np.random.default_rng(8)
        with pytest.raises(DegenerateInputError):
            cca(np.ones((30, 2)), rng.standard_normal((30, 2)))

    def test_too_few_rows_raises(self):
        with pytest.raises(ConfigError):
            cca(np.ones((3, 3)), np.ones((3, 2)))

    def test_rank_deficient_block_drops_directions(self):
        rng = np.random.default_rng(12)
        base = rng.standard_normal((50, 2))
        a = np.column_stack([base, base[:, 0] + base[:, 1]])  # rank 2 of 3
        res = cca(a, rng.standard_normal((50, 3)))
        assert res.correlations.size == 2


class TestCorr2:
    def test_self_is_one(self):
        a = np.array([[1.0, 2.0], [3.0, 5.0]])
        assert corr2(a, a) == pytest.approx(1.0)

    def test_negated_is_minus_one(self):
        a = np.array([[1.0, 2.0], [3.0, 5.0]])
        assert corr2(a, -a) == pytest.approx(-1.0)

    def test_hand_example(self):
        # Flattened vectors (1,2,3,4) vs (1,2,4,3): direct Pearson gives 0.8.
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[1.0, 2.0], [4.0, 3.0]])
        assert corr2(a, b) == pytest.approx(0.8, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError):
            corr2(np.ones((2, 2)), np.ones((2, 3)))

    def test_zero_variance(self):
        with pytest.raises(DegenerateInputError):
            corr2(np.ones((2, 2)), np.array([[1.0, 2.0], [3.0, 4.0]]))

    @settings(max_examples=30, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        scale=st.floats(0.01, 100.0),
        shift=st.floats(-50.0, 50.0),
    )
    def test_symmetry_and_affine_invariance(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 4))
        assert corr2(a, b) == pytest.approx(corr2(b, a), abs=1e-12)
        assert corr2(scale * a + shift, b) == pytest.approx(corr2(a, b), abs=1e-9)
