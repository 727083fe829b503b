"""Proximal operators, Procrustes update, and the ADMM loop."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clrpca import (
    InputError,
    SolverConfig,
    admm_fit,
    column_alpha_vector,
    default_hyperparameters,
    leading_subspace,
    procrustes_update,
    prox_row,
    prox_scalar,
    sample_covariance,
    subspace_distance_sq,
)
from clrpca.solver import SUPPORTED_Q, _prox_magnitudes, _v_update

from conftest import oracle_magnitude_objective, prox_objective

Q_VALUES = list(SUPPORTED_Q)


class TestDefaultHyperparameters:
    def test_unit_norm(self):
        beta, rho, mu = default_hyperparameters(np.eye(3))
        assert (beta, rho, mu) == (5.8, 6.14, 1000.0)

    def test_linear_scaling(self):
        beta, rho, mu = default_hyperparameters(2.0 * np.eye(3))
        assert beta == pytest.approx(11.6)
        assert rho == pytest.approx(12.28)
        assert mu == 1000.0

    def test_zero_matrix_rejected(self):
        with pytest.raises(InputError):
            default_hyperparameters(np.zeros((4, 4)))


class TestProcrustes:
    def test_orthonormal_fixed_point(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((7, 3)))
        np.testing.assert_allclose(procrustes_update(Q), Q, atol=1e-12)

    def test_polar_factor_by_hand(self):
        np.testing.assert_allclose(
            procrustes_update(np.diag([2.0, -3.0])), np.diag([1.0, -1.0]), atol=1e-14
        )

    def test_maximizes_inner_product(self, rng):
        # Monte-Carlo optimality oracle over random orthonormal candidates
        A = rng.standard_normal((6, 3))
        U = procrustes_update(A)
        best = np.sum(A * U)
        for _ in range(100):
            Q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
            assert best >= np.sum(A * Q) - 1e-10

    def test_output_orthonormal_even_rank_deficient(self):
        A = np.zeros((5, 2))
        A[:, 0] = [1.0, 0, 0, 0, 0]
        U = procrustes_update(A)
        np.testing.assert_allclose(U.T @ U, np.eye(2), atol=1e-10)


def random_prox_draw(rng, dim):
    b = rng.standard_normal(dim) * 10.0 ** rng.uniform(-1, 1)
    alpha = 10.0 ** rng.uniform(-2, 1)
    beta = 10.0 ** rng.uniform(-2, 1)
    rho = 10.0 ** rng.uniform(-2, 1)
    return b, alpha, beta, rho


class TestProxRow:
    def test_group_soft_threshold_value(self):
        out = prox_row(np.array([3.0, 4.0]), 1.0, 2.0, 0.5, 0.5)
        np.testing.assert_allclose(out, [-1.8, -2.4], atol=1e-12)

    def test_hard_threshold_value(self):
        out = prox_row(np.array([3.0, 4.0]), 0.0, 2.0, 0.5, 0.5)
        np.testing.assert_allclose(out, [-3.0, -4.0], atol=1e-12)

    @pytest.mark.parametrize("q", Q_VALUES)
    def test_zero_input(self, q):
        np.testing.assert_array_equal(prox_row(np.zeros(3), q, 1.0, 1.0, 1.0), np.zeros(3))

    def test_q_half_no_beneficial_root(self):
        out = prox_row(np.array([1.0, 0.0]), 0.5, 10.0, 0.5, 0.5)
        np.testing.assert_array_equal(out, np.zeros(2))

    def test_q1_zero_iff_small_norm(self, rng):
        alpha = 2.0
        small = rng.standard_normal(4)
        small *= 1.9 / np.linalg.norm(small)
        big = small * 1.2
        assert np.all(prox_row(small, 1.0, alpha, 1.0, 1.0) == 0.0)
        out = prox_row(big, 1.0, alpha, 1.0, 1.0)
        assert np.linalg.norm(out) > 0
        # output is a nonnegative multiple of -b
        cos = out @ (-big) / (np.linalg.norm(out) * np.linalg.norm(big))
        assert cos == pytest.approx(1.0, abs=1e-12)

    def test_q0_magnitude_all_or_nothing(self, rng):
        for _ in range(50):
            b, alpha, beta, rho = random_prox_draw(rng, 3)
            out = prox_row(b, 0.0, alpha, beta, rho)
            nv = np.linalg.norm(out)
            expected = np.linalg.norm(b) / (beta + rho)
            assert nv == pytest.approx(0.0, abs=1e-15) or nv == pytest.approx(expected, rel=1e-12)

    def test_q0_boundary_tie_gives_zero(self):
        # ||b||^2 == 2 alpha (beta + rho) exactly
        b = np.array([2.0, 0.0])
        assert np.all(prox_row(b, 0.0, 1.0, 1.0, 1.0) == 0.0)

    @pytest.mark.parametrize("q", Q_VALUES)
    def test_matches_grid_oracle(self, q, rng):
        k = 0
        for _ in range(200):
            b, alpha, beta, rho = random_prox_draw(rng, 1 + k % 5)
            k += 1
            out = prox_row(b, q, alpha, beta, rho)
            obj = prox_objective(out, b, q, alpha, beta + rho)
            oracle = oracle_magnitude_objective(np.linalg.norm(b), q, alpha, beta + rho)
            assert obj <= oracle + 1e-9

    @pytest.mark.parametrize("q", Q_VALUES)
    def test_never_worse_than_random_candidates(self, q, rng):
        b, alpha, beta, rho = random_prox_draw(rng, 4)
        out = prox_row(b, q, alpha, beta, rho)
        obj = prox_objective(out, b, q, alpha, beta + rho)
        assert obj <= prox_objective(np.zeros(4), b, q, alpha, beta + rho) + 1e-9
        scales = 10.0 ** rng.uniform(-3, 1, 10000)
        dirs = rng.standard_normal((10000, 4))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        cands = dirs * scales[:, None]
        norms = np.linalg.norm(cands, axis=1)
        pens = alpha * (norms != 0) if q == 0.0 else alpha * norms**q
        objs = 0.5 * (beta + rho) * norms**2 + pens + cands @ b
        assert obj <= np.min(objs) + 1e-9


class TestProxScalar:
    def test_soft_threshold_value(self):
        assert prox_scalar(-5.0, 1.0, 2.0, 0.5, 0.5) == pytest.approx(3.0, abs=1e-12)

    def test_hard_threshold_zero(self):
        assert prox_scalar(1.0, 0.0, 10.0, 0.5, 0.5) == 0.0

    def test_zero_input(self):
        assert prox_scalar(0.0, 0.5, 1.0, 1.0, 1.0) == 0.0

    @pytest.mark.parametrize("q", Q_VALUES)
    def test_matches_grid_oracle(self, q, rng):
        for _ in range(200):
            b, alpha, beta, rho = random_prox_draw(rng, 1)
            out = prox_scalar(float(b[0]), q, alpha, beta, rho)
            obj = prox_objective([out], b, q, alpha, beta + rho)
            oracle = oracle_magnitude_objective(abs(float(b[0])), q, alpha, beta + rho)
            assert obj <= oracle + 1e-9

    def test_invalid_q(self):
        with pytest.raises(InputError):
            prox_scalar(1.0, 0.3, 1.0, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(
    q=st.sampled_from(Q_VALUES),
    norm=st.floats(min_value=0.0, max_value=50.0),
    alpha=st.floats(min_value=1e-3, max_value=30.0),
    k1=st.floats(min_value=1e-2, max_value=50.0),
)
def test_prox_magnitude_is_stationary_or_zero(q, norm, alpha, k1):
    x = float(_prox_magnitudes(np.array([norm]), q, alpha, k1)[0])
    assert x >= 0.0
    if x > 0.0 and q not in (0.0, 1.0):
        # stationarity of the smooth branch: k1 x + alpha q x^(q-1) = ||b||
        resid = k1 * x + alpha * q * x ** (q - 1.0) - norm
        assert abs(resid) <= 1e-7 * max(1.0, norm)


def test_vectorized_v_update_matches_prox_row(rng):
    cfg = SolverConfig(mode="row", q=0.5, alpha=0.8, beta=2.0, rho=3.0)
    B = rng.standard_normal((20, 3)) * 3.0
    V = _v_update(B, cfg, None)
    for i in range(20):
        np.testing.assert_allclose(
            V[i], prox_row(B[i], 0.5, 0.8, 2.0, 3.0), atol=1e-12
        )


def test_vectorized_v_update_matches_prox_scalar(rng):
    alpha_vec = np.array([0.5, 2.0, 4.0])
    cfg = SolverConfig(mode="column", q=1.0, alpha=1.0, beta=2.0, rho=3.0)
    B = rng.standard_normal((15, 3)) * 3.0
    V = _v_update(B, cfg, alpha_vec)
    for i in range(15):
        for j in range(3):
            assert V[i, j] == pytest.approx(
                prox_scalar(B[i, j], 1.0, alpha_vec[j], 2.0, 3.0), abs=1e-12
            )


class TestColumnAlphaVector:
    def test_simple_scaling(self):
        V0 = np.array([[1.0, 0.25], [-1.0, 0.25], [0.0, 0.5], [0.0, 1.0]])
        np.testing.assert_allclose(column_alpha_vector(4.0, V0), [2.0, 2.0])

    def test_uniform_when_equal_norms(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((6, 2)))
        V0 = np.column_stack([Q[:, 0], np.roll(Q[:, 0], 1)])
        av = column_alpha_vector(3.0, V0)
        assert av[0] == pytest.approx(av[1])

    def test_frozen_fixture(self):
        # leading 2 eigenvectors of a fixed-seed sample covariance
        rng = np.random.default_rng(314)
        S = sample_covariance(rng.standard_normal((40, 12)))
        av = column_alpha_vector(4.0, leading_subspace(S, 2))
        np.testing.assert_allclose(
            av, [1.5486300362613243, 1.4255940566755516], atol=1e-10
        )

    def test_zero_column_rejected(self):
        with pytest.raises(InputError):
            column_alpha_vector(1.0, np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestAdmmFit:
    def spiked(self, p=8):
        return np.diag([5.0, 2.0] + [1.0] * (p - 2))

    def test_recovers_unpenalized_pca_with_tiny_alpha(self):
        S = self.spiked()
        beta, rho, mu = default_hyperparameters(S)
        fit = admm_fit(S, 1, SolverConfig(mode="row", q=0.0, alpha=1e-10, beta=beta, rho=rho))
        assert fit.objective == pytest.approx(5.0, abs=1e-6)
        assert subspace_distance_sq(fit.V_hat, np.eye(8)[:, :1]) <= 1e-8

    def test_huge_alpha_degenerate(self):
        S = self.spiked()
        beta, rho, mu = default_hyperparameters(S)
        fit = admm_fit(S, 2, SolverConfig(mode="row", q=0.0, alpha=1e12, beta=beta, rho=rho))
        assert fit.degenerate
        assert np.all(fit.V_hat == 0.0)
        assert fit.support == ()

    def test_u_iterates_orthonormal(self, rng):
        # every iterate, not just the last one
        from clrpca import admm_step, initial_state

        S = sample_covariance(rng.standard_normal((40, 10)))
        beta, rho, _ = default_hyperparameters(S)
        cfg = SolverConfig(mode="row", q=1.0, alpha=0.05, beta=beta, rho=rho)
        state = initial_state(S, 3)
        for _ in range(50):
            state = admm_step(S, state, cfg)
            dev = np.max(np.abs(state.U.T @ state.U - np.eye(3)))
            assert dev <= 1e-8
        fit = admm_fit(S, 3, cfg)
        np.testing.assert_allclose(fit.U_hat.T @ fit.U_hat, np.eye(3), atol=1e-8)

    def test_support_matches_zero_pattern(self, rng):
        S = sample_covariance(rng.standard_normal((60, 12)) * np.array([3.0] * 4 + [0.3] * 8))
        beta, rho, _ = default_hyperparameters(S)
        fit = admm_fit(S, 2, SolverConfig(mode="row", q=0.0, alpha=1.0, beta=beta, rho=rho))
        assert set(fit.support) == set(np.flatnonzero(np.any(fit.V_hat != 0, axis=1)))

    def test_column_mode_support_per_column(self, rng):
        S = sample_covariance(rng.standard_normal((60, 12)) * np.array([3.0] * 4 + [0.3] * 8))
        beta, rho, _ = default_hyperparameters(S)
        fit = admm_fit(S, 2, SolverConfig(mode="column", q=1.0, alpha=1.0, beta=beta, rho=rho))
        assert len(fit.support) == 2
        for j, idx in enumerate(fit.support):
            assert set(idx) == set(np.flatnonzero(fit.V_hat[:, j] != 0))

    def test_residual_trend(self, rng):
        # weak sanity: the coupling residual does not grow from start to end
        A = rng.standard_normal((100, 15))
        S = sample_covariance(A * np.array([4.0] * 3 + [1.0] * 12))
        beta, rho, _ = default_hyperparameters(S)
        fit = admm_fit(S, 2, SolverConfig(mode="row", q=1.0, alpha=0.5, beta=beta, rho=rho))
        d = fit.diagnostics
        assert d.primal_residual <= d.first_primal_residual + 1e-12

    def test_d_out_of_range(self):
        with pytest.raises(InputError):
            admm_fit(np.eye(3), 3, SolverConfig(mode="row", q=0.0, alpha=1.0, beta=1.0, rho=1.0))

    def test_deterministic(self, rng):
        S = sample_covariance(rng.standard_normal((30, 8)))
        beta, rho, _ = default_hyperparameters(S)
        cfg = SolverConfig(mode="row", q=0.5, alpha=0.3, beta=beta, rho=rho)
        f1 = admm_fit(S, 2, cfg)
        f2 = admm_fit(S.copy(), 2, cfg)
        np.testing.assert_array_equal(f1.V_hat, f2.V_hat)
        assert f1.objective == f2.objective


class TestSolverConfigValidation:
    def test_bad_mode(self):
        with pytest.raises(InputError):
            SolverConfig(mode="diag", q=0.0, alpha=1.0, beta=1.0, rho=1.0)

    def test_bad_q(self):
        with pytest.raises(InputError):
            SolverConfig(mode="row", q=0.25, alpha=1.0, beta=1.0, rho=1.0)

    @pytest.mark.parametrize("field", ["alpha", "beta", "rho", "mu", "tol"])
    def test_nonpositive_rejected(self, field):
        kwargs = dict(mode="row", q=0.0, alpha=1.0, beta=1.0, rho=1.0)
        kwargs[field] = 0.0
        with pytest.raises(InputError):
            SolverConfig(**kwargs)
