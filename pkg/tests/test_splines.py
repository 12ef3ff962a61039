"""Biorthogonal reduction and semi-norm spline fitting tests.

Independent references used here: the classic smoothing block system
[[K + lam I, V], [V^T, 0]] with the full representer Gram K, a dense
whole-grid normal-equation solve, and a subgradient solve of the gTV
objective directly on grid functions.
"""

import numpy as np
import pytest

from banachrep.oracle import GenericConvexProblem, solve_generic
from banachrep.splines import (
    NullSpaceSystem,
    build_biortho,
    difference_operator,
    fit_gtv_spline,
    fit_hilbert_seminorm,
    green_operator,
    grid_null_system,
    nullspace_basis,
    projector_coeffs,
    reduce_measurements,
)


def block_system_oracle(nu, y, P, lam, L):
    """Smoothing fit through the classic block system with the full Gram."""
    K = nu @ np.linalg.pinv(L.T @ L) @ nu.T
    V = nu @ P
    M, N0 = V.shape
    lhs = np.block([[K + lam * np.eye(M), V], [V.T, np.zeros((N0, N0))]])
    rhs = np.concatenate([y, np.zeros(N0)])
    sol = np.linalg.solve(lhs, rhs)
    alpha, beta = sol[:M], sol[M:]
    f = np.linalg.pinv(L.T @ L) @ nu.T @ alpha + P @ beta
    return f


def dense_grid_oracle(nu, y, lam, L):
    """Direct normal equations over the whole grid."""
    return np.linalg.solve(nu.T @ nu + lam * L.T @ L, nu.T @ y)


class TestBuildBiortho:
    def test_two_by_one(self):
        sys = build_biortho(np.array([[1.0], [1.0]]))
        # complement of span{(1,1)} is span{(1,-1)}
        u = sys.U[:, 0]
        assert abs(abs(u @ np.array([1.0, -1.0])) - np.sqrt(2.0)) <= 1e-12
        assert sys.identity_error() <= 1e-12

    def test_canonical_columns(self):
        M, N0 = 5, 2
        V = np.eye(M)[:, :N0]
        sys = build_biortho(V)
        np.testing.assert_allclose(np.abs(sys.Vtilde), np.abs(V), atol=1e-12)
        assert sys.identity_error() <= 1e-12
        np.testing.assert_allclose(sys.Utilde.T @ sys.V, np.zeros((M - N0, N0)),
                                   atol=1e-14)

    def test_random_systems(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            V = rng.standard_normal((6, 2))
            sys = build_biortho(V)
            assert sys.identity_error() <= 1e-12
            assert np.max(np.abs(sys.Utilde.T @ sys.V)) <= 1e-12

    def test_rank_deficient_rejected(self):
        V = np.ones((4, 2))
        with pytest.raises(ValueError, match="well-posedness"):
            build_biortho(V)

    def test_pinned_dual_block(self):
        rng = np.random.default_rng(1)
        V = rng.standard_normal((6, 2))
        # a valid dual block: the default one, perturbed inside col(V)
        base = V @ np.linalg.inv(V.T @ V)
        sys = build_biortho(V, pinned_Vtilde=base)
        assert sys.identity_error() <= 1e-10
        np.testing.assert_allclose(sys.Vtilde, base, atol=1e-10)

    def test_pinned_dual_block_must_biorthonormalize(self):
        rng = np.random.default_rng(2)
        V = rng.standard_normal((5, 2))
        with pytest.raises(ValueError, match="biorthonormalize"):
            build_biortho(V, pinned_Vtilde=rng.standard_normal((5, 2)))


class TestReduceMeasurements:
    def test_degenerate_no_null_space(self):
        rng = np.random.default_rng(3)
        nu = rng.standard_normal((4, 10))
        sys = build_biortho(np.zeros((4, 0)))
        nu_t, pstar_t = reduce_measurements(nu, sys)
        np.testing.assert_array_equal(nu_t, nu)
        assert pstar_t.shape == (0, 10)

    def test_annihilates_null_space(self):
        rng = np.random.default_rng(4)
        G, M = 30, 6
        nu = rng.standard_normal((M, G))
        P = nullspace_basis(G, 2)
        sys = build_biortho(nu @ P)
        nu_t, _ = reduce_measurements(nu, sys)
        np.testing.assert_allclose(nu_t @ P, np.zeros((M - 2, 2)), atol=1e-10)
        # arbitrary null-space elements are invisible to the reduced rows
        p = P @ rng.standard_normal(2)
        np.testing.assert_allclose(nu_t @ p, np.zeros(M - 2), atol=1e-10)

    def test_reconstruction(self):
        rng = np.random.default_rng(5)
        G, M = 20, 6
        nu = rng.standard_normal((M, G))
        P = nullspace_basis(G, 1)
        sys = build_biortho(nu @ P)
        nu_t, pstar_t = reduce_measurements(nu, sys)
        recon = sys.U @ nu_t + sys.V @ pstar_t
        assert np.max(np.abs(nu - recon)) <= 1e-10

    def test_adapted_dual_functionals_from_sampling_rows(self):
        # the dual block pulls null-space dual functionals out of the
        # measurement rows themselves: pstar_tilde P = I, so they form a
        # valid NullSpaceSystem even for point-sampling measurements
        rng = np.random.default_rng(50)
        G, M = 40, 7
        idx = np.sort(rng.choice(G, size=M, replace=False))
        nu = np.zeros((M, G))
        nu[np.arange(M), idx] = 1.0
        P = nullspace_basis(G, 2)
        sys = build_biortho(nu @ P)
        _, pstar_t = reduce_measurements(nu, sys)
        adapted = NullSpaceSystem(basis=P, dual=pstar_t)
        b = rng.standard_normal(2)
        np.testing.assert_allclose(projector_coeffs(P @ b, adapted), b, atol=1e-10)


class TestGridOperators:
    def test_difference_green_inverse(self):
        for G, order in [(10, 1), (10, 2), (50, 1), (50, 2)]:
            L = difference_operator(G, order)
            Q = green_operator(G, order)
            np.testing.assert_allclose(L @ Q, np.eye(G - order), atol=1e-12)
            P = nullspace_basis(G, order)
            np.testing.assert_allclose(L @ P, np.zeros((G - order, P.shape[1])),
                                       atol=1e-12)

    def test_step_and_ramp_columns(self):
        Q1 = green_operator(5, 1)
        np.testing.assert_array_equal(Q1[:, 0], [0, 1, 1, 1, 1])
        Q2 = green_operator(5, 2)
        np.testing.assert_array_equal(Q2[:, 0], [0, 0, 1, 2, 3])

    def test_null_system_biorthonormal(self):
        sysn = grid_null_system(40, 2)
        np.testing.assert_allclose(sysn.dual @ sysn.basis, np.eye(2), atol=1e-12)

    def test_invalid_dual_rejected(self):
        with pytest.raises(ValueError, match="biorthonormal"):
            NullSpaceSystem(basis=np.ones((5, 1)), dual=np.ones((1, 5)))


class TestProjectorCoeffs:
    def test_pure_basis_element(self):
        sysn = grid_null_system(20, 1)
        f = 2.0 * sysn.basis[:, 0]
        np.testing.assert_allclose(projector_coeffs(f, sysn), [2.0])

    def test_complement_maps_to_zero(self):
        rng = np.random.default_rng(6)
        sysn = grid_null_system(20, 2)
        f = rng.standard_normal(20)
        f -= sysn.basis @ (sysn.dual @ f)  # project out the null space
        np.testing.assert_allclose(projector_coeffs(f, sysn), np.zeros(2), atol=1e-12)

    def test_linearity_and_idempotence(self):
        rng = np.random.default_rng(7)
        sysn = grid_null_system(15, 2)
        s = rng.standard_normal(15)
        s -= sysn.basis @ (sysn.dual @ s)
        f = sysn.basis[:, 0] + s
        np.testing.assert_allclose(projector_coeffs(f, sysn), [1.0, 0.0], atol=1e-12)
        b = rng.standard_normal(2)
        np.testing.assert_allclose(projector_coeffs(sysn.basis @ b, sysn), b,
                                   atol=1e-12)


class TestHilbertSeminorm:
    def instance(self, rng, G=40, M=7, order=2):
        nu = rng.standard_normal((M, G))
        L = difference_operator(G, order)
        P = nullspace_basis(G, order)
        return nu, L, P

    def test_null_space_data_absorbed_free(self):
        rng = np.random.default_rng(8)
        nu, L, P = self.instance(rng)
        b_true = np.array([0.7, -0.3])
        y = nu @ (P @ b_true)
        fit = fit_hilbert_seminorm(nu, y, P, lam=0.5, operator=L)
        np.testing.assert_allclose(fit.null_coeffs, b_true, atol=1e-8)
        np.testing.assert_allclose(fit.dual_coeffs, np.zeros(5), atol=1e-8)
        assert float(np.sum((L @ fit.values) ** 2)) <= 1e-16

    def test_tiny_lambda_interpolates(self):
        rng = np.random.default_rng(9)
        nu, L, P = self.instance(rng, G=50, M=6)
        y = rng.standard_normal(6)
        fit = fit_hilbert_seminorm(nu, y, P, lam=1e-10, operator=L)
        assert np.linalg.norm(y - nu @ fit.values) <= 1e-6 * np.linalg.norm(y)

    def test_matches_block_system_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            nu, L, P = self.instance(rng, G=35, M=6)
            y = rng.standard_normal(6)
            lam = float(rng.uniform(0.05, 2.0))
            fit = fit_hilbert_seminorm(nu, y, P, lam=lam, operator=L)
            f_ref = block_system_oracle(nu, y, P, lam, L)
            scale = max(1.0, float(np.max(np.abs(f_ref))))
            np.testing.assert_allclose(fit.values, f_ref, atol=1e-8 * scale)

    def test_matches_dense_grid_oracle(self):
        rng = np.random.default_rng(11)
        nu, L, P = self.instance(rng, G=30, M=8, order=1)
        y = rng.standard_normal(8)
        fit = fit_hilbert_seminorm(nu, y, P, lam=0.7, operator=L)
        f_ref = dense_grid_oracle(nu, y, 0.7, L)
        np.testing.assert_allclose(fit.values, f_ref, atol=1e-8)

    def test_gram_override_reproduces_coefficients(self):
        rng = np.random.default_rng(12)
        nu, L, P = self.instance(rng, G=25, M=5, order=1)
        y = rng.standard_normal(5)
        sys = build_biortho(nu @ P)
        nu_t = sys.Utilde.T @ nu
        Gt = nu_t @ np.linalg.pinv(L.T @ L) @ nu_t.T
        fit_full = fit_hilbert_seminorm(nu, y, P, lam=0.3, operator=L)
        fit_gram = fit_hilbert_seminorm(nu, y, P, lam=0.3, gram_of_phi=Gt)
        np.testing.assert_allclose(fit_gram.dual_coeffs, fit_full.dual_coeffs,
                                   atol=1e-10)
        np.testing.assert_allclose(fit_gram.null_coeffs, fit_full.null_coeffs,
                                   atol=1e-10)
        assert fit_gram.values is None

    def test_normal_equation_residual_small(self):
        rng = np.random.default_rng(13)
        nu, L, P = self.instance(rng, G=30, M=7)
        y = rng.standard_normal(7)
        fit = fit_hilbert_seminorm(nu, y, P, lam=0.4, operator=L)
        assert fit.kkt_residual <= 1e-10 * (1.0 + np.linalg.norm(y))
        assert fit.converged

    def test_requires_operator_or_gram(self):
        with pytest.raises(ValueError, match="operator or gram"):
            fit_hilbert_seminorm(np.eye(3), np.ones(3), np.ones((3, 1)), 1.0)


class TestGtvSpline:
    def test_constant_data_reproduced_exactly(self):
        rng = np.random.default_rng(14)
        idx = rng.choice(200, size=8, replace=False)
        y = 3.5 * np.ones(8)
        fit = fit_gtv_spline(200, idx, y, "D", lam=0.5)
        np.testing.assert_allclose(fit.values, 3.5 * np.ones(200), atol=1e-10)
        assert fit.knots.size == 0
        np.testing.assert_array_equal(fit.innovation, np.zeros(199))

    def test_affine_data_reproduced_for_second_order(self):
        rng = np.random.default_rng(15)
        idx = np.sort(rng.choice(100, size=9, replace=False))
        grid = np.arange(100, dtype=float)
        y = 0.3 * grid[idx] - 1.2
        fit = fit_gtv_spline(100, idx, y, "D2", lam=1.0)
        assert np.linalg.norm(y - fit.values[idx]) <= 1e-10 * max(1, np.linalg.norm(y))
        assert fit.knots.size == 0

    def test_deadzone_gives_null_space_least_squares(self):
        rng = np.random.default_rng(16)
        idx = np.sort(rng.choice(120, size=10, replace=False))
        y = rng.standard_normal(10)
        fit = fit_gtv_spline(120, idx, y, "D2", lam=1e9)
        np.testing.assert_array_equal(fit.innovation, np.zeros(118))
        design = np.column_stack([np.ones(10), idx.astype(float)])
        coef = np.linalg.lstsq(design, y, rcond=None)[0]
        np.testing.assert_allclose(fit.values[idx], design @ coef, atol=1e-8)

    def test_knot_bound_first_order(self):
        rng = np.random.default_rng(17)
        for trial in range(25):
            idx = np.sort(rng.choice(200, size=8, replace=False))
            y = rng.standard_normal(8)
            lam = float(10.0 ** rng.uniform(-3, 1))
            fit = fit_gtv_spline(200, idx, y, "D", lam=lam)
            assert fit.knots.size <= 7, (trial, lam)

    def test_knot_bound_second_order(self):
        rng = np.random.default_rng(18)
        for trial in range(15):
            idx = np.sort(rng.choice(150, size=8, replace=False))
            y = rng.standard_normal(8)
            lam = float(10.0 ** rng.uniform(-3, 1))
            fit = fit_gtv_spline(150, idx, y, "D2", lam=lam)
            assert fit.knots.size <= 6, (trial, lam)

    def test_piecewise_constant_between_knots(self):
        rng = np.random.default_rng(19)
        idx = np.sort(rng.choice(80, size=6, replace=False))
        y = rng.standard_normal(6)
        fit = fit_gtv_spline(80, idx, y, "D", lam=0.2)
        diffs = np.flatnonzero(np.abs(np.diff(fit.values)) > 1e-10)
        assert set(diffs) <= set(fit.knots)

    def test_matches_subgradient_oracle_on_small_grid(self):
        rng = np.random.default_rng(20)
        G, M = 30, 6
        idx = np.sort(rng.choice(G, size=M, replace=False))
        H = np.zeros((M, G))
        H[np.arange(M), idx] = 1.0
        y = rng.standard_normal(M)
        lam = 0.3
        L = difference_operator(G, 1)

        def obj(f):
            r = y - H @ f
            return float(r @ r) + lam * float(np.sum(np.abs(L @ f)))

        def sub(f):
            return 2.0 * H.T @ (H @ f - y) + lam * L.T @ np.sign(L @ f)

        fit = fit_gtv_spline(G, idx, y, "D", lam=lam, tol=1e-10)
        _, ref = solve_generic(GenericConvexProblem(obj, sub, G),
                               iterations=300_000, seed=0)
        assert fit.objective <= ref + 1e-5 * (1 + abs(ref))

    def test_objective_recomputable_and_innovation_consistent(self):
        rng = np.random.default_rng(21)
        idx = np.sort(rng.choice(60, size=7, replace=False))
        y = rng.standard_normal(7)
        fit = fit_gtv_spline(60, idx, y, "D", lam=0.4)
        L = difference_operator(60, 1)
        np.testing.assert_allclose(L @ fit.values, fit.innovation, atol=1e-10)
        r = y - fit.values[idx]
        manual = float(r @ r) + 0.4 * float(np.sum(np.abs(L @ fit.values)))
        assert fit.objective == pytest.approx(manual, abs=1e-12)

    def test_matrix_measurements_accepted(self):
        rng = np.random.default_rng(22)
        H = rng.standard_normal((5, 40))
        y = rng.standard_normal(5)
        fit = fit_gtv_spline(40, H, y, "D", lam=0.5)
        assert fit.values.shape == (40,)
        assert fit.knots.size <= 4

    def test_rank_failure_raises(self):
        # a measurement matrix annihilating constants cannot pin the null space
        H = difference_operator(30, 1)[:5]
        with pytest.raises(ValueError, match="well-posedness"):
            fit_gtv_spline(30, H, np.ones(5), "D", lam=1.0)
