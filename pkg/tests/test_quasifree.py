import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfchain import quasifree as qf
from qfchain.model import InvalidParamsError, ModelParams, kappa

from conftest import desk_params, valid_param_grid
from oracles import random_probe, stepwise_symbol, zeta_ode_propagator


class TestPropagator:
    def test_zero_time_is_identity(self, desk):
        np.testing.assert_array_equal(qf.propagator(desk, 1, 0.0), np.eye(2))

    def test_decoupled_closed_form(self):
        p = ModelParams(1.0, 0.5, 0.0, 1.0, 0.1, 0.4, 1)
        U = qf.propagator(p, 1, 1.0)
        expected = np.diag([np.exp(1j - 0.15), np.exp(0.5j)])
        np.testing.assert_allclose(U, expected, atol=1e-15)
        assert abs(U[0, 0]) == pytest.approx(0.86070797642505781, rel=1e-14)

    def test_matches_ode_integration(self, desk):
        ref = zeta_ode_propagator(desk, 1, [0.3, 1.0])
        for t, Z in ref.items():
            assert np.abs(qf.propagator(desk, 1, t) - Z).max() <= 1e-9

    def test_energy_shift_construction(self):
        p = desk_params(N=3)
        for n in (1, 2, 3):
            for t in (0.1, 0.7, 2.0):
                U_shift = qf.expm(1j * t * qf.shifted_energy_generator(p, n))
                assert np.abs(qf.propagator(p, n, t) - U_shift).max() <= 1e-12

    def test_rejects_invalid(self, desk):
        with pytest.raises(ValueError):
            qf.propagator(desk, 1, -0.1)
        with pytest.raises(ValueError):
            qf.propagator(desk, 2, 0.1)
        with pytest.raises(InvalidParamsError):
            qf.propagator(desk_params(eta=0.9), 1, 0.1)

    @settings(max_examples=50, deadline=None)
    @given(s=st.floats(0, 2), t=st.floats(0, 2), n=st.integers(1, 3))
    def test_semigroup(self, s, t, n):
        p = desk_params(N=3)
        lhs = qf.propagator(p, n, s + t)
        rhs = qf.propagator(p, n, s) @ qf.propagator(p, n, t)
        assert np.linalg.norm(lhs - rhs) <= 1e-10

    def test_contraction_on_grid(self):
        grid = valid_param_grid()
        assert len(grid) >= 100
        for p in grid:
            for n in (1, 2):
                for frac in (0.1, 0.5, 1.0):
                    assert qf.max_singular_value(qf.propagator(p, n, frac * p.tau)) <= 1 + 1e-12


class TestMaps:
    def test_one_step_identity(self, desk):
        m = qf.one_step_map(desk, 1, 0.0)
        np.testing.assert_array_equal(m.U, np.eye(2))
        assert m.kappa == kappa(desk)

    def test_zero_gain_kappa_one(self):
        assert qf.one_step_map(desk_params(sigma_plus=0.0), 1, 0.5).kappa == 1.0

    def test_invariants(self):
        for p in valid_param_grid()[::7]:
            m = qf.one_step_map(p, 2, p.tau)
            m.check()

    def test_check_rejects_expanding(self):
        with pytest.raises(ValueError, match="contraction"):
            qf.QuasiFreeMap(1.1 * np.eye(2), 1.0).check()


class TestGamma:
    def test_zero_vector(self, desk):
        assert qf.gamma(qf.one_step_map(desk, 1, 0.7), np.zeros(2)) == 1.0

    def test_decoupled_value(self):
        p = ModelParams(1.0, 0.5, 0.0, 1.0, 0.1, 0.4, 1)
        m = qf.one_step_map(p, 1, 1.0)
        assert qf.gamma(m, [1, 0]) == pytest.approx(0.89763441120077677, rel=1e-13)

    def test_identity_gives_one(self, desk, rng):
        m = qf.one_step_map(desk, 1, 0.0)
        for _ in range(10):
            assert qf.gamma(m, rng.normal(size=2) + 1j * rng.normal(size=2)) == 1.0

    def test_bounds(self, rng):
        for p in valid_param_grid()[::11]:
            m = qf.one_step_map(p, 1, 0.8 * p.tau)
            for _ in range(1000):
                z = rng.normal(size=3) + 1j * rng.normal(size=3)
                assert 0 < qf.gamma(m, z) <= 1

    def test_huge_vector_underflows(self, desk):
        m = qf.one_step_map(desk, 1, 1.0)
        assert qf.gamma(m, [1e200, 0]) == 0.0

    def test_dimension_mismatch(self, desk):
        with pytest.raises(ValueError):
            qf.gamma(qf.one_step_map(desk, 1, 0.2), np.zeros(3))

    def test_apply_to_weyl(self, desk, rng):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        g, w = qf.apply_to_weyl(qf.identity_map(2, 5 / 3), z)
        assert g == 1.0
        np.testing.assert_array_equal(w, z)
        g, w = qf.apply_to_weyl(qf.one_step_map(desk, 1, 0.4), np.zeros(2))
        assert g == 1.0 and not w.any()


class TestCompose:
    def test_identity_left(self, desk):
        m = qf.one_step_map(desk, 1, 0.3)
        c = qf.compose(qf.identity_map(2, m.kappa), m)
        np.testing.assert_array_equal(c.U, m.U)

    def test_semigroup_via_compose(self, desk):
        a, b = qf.one_step_map(desk, 1, 0.3), qf.one_step_map(desk, 1, 0.45)
        both = qf.one_step_map(desk, 1, 0.75)
        assert np.abs(qf.compose(a, b).U - both.U).max() <= 1e-10

    def test_chain_matches_one_shot(self, rng):
        p = desk_params(N=4)
        maps = [qf.one_step_map(p, n, p.tau) for n in range(1, 5)]
        total = maps[0]
        for m in maps[1:]:
            total = qf.compose(total, m)
        product = maps[0].U @ maps[1].U @ maps[2].U @ maps[3].U
        np.testing.assert_allclose(total.U, product, rtol=0, atol=1e-15)
        for _ in range(100):
            z = rng.normal(size=5) + 1j * rng.normal(size=5)
            g, w = stepwise_symbol(maps, z)
            g1, w1 = qf.apply_to_weyl(total, z)
            assert abs(g - g1) <= 1e-12 * g1
            assert np.linalg.norm(w - w1) <= 1e-12 * np.linalg.norm(w1)

    def test_kappa_mismatch(self, desk):
        other = desk_params(sigma_plus=0.0)
        with pytest.raises(ValueError, match="kappa"):
            qf.compose(qf.one_step_map(desk, 1, 0.1), qf.one_step_map(other, 1, 0.1))

    def test_dimension_mismatch(self, desk):
        with pytest.raises(ValueError, match="dimension"):
            qf.compose(qf.one_step_map(desk, 1, 0.1), qf.one_step_map(desk_params(N=2), 1, 0.1))


class TestRepeatedInteraction:
    def test_zero(self):
        m = qf.repeated_interaction_map(desk_params(N=3), 0.0)
        np.testing.assert_array_equal(m.U, np.eye(4))

    def test_single_window(self):
        p = desk_params(N=3)
        np.testing.assert_array_equal(qf.repeated_interaction_map(p, 1.0).U, qf.one_step_map(p, 1, 1.0).U)

    def test_two_and_a_half_windows(self, rng):
        p = desk_params(N=3)
        m = qf.repeated_interaction_map(p, 2.5)
        steps = [qf.one_step_map(p, 1, 1.0), qf.one_step_map(p, 2, 1.0), qf.one_step_map(p, 3, 0.5)]
        np.testing.assert_allclose(m.U, steps[0].U @ steps[1].U @ steps[2].U, atol=1e-15)
        for _ in range(50):
            z = rng.normal(size=4) + 1j * rng.normal(size=4)
            g, w = stepwise_symbol(steps, z)
            assert abs(qf.gamma(m, z) - g) <= 1e-12 * g
            assert np.linalg.norm(m.U @ z - w) <= 1e-12 * np.linalg.norm(w)

    def test_boundary_belongs_to_next_window(self):
        p = desk_params(N=3)
        assert qf.window_of(p, 1.0) == (2, 0.0)
        assert qf.window_of(p, 0.999) == (1, 0.999)

    @pytest.mark.parametrize("t", [-0.1, 3.0, 3.5])
    def test_out_of_range(self, t):
        with pytest.raises(ValueError):
            qf.repeated_interaction_map(desk_params(N=3), t)


class TestCovariance:
    def test_gibbs_value(self):
        X = qf.gibbs_covariance(1.0, 1.0, 2).X
        np.testing.assert_allclose(X, 2.1639534137386528 * np.eye(3), rtol=1e-14)

    def test_gibbs_mixed(self):
        X = qf.gibbs_covariance(2.0, 1.0, 2).X
        assert X[0, 0] == pytest.approx((1 + math.exp(-2)) / (1 - math.exp(-2)))
        assert X[1, 1] == X[2, 2] == pytest.approx(2.1639534137386528)
        assert np.count_nonzero(X - np.diag(np.diag(X))) == 0

    def test_zero_temperature(self):
        np.testing.assert_allclose(qf.gibbs_covariance(60.0, 60.0, 1).X, np.eye(2), atol=1e-20)
        np.testing.assert_array_equal(qf.gibbs_covariance(math.inf, math.inf, 1).X, np.eye(2))

    def test_rejects_bad_temperature(self):
        with pytest.raises(ValueError):
            qf.gibbs_covariance(0.0, 1.0, 1)

    def test_stationary_matched_state(self):
        p = desk_params(N=3)
        k = kappa(p)
        s = qf.CovarianceState(k * np.eye(4))
        for t in (0.0, 0.4, 1.0, 2.5, 2.99):
            out = qf.evolve_covariance(qf.repeated_interaction_map(p, t), s)
            assert np.abs(out.X - k * np.eye(4)).max() <= 1e-13

    def test_matched_gibbs_is_kappa(self, desk):
        beta = math.log(desk.sigma_minus / desk.sigma_plus)
        np.testing.assert_allclose(qf.gibbs_covariance(beta, beta, 1).X, kappa(desk) * np.eye(2), rtol=1e-14)

    def test_identity_map(self):
        s = qf.gibbs_covariance(2.0, 1.0, 2)
        out = qf.evolve_covariance(qf.identity_map(3, 5 / 3), s)
        np.testing.assert_array_equal(out.X, s.X)

    def test_composite_matches_closed_product_formula(self):
        # N-step covariance written as U^H [(c - k) I + (c0 - c) P0] U + k I
        p = desk_params(N=3)
        b0, b = 2.0, 1.0
        m = qf.repeated_interaction_map(p, 2.999999)
        m_full = qf.compose(qf.compose(qf.one_step_map(p, 1, 1.0), qf.one_step_map(p, 2, 1.0)),
                            qf.one_step_map(p, 3, 1.0))
        c0, c, k = qf.coth_half(b0), qf.coth_half(b), kappa(p)
        P0 = np.zeros((4, 4))
        P0[0, 0] = 1
        U = m_full.U
        closed = U.conj().T @ ((c - k) * np.eye(4) + (c0 - c) * P0) @ U + k * np.eye(4)
        stepwise = qf.gibbs_covariance(b0, b, 3)
        for n in (1, 2, 3):
            stepwise = qf.evolve_covariance(qf.one_step_map(p, n, 1.0), stepwise)
        np.testing.assert_allclose(stepwise.X, closed, atol=1e-13)
        assert np.abs(qf.evolve_covariance(m, qf.gibbs_covariance(b0, b, 3)).X - closed).max() < 1e-5

    def test_physicality_preserved(self, rng):
        grid = valid_param_grid(N=2)
        for i in range(100):
            p = grid[i % len(grid)]
            A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            s = qf.CovarianceState(np.eye(3) + A @ A.conj().T * rng.uniform(0, 2))
            m = qf.one_step_map(p, 1 + i % 2, rng.uniform(0, 2) * p.tau)
            out = qf.evolve_covariance(m, s)
            out.check()
            assert out.min_eig_excess() >= -1e-10

    def test_dimension_mismatch(self, desk):
        with pytest.raises(ValueError):
            qf.evolve_covariance(qf.one_step_map(desk, 1, 0.1), qf.gibbs_covariance(1, 1, 2))


class TestObservables:
    def test_char_function_values(self):
        assert qf.char_function(qf.CovarianceState(np.eye(3)), np.zeros(3)) == 1.0
        assert qf.char_function(qf.CovarianceState(np.eye(2)), [0.6, 0.8j]) == pytest.approx(
            0.77880078307140487, rel=1e-14)
        g = qf.gibbs_covariance(5.0, 1.0, 1)
        assert qf.char_function(g, [0, 1]) == pytest.approx(0.58217257567009774, rel=1e-13)

    def test_occupations(self, desk):
        np.testing.assert_array_equal(qf.occupations(qf.CovarianceState(np.eye(3))), 0)
        np.testing.assert_allclose(qf.occupations(qf.gibbs_covariance(1, 1, 1)), 0.58197670686932642,
                                   rtol=1e-13)
        k = kappa(desk)
        np.testing.assert_allclose(qf.occupations(qf.CovarianceState(k * np.eye(2))), 1 / 3, rtol=1e-14)


class TestCPCertificate:
    def test_grid_maps_are_cp(self):
        for p in valid_param_grid():
            for n in (1, 2):
                cert = qf.cp_certificate(qf.one_step_map(p, n, p.tau), tol=1e-12)
                assert cert.is_cp, cert.as_dict()

    def test_identity(self):
        cert = qf.cp_certificate(qf.identity_map(3, 1.0))
        assert cert.is_cp
        np.testing.assert_array_equal(cert.defect_eigenvalues, 0)
        assert cert.effective_beta == math.inf

    def test_expanding_counterexample(self):
        U = np.diag([1.1, 0.5])
        assert qf.max_singular_value(U) == pytest.approx(1.1)
        cert = qf.cp_certificate(qf.QuasiFreeMap(U, 5 / 3))
        assert not cert.is_cp
        assert cert.min_defect_eigenvalue == pytest.approx(1 - 1.21)
        assert cert.as_dict()["verdict"] == "NOT CP"

    def test_kappa_below_one_fails(self):
        assert not qf.cp_certificate(qf.QuasiFreeMap(0.5 * np.eye(2), 0.9)).is_cp

    def test_defect_map_reproduces_gamma(self, desk, rng):
        m = qf.repeated_interaction_map(desk_params(N=3), 2.2)
        C = qf.defect_map(m)
        for _ in range(20):
            a = rng.normal(size=4) + 1j * rng.normal(size=4)
            b = rng.normal(size=4) + 1j * rng.normal(size=4)
            lhs = np.vdot(C @ a, C @ b)
            rhs = np.vdot(a, b) - np.vdot(m.U @ a, m.U @ b)
            assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))
            gibbs = math.exp(-0.25 * m.kappa * np.linalg.norm(C @ a) ** 2)
            assert qf.gamma(m, a) == pytest.approx(gibbs, rel=1e-10)
        cert = qf.cp_certificate(m)
        assert qf.coth_half(cert.effective_beta) == pytest.approx(m.kappa)
        assert cert.effective_beta == pytest.approx(math.log(desk.sigma_minus / desk.sigma_plus))
