import math

import numpy as np
import pytest

from hamest.errors import BranchCutError, ResourceLimitError, ValidationError
from hamest.linalg import hermitian_expm, hs_inner
from hamest.model import hamiltonian, make_model
from hamest.symmetric import (collective, collective_ladder,
                              collective_trace_moments, f2_coeff, f4_coeff,
                              f22_coeff, magnus_operator, occupation_space,
                              occupations, sym_dim, sym_space)

SZ = np.diag([1.0, -1.0]).astype(complex)


def random_hermitian(d, rng, traceless=False):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.5 * (z + z.conj().T)
    if traceless:
        h -= np.trace(h) / d * np.eye(d)
    return h


class TestSymSpace:
    @pytest.mark.parametrize("d,r,dim", [(2, 2, 3), (3, 2, 6), (2, 4, 5), (3, 3, 10)])
    def test_dimension(self, d, r, dim):
        assert sym_dim(d, r) == dim
        assert sym_space(d, r).D == dim

    def test_isometry_orthonormal(self):
        space = sym_space(2, 4)
        assert np.max(np.abs(space.isometry.conj().T @ space.isometry
                             - np.eye(5))) < 1e-12

    def test_occupation_order(self):
        assert occupations(2, 2) == [(2, 0), (1, 1), (0, 2)]

    def test_tensor_budget_guard(self):
        with pytest.raises(ResourceLimitError):
            sym_space(2, 13)
        # the occupation route keeps working far beyond the tensor budget
        assert occupation_space(2, 64).D == 65

    def test_ladder_budget_guard(self):
        with pytest.raises(ResourceLimitError):
            occupation_space(2, 5000)


class TestCollective:
    def test_identity_gives_r(self):
        space = sym_space(3, 2)
        assert np.allclose(collective(space, np.eye(3)), 2 * np.eye(6), atol=1e-12)

    def test_worked_spin_example(self):
        space = sym_space(2, 2)
        cz = collective(space, SZ / math.sqrt(2))
        assert np.allclose(cz, np.diag([math.sqrt(2), 0.0, -math.sqrt(2)]),
                           atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(0)
        space = sym_space(2, 3)
        a, b = random_hermitian(2, rng), random_hermitian(2, rng)
        lhs = collective(space, a + b)
        assert np.max(np.abs(lhs - collective(space, a) - collective(space, b))) < 1e-12

    def test_ladder_matches_isometry(self):
        rng = np.random.default_rng(1)
        for d, r in [(2, 2), (2, 4), (3, 2), (3, 4)]:
            dense = sym_space(d, r)
            sparse = occupation_space(d, r)
            for _ in range(5):
                h = random_hermitian(d, rng)
                assert np.max(np.abs(collective(dense, h)
                                     - collective_ladder(sparse, h))) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            collective(sym_space(2, 2), np.eye(3))

    def test_restriction_identity(self):
        rng = np.random.default_rng(2)
        for d, r in [(2, 3), (3, 2), (2, 4)]:
            space = sym_space(d, r)
            h = random_hermitian(d, rng)
            tau = 0.37
            lhs = hermitian_expm(collective(space, h), tau)
            u = hermitian_expm(h, tau)
            ur = u
            for _ in range(r - 1):
                ur = np.kron(ur, u)
            rhs = space.isometry.conj().T @ ur @ space.isometry
            assert np.max(np.abs(lhs - rhs)) < 1e-9


class TestTraceMoments:
    def test_worked_second_moment(self):
        mom = collective_trace_moments(sym_space(2, 2), SZ / math.sqrt(2))
        assert mom["m2_actual"] == pytest.approx(4 / 3, abs=1e-12)
        assert mom["m2_predicted"] == pytest.approx(4 / 3, abs=1e-12)

    def test_worked_fourth_moment(self):
        mom = collective_trace_moments(sym_space(2, 2), SZ / math.sqrt(2))
        # spectrum (sqrt2, 0, -sqrt2): F4 * 1/2 + F22 * 1 = 10/6 + 1 = 8/3
        assert mom["F4"] == pytest.approx(10 / 3, abs=1e-12)
        assert mom["F22"] == pytest.approx(1.0, abs=1e-12)
        assert mom["m4_actual"] == pytest.approx(8 / 3, abs=1e-12)
        assert mom["m4_predicted"] == pytest.approx(8 / 3, abs=1e-12)

    def test_single_channel_reduction(self):
        # r = 1: coefficients collapse to F2 = F4 = 1/d, F22 = 0, so the
        # normalized moments reduce to Tr X^2 / d and Tr X^4 / d
        for d in (2, 3):
            space = sym_space(d, 1)
            assert f2_coeff(d, 1) == pytest.approx(1 / d)
            assert f4_coeff(d, 1) == pytest.approx(1 / d)
            assert f22_coeff(d, 1) == 0.0
            x = random_hermitian(d, np.random.default_rng(d), traceless=True)
            mom = collective_trace_moments(space, x)
            assert mom["m2_actual"] == pytest.approx(
                float(np.trace(x @ x).real) / d, abs=1e-12)
            assert mom["m4_actual"] == pytest.approx(
                float(np.trace(x @ x @ x @ x).real) / d, abs=1e-12)

    def test_identities_random_grid(self):
        rng = np.random.default_rng(3)
        for d in (2, 3):
            for r in (1, 2, 3, 4):
                space = sym_space(d, r)
                for _ in range(10):
                    x = random_hermitian(d, rng, traceless=True)
                    mom = collective_trace_moments(space, x)
                    assert abs(mom["m2_actual"] - mom["m2_predicted"]) < 1e-9
                    assert abs(mom["m4_actual"] - mom["m4_predicted"]) < 1e-9

    def test_hs_norm_scaling(self):
        rng = np.random.default_rng(4)
        for d, r in [(2, 3), (3, 4)]:
            space = sym_space(d, r)
            x = random_hermitian(d, rng, traceless=True)
            cx = collective(space, x)
            assert hs_inner(cx, cx).real == pytest.approx(
                space.D * f2_coeff(d, r) * hs_inner(x, x).real, rel=1e-9)

    def test_cross_orthogonality(self):
        model = make_model("full", 2)
        space = sym_space(2, 3)
        ops = [collective(space, x) for x in model.generators]
        for j, a in enumerate(ops):
            for k, b in enumerate(ops):
                expect = f2_coeff(2, 3) if j == k else 0.0
                assert hs_inner(a, b).real / space.D == pytest.approx(
                    expect, abs=1e-9)

    def test_rejects_traced_input(self):
        with pytest.raises(ValidationError):
            collective_trace_moments(sym_space(2, 2), np.eye(2))


class TestMagnus:
    def test_perfect_feedback(self):
        h = SZ * 0.4
        assert np.max(np.abs(magnus_operator(h, h, 0.9))) < 1e-12

    def test_commuting_exact(self):
        h_star = np.diag([0.3, -0.3]).astype(complex)
        h_theta = np.diag([0.1, -0.1]).astype(complex)
        m = magnus_operator(h_star, h_theta, 0.7)
        assert np.max(np.abs(m - (h_theta - h_star))) < 1e-12

    def test_defining_property(self):
        rng = np.random.default_rng(5)
        h_star = random_hermitian(3, rng) * 0.3
        h_theta = random_hermitian(3, rng) * 0.3
        tau = 0.4
        m = magnus_operator(h_star, h_theta, tau)
        lhs = hermitian_expm(m, tau)
        rhs = hermitian_expm(h_star, -tau) @ hermitian_expm(h_theta, tau)
        assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_small_time_distance_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            h_star = random_hermitian(2, rng)
            h_theta = random_hermitian(2, rng)
            nrm = max(np.linalg.norm(h_star, 2), np.linalg.norm(h_theta, 2))
            tau = 0.2 * rng.random() / nrm
            if tau * nrm < 1e-3:
                continue
            m = magnus_operator(h_star, h_theta, tau)
            diff = m - (h_theta - h_star)
            lhs = math.sqrt(hs_inner(diff, diff).real)
            bound = (2.0 * tau * math.sqrt(hs_inner(h_star, h_star).real)
                     * math.sqrt(hs_inner(h_theta - h_star,
                                          h_theta - h_star).real))
            assert lhs <= bound + 1e-12

    def test_branch_cut_propagates(self):
        with pytest.raises(BranchCutError):
            magnus_operator(np.zeros((2, 2)), SZ * np.pi, 1.0)

    def test_zero_tau_rejected(self):
        with pytest.raises(ValidationError):
            magnus_operator(SZ, SZ, 0.0)
