import math

import numpy as np
import pytest

from hamest.errors import BranchCutError, ValidationError
from hamest.linalg import (PureState, haar_state, haar_unitary, hermitian_expm,
                           hs_inner, su_basis, unitary_principal_log)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


class TestHermitianExpm:
    def test_diagonal_eigenphases(self):
        u = hermitian_expm(np.diag([1.0, -1.0]), math.pi)
        assert np.allclose(u, -np.eye(2), atol=1e-12)

    def test_zero_hamiltonian(self):
        assert np.allclose(hermitian_expm(np.zeros((3, 3)), 2.7), np.eye(3))

    def test_pauli_x_half_turn(self):
        # spectral decomposition by hand: exp(-i (pi/2) sx) = -i sx
        u = hermitian_expm(SX / math.sqrt(2), math.sqrt(2) * math.pi / 2)
        assert np.allclose(u, -1j * SX, atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            hermitian_expm(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)

    def test_group_property(self):
        rng = np.random.default_rng(3)
        z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = 0.5 * (z + z.conj().T)
        lhs = hermitian_expm(h, 0.4) @ hermitian_expm(h, 0.9)
        assert np.max(np.abs(lhs - hermitian_expm(h, 1.3))) < 1e-10

    def test_unitarity(self):
        rng = np.random.default_rng(4)
        z = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        u = hermitian_expm(0.5 * (z + z.conj().T), 3.3)
        assert np.max(np.abs(u.conj().T @ u - np.eye(5))) < 1e-12


class TestPrincipalLog:
    def test_identity(self):
        assert np.max(np.abs(unitary_principal_log(np.eye(3)))) < 1e-12

    def test_diagonal_phases(self):
        u = np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)])
        m = unitary_principal_log(u)
        assert np.allclose(m, np.diag([np.pi / 2, -np.pi / 2]), atol=1e-12)

    def test_round_trip_small_generators(self):
        rng = np.random.default_rng(11)
        for dim in (2, 3, 4):
            for _ in range(20):
                z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
                h = 0.5 * (z + z.conj().T)
                h *= 0.9 * math.pi / np.linalg.norm(h, 2) * rng.random()
                m = unitary_principal_log(hermitian_expm(h, 1.0))
                assert np.max(np.abs(m - h)) < 1e-9

    def test_branch_cut_rejected(self):
        with pytest.raises(BranchCutError):
            unitary_principal_log(np.diag([-1.0, 1.0]).astype(complex))

    def test_eigenvalue_range(self):
        rng = np.random.default_rng(12)
        u = haar_unitary(4, rng)
        m = unitary_principal_log(u)
        w = np.linalg.eigvalsh(m)
        assert np.all(w > -np.pi) and np.all(w <= np.pi)
        assert np.max(np.abs(hermitian_expm(m, 1.0) - u)) < 1e-9


class TestSuBasis:
    def test_d2_is_scaled_paulis(self):
        basis = su_basis(2)
        assert len(basis) == 3
        expect = [SX, SY, SZ]
        for x, p in zip(basis, expect):
            assert np.allclose(x, p / math.sqrt(2), atol=1e-12)

    def test_d3_orthonormal(self):
        basis = su_basis(3)
        assert len(basis) == 8
        gram = np.array([[hs_inner(a, b) for b in basis] for a in basis])
        assert np.max(np.abs(gram - np.eye(8))) < 1e-12

    def test_d4_count_and_traceless(self):
        basis = su_basis(4)
        assert len(basis) == 15
        assert all(abs(np.trace(x)) < 1e-12 for x in basis)

    def test_spans_traceless_hermitian(self):
        rng = np.random.default_rng(21)
        for d in (2, 3, 4):
            basis = su_basis(d)
            z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            a = 0.5 * (z + z.conj().T)
            a -= np.trace(a) / d * np.eye(d)
            rebuilt = sum(hs_inner(x, a) * x for x in basis)
            assert np.max(np.abs(rebuilt - a)) < 1e-10


class TestHsInner:
    def test_normalization(self):
        assert abs(hs_inner(SZ / math.sqrt(2), SZ / math.sqrt(2)) - 1) < 1e-14

    def test_orthogonality(self):
        assert abs(hs_inner(SX / math.sqrt(2), SY / math.sqrt(2))) < 1e-14

    def test_identity_trace(self):
        assert abs(hs_inner(np.eye(3), np.eye(3)) - 3) < 1e-14

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            hs_inner(np.eye(2), np.eye(3))


class TestPureState:
    def test_norm_validation(self):
        with pytest.raises(ValidationError):
            PureState(factors=(2,), amplitudes=np.array([1.0, 1.0]))

    def test_factor_consistency(self):
        with pytest.raises(ValidationError):
            PureState(factors=(2, 3), amplitudes=np.zeros(5))

    def test_haar_state_normalized(self):
        rng = np.random.default_rng(0)
        psi = haar_state(6, rng)
        st = PureState(factors=(2, 3), amplitudes=psi)
        assert abs(np.linalg.norm(st.amplitudes) - 1) < 1e-12
