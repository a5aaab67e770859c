import math

import numpy as np
import pytest

from hamest.constants import TOL
from hamest.errors import ValidationError
from hamest.linalg import PureState, haar_state
from hamest.model import hamiltonian, make_model
from hamest.probe import (Schedule, evolve, growth_audit, mes, qfi_matrix,
                          trotter_feedback_schedule)
from hamest.verify import random_schedule


def free_schedule(d, tau, r=1, initial=None):
    initial = mes(d) if initial is None else initial
    return Schedule(r=r, initial=initial, steps=((tau, None),))


class TestMes:
    def test_d2(self):
        assert np.allclose(mes(2).amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2))

    def test_d3(self):
        amps = mes(3).amplitudes
        assert amps.size == 9
        on = amps.reshape(3, 3).diagonal()
        assert np.allclose(on, np.full(3, 1 / math.sqrt(3)))
        assert abs(np.linalg.norm(amps) - 1) < 1e-12

    def test_trace_identity(self):
        rng = np.random.default_rng(8)
        for d in (2, 3, 4):
            phi = mes(d).amplitudes
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            val = np.vdot(phi, np.kron(a, np.eye(d)) @ phi)
            assert abs(val - np.trace(a) / d) < 1e-12


class TestEvolve:
    def test_zero_schedule_is_identity(self):
        model = make_model("full", 2)
        sched = Schedule(r=1, initial=mes(2), steps=((0.0, None), (0.0, None)))
        out = evolve(model, [0.1, 0.2, 0.3], sched)
        assert np.allclose(out.amplitudes, mes(2).amplitudes)

    def test_phase_model_closed_form(self):
        model = make_model("phase", 2)
        tau, theta = 0.8, 0.6
        out = evolve(model, [theta], free_schedule(2, tau))
        phase = tau * theta / math.sqrt(2)
        expect = np.array([np.exp(-1j * phase), 0, 0, np.exp(1j * phase)]) / math.sqrt(2)
        assert np.max(np.abs(out.amplitudes - expect)) < 1e-12

    def test_two_channel_swap_reduction(self):
        # r=2 free interval t == one channel for 2t with channel-permuting kicks
        model = make_model("full", 2)
        rng = np.random.default_rng(1)
        init = PureState(factors=(2, 2, 2), amplitudes=haar_state(8, rng))
        theta = rng.standard_normal(3) * 0.4
        t = 0.6
        two = evolve(model, theta, Schedule(r=2, initial=init, steps=((t, None),)))
        swap = np.zeros((8, 8))
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    swap[j * 4 + i * 2 + k, i * 4 + j * 2 + k] = 1.0
        one = evolve(model, theta, Schedule(
            r=1, initial=init, steps=((t, None), (t, swap), (0.0, swap))))
        assert np.max(np.abs(two.amplitudes - one.amplitudes)) < 1e-12

    def test_norm_preserved_random_schedules(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            model = make_model("full", int(rng.choice([2, 3])))
            sched = random_schedule(model, rng)
            out = evolve(model, rng.standard_normal(model.m) * 0.3, sched)
            assert abs(np.linalg.norm(out.amplitudes) - 1) < TOL.state_norm_atol

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            evolve(make_model("full", 3), np.zeros(8), free_schedule(2, 1.0))


class TestQfi:
    def test_saturation_full_model(self):
        for d in (2, 3):
            model = make_model("full", d)
            for tau in (0.5, 1.0):
                rep = qfi_matrix(model, np.zeros(model.m), free_schedule(d, tau))
                assert np.max(np.abs(rep.J - 4 / d * tau ** 2 * np.eye(model.m))) < 1e-6

    def test_zero_time(self):
        model = make_model("full", 2)
        rep = qfi_matrix(model, [0.4, -0.2, 0.1], free_schedule(2, 0.0))
        assert np.max(np.abs(rep.J)) < 1e-12

    def test_offdiag_closed_form(self):
        # two-level reduction: J = 4 t^2 (<X^2> - <X>^2) = 2 t^2 on |e_d>
        model = make_model("offdiag", 2)
        init = PureState(factors=(2, 1), amplitudes=np.array([0.0, 1.0]))
        t = 1.3
        rep = qfi_matrix(model, [0.0], free_schedule(2, t, initial=init))
        assert abs(rep.trace_J - 2 * t * t) < 1e-6
        assert abs(rep.trace_J - rep.bound_4ct2) < 1e-4 * rep.bound_4ct2

    def test_gauge_invariance(self):
        model = make_model("full", 2)
        theta = [0.2, -0.1, 0.4]
        rep0 = qfi_matrix(model, theta, free_schedule(2, 0.8))
        phased = Schedule(r=1, initial=mes(2),
                          steps=((0.8, None), (0.0, np.exp(1.1j) * np.eye(4))))
        rep1 = qfi_matrix(model, theta, phased)
        assert np.max(np.abs(rep0.J - rep1.J)) < 1e-8

    def test_fd_step_halving(self):
        model = make_model("full", 3)
        theta = np.linspace(-0.3, 0.4, model.m)
        sched = free_schedule(3, 1.1)
        j1 = qfi_matrix(model, theta, sched).J
        j2 = qfi_matrix(model, theta, sched, step=TOL.qfi_step / 2).J
        assert np.max(np.abs(j1 - j2)) / np.max(np.abs(j1)) < 1e-6

    def test_mes_correlation_matrix(self):
        model = make_model("full", 3)
        rep = qfi_matrix(model, np.zeros(8), free_schedule(3, 0.0))
        assert np.max(np.abs(rep.G - np.eye(8) / 3)) < 1e-10

    def test_spherical_bound_reported(self):
        rep = qfi_matrix(make_model("full", 2), np.zeros(3), free_schedule(2, 1.0))
        assert rep.spherical_bound == pytest.approx(4 * 3 / 2 * 1.0 ** 2)
        rep2 = qfi_matrix(make_model("offdiag", 3), np.zeros(2),
                          free_schedule(3, 1.0))
        assert rep2.spherical_bound is None

    def test_r2_time_accounting(self):
        # entangling two channels doubles the effective time in the bound
        model = make_model("full", 2)
        rng = np.random.default_rng(3)
        init = PureState(factors=(2, 2, 2), amplitudes=haar_state(8, rng))
        rep = qfi_matrix(model, [0.1, 0.0, -0.2],
                         Schedule(r=2, initial=init, steps=((0.7, None),)))
        assert rep.bound_4ct2 == pytest.approx(4 * model.c * (2 * 0.7) ** 2)
        assert rep.trace_J <= rep.bound_4ct2 * (1 + 1e-4)


class TestGrowthAudit:
    def test_initial_point_zero(self):
        model = make_model("full", 2)
        rows = growth_audit(model, [0.3, 0.1, 0.0], free_schedule(2, 1.0), 4)
        t0, trj0, _, bound0 = rows[0]
        assert t0 == 0.0 and trj0 < 1e-10 and bound0 == 0.0

    def test_saturating_case_ratio_one(self):
        model = make_model("offdiag", 3)
        init = np.zeros(3)
        init[2] = 1.0
        sched = free_schedule(3, 1.5, initial=PureState((3, 1), init))
        rows = growth_audit(model, np.zeros(2), sched, 6)
        for t, trj, _, bound in rows[1:]:
            assert abs(trj / bound - 1.0) < 1e-4

    def test_random_schedules_no_violation(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            model = make_model("full", int(rng.choice([2, 3])))
            theta = rng.standard_normal(model.m)
            theta *= rng.random() / np.linalg.norm(theta)
            growth_audit(model, theta, random_schedule(model, rng), 4)

    def test_needs_two_points(self):
        with pytest.raises(ValidationError):
            growth_audit(make_model("full", 2), np.zeros(3), free_schedule(2, 1.0), 1)


class TestTrotter:
    def test_matches_exact_shifted_evolution(self):
        model = make_model("full", 2)
        rng = np.random.default_rng(9)
        theta = rng.standard_normal(3) * 0.5
        theta_star = theta + rng.standard_normal(3) * 0.1
        tau = 1.2
        sched = trotter_feedback_schedule(model, theta_star, tau, mes(2))
        approx = evolve(model, theta, sched)
        exact = evolve(model, theta - theta_star, free_schedule(2, tau))
        assert np.max(np.abs(approx.amplitudes - exact.amplitudes)) < 1e-6

    def test_explicit_slice_count(self):
        model = make_model("phase", 2)
        sched = trotter_feedback_schedule(model, [0.3], 0.5, mes(2), slices=4)
        assert len(sched.steps) == 5  # k slices plus the closing half kick
        assert sched.total_time == pytest.approx(0.5)
