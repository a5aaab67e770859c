"""Probe preparation, feedback-schedule evolution, and Fisher information.

A :class:`Schedule` alternates free evolution under the unknown Hamiltonian
(acting identically on each of r driven channels) with arbitrary
parameter-independent feedback unitaries on the total space.  The quantum
Fisher information of the evolved probe is computed by central finite
differences of the evolution map, and :func:`growth_audit` checks the
square-root growth law Tr J(t) <= 4 c t_eff^2 on a time grid.

For r > 1 the information-bearing time is the one-channel equivalent
t_eff = r * t (an r-channel interval of length t can be reproduced by one
channel running for r t with channel-permuting feedback), and the
correlation matrix G uses the collective generators sum_slots X_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import AuditFailure, ValidationError
from .linalg import PureState, assert_unitary, hermitian_expm
from .model import HamiltonianModel, hamiltonian

__all__ = [
    "Schedule",
    "QfiReport",
    "mes",
    "evolve",
    "qfi_matrix",
    "growth_audit",
    "trotter_feedback_schedule",
]


@dataclass(frozen=True)
class Schedule:
    """Alternating evolution intervals and optional feedback unitaries.

    Each step applies its feedback unitary (if any) to the total space and
    then evolves the r driven factors for ``interval`` under the model
    Hamiltonian, so steps ``[(t0, None), (t1, V1), ..., (tn, Vn)]`` compose to
    ``U(tn) Vn ... U(t1) V1 U(t0)``.
    """

    r: int
    initial: PureState
    steps: tuple[tuple[float, np.ndarray | None], ...]

    def __post_init__(self):
        if self.r < 1 or self.r > len(self.initial.factors):
            raise ValidationError(f"channel count {self.r} inconsistent with "
                                  f"factors {self.initial.factors}")
        driven = set(self.initial.factors[:self.r])
        if len(driven) != 1:
            raise ValidationError("driven factors must share one dimension")
        steps = []
        for interval, v in self.steps:
            if interval < 0:
                raise ValidationError(f"negative interval {interval}")
            if v is not None:
                v = assert_unitary(v, name="feedback unitary")
                if v.shape[0] != self.initial.dim:
                    raise ValidationError("feedback unitary does not act on the total space")
            steps.append((float(interval), v))
        object.__setattr__(self, "steps", tuple(steps))

    @property
    def driven_dim(self) -> int:
        return self.initial.factors[0]

    @property
    def total_time(self) -> float:
        return sum(t for t, _ in self.steps)


def mes(d: int) -> PureState:
    """Maximally entangled state d^{-1/2} sum_j |e_j> (x) |e_j> on two d-dim factors."""
    if d < 2:
        raise ValidationError(f"MES requires d >= 2, got {d}")
    amps = np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)
    return PureState(factors=(d, d), amplitudes=amps)


def _apply_to_slot(op: np.ndarray, tensor: np.ndarray, slot: int) -> np.ndarray:
    out = np.tensordot(op, tensor, axes=([1], [slot]))
    return np.moveaxis(out, 0, slot)


def _check_schedule(model: HamiltonianModel, schedule: Schedule):
    if schedule.driven_dim != model.d:
        raise ValidationError(f"schedule drives dimension {schedule.driven_dim}, "
                              f"model has d = {model.d}")


def evolve(model: HamiltonianModel, theta, schedule: Schedule) -> PureState:
    """Run the schedule: feedbacks interleaved with (e^{-i t H_theta})^{(x)r} (x) I."""
    _check_schedule(model, schedule)
    h = hamiltonian(model, theta)
    psi = schedule.initial.amplitudes.copy()
    shape = schedule.initial.factors
    for interval, v in schedule.steps:
        if v is not None:
            psi = v @ psi
        if interval > 0.0:
            u = hermitian_expm(h, interval)
            tensor = psi.reshape(shape)
            for slot in range(schedule.r):
                tensor = _apply_to_slot(u, tensor, slot)
            psi = tensor.reshape(-1)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > TOL.state_norm_atol:
        raise ValidationError(f"evolution lost normalization: |psi| = {nrm}")
    return PureState(factors=shape, amplitudes=psi / nrm)


@dataclass(frozen=True)
class QfiReport:
    """QFI matrix J, correlation matrix G, and the growth-law bounds."""

    J: np.ndarray
    G: np.ndarray
    trace_J: float
    bound_4ct2: float
    spherical_bound: float | None

    def __post_init__(self):
        j = np.asarray(self.J, dtype=float)
        if np.max(np.abs(j - j.T)) > TOL.psd_atol:
            raise ValidationError("QFI matrix is not symmetric within tolerance")
        eigs = np.linalg.eigvalsh(0.5 * (j + j.T))
        if eigs.size and eigs[0] < -TOL.psd_atol:
            raise ValidationError(f"QFI matrix has negative eigenvalue {eigs[0]:.3e}")
        g = np.asarray(self.G)
        if np.max(np.abs(g - g.conj().T)) > TOL.g_hermitian_atol:
            raise ValidationError("correlation matrix G is not Hermitian within tolerance")
        if self.trace_J > self.bound_4ct2 * (1.0 + TOL.trj_bound_slack) + 1e-12:
            raise AuditFailure(
                f"Tr J = {self.trace_J:.6e} exceeds 4 c t_eff^2 = {self.bound_4ct2:.6e}")


def _collective_apply(model, tensor, j, r):
    """sum over driven slots of X_j applied to that slot."""
    x = model.generators[j]
    out = np.zeros_like(tensor)
    for slot in range(r):
        out += _apply_to_slot(x, tensor, slot)
    return out


def qfi_matrix(model: HamiltonianModel, theta, schedule: Schedule,
               step: float | None = None) -> QfiReport:
    """QFI by central finite differences of the evolution map.

    J_jk = 4 Re(<d_j q|d_k q> - <d_j q|q><q|d_k q>), with tangents from a
    symmetric difference of half-width ``step`` in each parameter.  The
    gauge-invariant form makes the result insensitive to global phases of
    the evolved states.  G_jk = <q| C_j C_k |q> with C_j the (collective, for
    r > 1) generator of the theta_j dependence.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != model.m:
        raise ValidationError(f"theta has length {theta.size}, model has m = {model.m}")
    h = TOL.qfi_step if step is None else float(step)
    m = model.m

    q0 = evolve(model, theta, schedule)
    tangents = []
    for j in range(m):
        dtheta = np.zeros(m)
        dtheta[j] = h
        qp = evolve(model, theta + dtheta, schedule).amplitudes
        qm = evolve(model, theta - dtheta, schedule).amplitudes
        tangents.append((qp - qm) / (2.0 * h))

    amps = q0.amplitudes
    jmat = np.empty((m, m))
    for j in range(m):
        oj = np.vdot(tangents[j], amps)
        for k in range(j, m):
            ok = np.vdot(amps, tangents[k])
            val = 4.0 * (np.vdot(tangents[j], tangents[k]) - oj * ok).real
            jmat[j, k] = jmat[k, j] = val

    tensor = amps.reshape(q0.factors)
    cvecs = [_collective_apply(model, tensor, j, schedule.r).reshape(-1) for j in range(m)]
    gmat = np.empty((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            gmat[j, k] = np.vdot(cvecs[j], cvecs[k])

    t_eff = schedule.r * schedule.total_time
    bound = 4.0 * model.c * t_eff ** 2
    sph = 4.0 * model.m * t_eff ** 2 / model.d if model.spherical else None
    return QfiReport(J=jmat, G=gmat, trace_J=float(np.trace(jmat)),
                     bound_4ct2=bound, spherical_bound=sph)


def _truncate(schedule: Schedule, t: float) -> Schedule:
    """Prefix of the schedule covering the first t units of evolution time."""
    remaining = t
    steps = []
    for interval, v in schedule.steps:
        if remaining <= 1e-15:
            break
        dt = min(interval, remaining)
        steps.append((dt, v))
        remaining -= dt
    if not steps:
        steps = [(0.0, None)]
    return Schedule(r=schedule.r, initial=schedule.initial, steps=tuple(steps))


def growth_audit(model: HamiltonianModel, theta, schedule: Schedule,
                 n_steps: int) -> list[tuple[float, float, float, float]]:
    """Audit Tr J(t) <= 4 c t_eff^2 and the sqrt growth law on a time grid.

    Returns rows (t, Tr J(t), 4 Tr G(t), 4 c t_eff^2).  Raises
    :class:`AuditFailure` carrying the offending grid time if either the
    quadratic bound or the discrete increment bound
    sqrt(TrJ)(t+dt) - sqrt(TrJ)(t) <= sqrt(4 max TrG) * dt_eff is violated.
    """
    if n_steps < 2:
        raise ValidationError("growth audit needs at least 2 grid points")
    grid = np.linspace(0.0, schedule.total_time, n_steps)
    rows = []
    for t in grid:
        rep = qfi_matrix(model, theta, _truncate(schedule, t))
        t_eff = schedule.r * t
        bound = 4.0 * model.c * t_eff ** 2
        if rep.trace_J > bound * (1.0 + TOL.trj_bound_slack) + 1e-12:
            raise AuditFailure(
                f"Tr J = {rep.trace_J:.6e} > 4 c t^2 = {bound:.6e} at t = {t}", time=t)
        rows.append((float(t), rep.trace_J, 4.0 * float(np.trace(rep.G).real), bound))

    max_tr_g = max(row[2] for row in rows) / 4.0
    rate = math.sqrt(4.0 * max(max_tr_g, 0.0))
    for (t0, trj0, _, _), (t1, trj1, _, _) in zip(rows, rows[1:]):
        inc = math.sqrt(max(trj1, 0.0)) - math.sqrt(max(trj0, 0.0))
        allowed = rate * schedule.r * (t1 - t0) * (1.0 + TOL.increment_slack) + 1e-9
        if inc > allowed:
            raise AuditFailure(
                f"sqrt(TrJ) increment {inc:.6e} exceeds {allowed:.6e} at t = {t1}", time=t1)
    return rows


TROTTER_ERROR_BUDGET = 1e-6


def trotter_feedback_schedule(model: HamiltonianModel, theta_star, tau: float,
                              initial: PureState, slices: int | None = None,
                              driven_norm_bound: float | None = None) -> Schedule:
    """Schedule realizing evolution under H_theta - H_theta* by splitting.

    The feedback field -H_theta* is applied as parameter-independent unitary
    kicks exp(+i s H_theta*) between free-evolution slices, in the symmetric
    (half-kick) arrangement whose error is O(tau^3 / slices^2).  With
    ``slices=None`` the count is chosen so the conservative splitting bound
    tau^3 a b (a + b) / slices^2 stays below ``TROTTER_ERROR_BUDGET``, where
    a is the feedback-field norm and b bounds the driven Hamiltonian
    (default a + sqrt(c), covering a unit search radius).
    """
    h_star = hamiltonian(model, theta_star)
    if slices is None:
        a = float(np.linalg.norm(h_star, 2))
        b = driven_norm_bound if driven_norm_bound is not None \
            else a + math.sqrt(model.c)
        slices = max(1, math.ceil(math.sqrt(
            tau ** 3 * max(a, 1e-9) * b * (a + b) / TROTTER_ERROR_BUDGET)))
    if slices < 1:
        raise ValidationError("need at least one splitting slice")
    s = tau / slices
    half = hermitian_expm(h_star, -0.5 * s)  # exp(+i (s/2) H*)
    full = hermitian_expm(h_star, -s)
    dim_a = initial.dim // model.d
    kick_half = np.kron(half, np.eye(dim_a))
    kick_full = np.kron(full, np.eye(dim_a))
    steps = [(s, kick_half)]
    steps += [(s, kick_full)] * (slices - 1)
    steps += [(0.0, kick_half)]
    return Schedule(r=1, initial=initial, steps=tuple(steps))
