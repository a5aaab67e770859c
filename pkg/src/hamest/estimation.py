"""End-to-end estimation procedures.

Estimating theta from an entangled probe proceeds in four steps: project the
evolved probe onto the (m+1)-dimensional frame spanned by the unperturbed
probe and its first-order responses (a postselection), reconstruct the
projected state by single-copy random-basis tomography, invert the frame
coefficients to a parameter estimate, and (for the staged schemes) feed the
estimate back and halve the search radius.

Three drivers are provided: :func:`run_one_channel` (fixed radius, classical
T ~ 1/delta^2 scaling), :func:`run_adaptive` (feedback staging, T ~ 1/delta),
and :func:`run_many_channel` (entangled channels in the symmetric subspace,
measurement-side counter-rotation, no feedback during evolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_CONSTANTS, TOL, SchemeConstants
from .errors import (DegenerateProjectionError, InversionUnstableError,
                     PostselectionStarvedError, ValidationError)
from .linalg import PureState, hermitian_expm
from .model import HamiltonianModel, hamiltonian
from .probe import Schedule, evolve, mes, trotter_feedback_schedule
from .symmetric import SymSpace, collective, f2_coeff, occupation_space

__all__ = [
    "PostselectionFrame",
    "EstimationRecord",
    "StageRecord",
    "postselection_frame",
    "superop_S",
    "postselect",
    "tomography",
    "sample_haar_outcomes",
    "reconstruct_from_projector_mean",
    "invert_theta",
    "delta_resolution",
    "run_one_channel",
    "run_adaptive",
    "run_many_channel",
]

_TOMOGRAPHY_CHUNK = 1 << 16


@dataclass(frozen=True)
class PostselectionFrame:
    """Orthonormal frame [probe, normalized X_j responses] in the probe space.

    ``norm_factor`` is 1/sqrt(F2(d, r)), the factor converting first-order
    frame coefficients back to parameter units; it equals sqrt(d) for a
    single channel.
    """

    basis: np.ndarray          # (probe_dim, m + 1), columns orthonormal
    norm_factor: float
    r: int

    def __post_init__(self):
        b = self.basis
        gram = b.conj().T @ b
        dev = np.max(np.abs(gram - np.eye(b.shape[1])))
        if dev > TOL.frame_gram_atol:
            raise ValidationError(f"frame is not orthonormal (max deviation {dev:.2e})")

    @property
    def m(self) -> int:
        return self.basis.shape[1] - 1


def postselection_frame(model: HamiltonianModel, space: SymSpace | None = None,
                        collective_ops=None) -> PostselectionFrame:
    """Frame spanned by the MES and its generator responses.

    With a symmetric subspace the generators are replaced by their r-fold
    collective versions; the MES trace identity makes both cases
    ``[vec(I)/sqrt(D), vec(X_1)/||X_1||_HS, ...]`` up to normalization.
    """
    if space is None:
        dim = model.d
        ops = model.generators
        f2 = f2_coeff(model.d, 1)           # = 1/d
    else:
        dim = space.D
        ops = (collective_ops if collective_ops is not None
               else [collective(space, x) for x in model.generators])
        f2 = space.f2
    cols = [np.eye(dim, dtype=complex).reshape(-1) / math.sqrt(dim)]
    norm = math.sqrt(dim * f2)
    cols += [np.asarray(op, dtype=complex).reshape(-1) / norm for op in ops]
    return PostselectionFrame(basis=np.column_stack(cols),
                              norm_factor=1.0 / math.sqrt(f2),
                              r=1 if space is None else space.r)


def superop_S(model: HamiltonianModel, a) -> np.ndarray:
    """Projection of A onto span{I, X_1, ..., X_m} in the HS inner product.

    S(A) = (Tr A / d) I + sum_j Tr(A X_j) X_j; satisfies
    P (A (x) I)|MES> = (S(A) (x) I)|MES> with P the frame projector.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (model.d, model.d):
        raise ValidationError(f"operator shape {a.shape} does not match d = {model.d}")
    out = (np.trace(a) / model.d) * np.eye(model.d, dtype=complex)
    for x in model.generators:
        out += np.trace(a @ x) * x
    return out


def _amplitudes(state) -> np.ndarray:
    if isinstance(state, PureState):
        return state.amplitudes
    return np.asarray(state, dtype=complex).reshape(-1)


def postselect(frame: PostselectionFrame, state, rng: np.random.Generator):
    """Project one copy onto the frame.

    Returns (accepted, reduced, p_success): ``accepted`` is drawn with the
    projection probability, ``reduced`` is the normalized (m+1)-dimensional
    coefficient vector.
    """
    psi = _amplitudes(state)
    if psi.size != frame.basis.shape[0]:
        raise ValidationError("state and frame dimensions do not match")
    coeffs = frame.basis.conj().T @ psi
    p = float(np.real(np.vdot(coeffs, coeffs)))
    if p < TOL.min_postselect_p:
        raise DegenerateProjectionError(f"projection probability {p:.3e} is degenerate")
    nrm = math.sqrt(p)
    p = min(p, 1.0)
    accepted = bool(rng.random() < p)
    return accepted, coeffs / nrm, p


def _haar_bases(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """n independent Haar-random orthonormal bases (columns of each matrix).

    Column phases are irrelevant downstream (only outcome projectors are
    used), so no phase correction of the QR factor is needed.
    """
    z = rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))
    q, _ = np.linalg.qr(z)
    return q


def sample_haar_outcomes(state, n: int, rng: np.random.Generator) -> np.ndarray:
    """Outcome vectors of n Haar-random-basis measurements of ``state``.

    Sampled directly from the outcome distribution: picking a Haar basis and
    clicking outcome k with probability |<b_k|psi>|^2 gives an outcome vector
    with density D |<b|psi>|^2 on the sphere, i.e. |<b|psi>|^2 ~ Beta(2, D-1)
    with an independent uniform orthogonal component.
    """
    psi = _amplitudes(state)
    dim = psi.size
    t = rng.beta(2.0, dim - 1, size=n) if dim > 1 else np.ones(n)
    phase = np.exp(2j * np.pi * rng.random(n))
    w = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    w -= np.outer(w @ psi.conj(), psi)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return (np.sqrt(t) * phase)[:, None] * psi[None, :] + np.sqrt(1.0 - t)[:, None] * w


def reconstruct_from_projector_mean(mean_projector: np.ndarray) -> np.ndarray:
    """Linear inversion: rho_hat = (D+1) * mean outcome projector - I.

    Returns the top eigenvector of the Hermitian part, the pure-state
    estimate.  Unbiased because a Haar-measured copy of rho has expected
    outcome projector (rho + I) / (D + 1).
    """
    mp = np.asarray(mean_projector)
    dim = mp.shape[0]
    rho = (dim + 1) * mp - np.eye(dim)
    rho = 0.5 * (rho + rho.conj().T)
    _, vecs = np.linalg.eigh(rho)
    return vecs[:, -1]


def _measure_and_reconstruct(state, n_copies: int, rng: np.random.Generator) -> np.ndarray:
    psi = _amplitudes(state)
    dim = psi.size
    mean = np.zeros((dim, dim), dtype=complex)
    done = 0
    while done < n_copies:
        k = min(_TOMOGRAPHY_CHUNK, n_copies - done)
        outs = sample_haar_outcomes(psi, k, rng)
        mean += np.einsum("ni,nj->ij", outs, outs.conj())
        done += k
    return reconstruct_from_projector_mean(mean / n_copies)


def tomography(copies, rng: np.random.Generator) -> np.ndarray:
    """Pure-state estimate from single-copy Haar-random-basis measurements.

    ``copies`` is a sequence of prepared state vectors; each is measured in
    its own Haar-random orthonormal basis, one outcome is drawn by the Born
    rule, and the estimate is the top eigenvector of the linear-inversion
    density matrix.  Requires at least dim copies.
    """
    arr = np.asarray([_amplitudes(c) for c in copies])
    n, dim = arr.shape
    if n < dim:
        raise ValidationError(f"tomography needs at least {dim} copies, got {n}")
    mean = np.zeros((dim, dim), dtype=complex)
    for start in range(0, n, _TOMOGRAPHY_CHUNK):
        block = arr[start:start + _TOMOGRAPHY_CHUNK]
        bases = _haar_bases(block.shape[0], dim, rng)
        amps = np.einsum("nik,ni->nk", bases.conj(), block)
        probs = np.abs(amps) ** 2
        probs /= probs.sum(axis=1, keepdims=True)
        u = rng.random(block.shape[0])
        idx = (np.cumsum(probs, axis=1) < u[:, None]).sum(axis=1)
        idx = np.minimum(idx, dim - 1)
        outs = np.take_along_axis(bases, idx[:, None, None], axis=2)[:, :, 0]
        mean += np.einsum("ni,nj->ij", outs, outs.conj())
    return reconstruct_from_projector_mean(mean / n)


def _refine_gauss_newton(family, reduced: np.ndarray, theta0: np.ndarray,
                         fd_step: float = 1e-6) -> np.ndarray:
    """One Gauss-Newton step maximizing fidelity of family(theta) to reduced."""
    m = theta0.size
    c0 = family(theta0)
    phase = np.vdot(reduced, c0)
    if abs(phase) < 1e-12:
        return theta0
    phi = phase.conj() / abs(phase)
    jac = np.empty((c0.size, m), dtype=complex)
    for j in range(m):
        dj = np.zeros(m)
        dj[j] = fd_step
        jac[:, j] = (family(theta0 + dj) - family(theta0 - dj)) / (2 * fd_step)
    a = np.concatenate([np.real(phi * jac), np.imag(phi * jac)])
    b = np.concatenate([np.real(reduced - phi * c0), np.imag(reduced - phi * c0)])
    step, *_ = np.linalg.lstsq(a, b, rcond=None)
    return theta0 + step


def invert_theta(reduced, tau: float, frame: PostselectionFrame,
                 family=None) -> np.ndarray:
    """First-order inversion of frame coefficients to parameters.

    After fixing the phase of c_0 to be real positive,
    theta_j = -(norm_factor / tau) Im(c_j / c_0), exact to first order in
    tau * ||theta||.  When ``family`` (a callable theta -> exact normalized
    frame coefficients) is supplied, one Gauss-Newton fidelity refinement is
    applied on top.
    """
    c = np.asarray(reduced, dtype=complex).reshape(-1)
    if c.size != frame.m + 1:
        raise ValidationError(f"reduced state has dimension {c.size}, "
                              f"frame has m + 1 = {frame.m + 1}")
    c0 = c[0]
    if abs(c0) < TOL.min_c0:
        raise InversionUnstableError(
            f"|c_0| = {abs(c0):.3f} < {TOL.min_c0}; inversion unstable, reduce tau")
    c = c * (c0.conj() / abs(c0))
    theta = -(frame.norm_factor / tau) * np.imag(c[1:] / c[0].real)
    if family is not None:
        theta = _refine_gauss_newton(family, c, theta)
    return theta


def _sample_ball(m: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    u = rng.standard_normal(m)
    u /= np.linalg.norm(u)
    return u * radius * rng.random() ** (1.0 / m)


def _mes_probe_map(model: HamiltonianModel, tau: float, frame=None):
    """theta -> probe state (or its normalized frame coefficients)."""
    d = model.d

    def prepare(theta):
        u = hermitian_expm(hamiltonian(model, theta), tau)
        psi = u.reshape(-1) / math.sqrt(d)
        if frame is None:
            return psi
        c = frame.basis.conj().T @ psi
        return c / np.linalg.norm(c)

    return prepare


def delta_resolution(model: HamiltonianModel, tau: float, e_radius: float,
                     delta: float, n_pairs: int, rng: np.random.Generator,
                     frame: PostselectionFrame | None = None) -> float:
    """Sampled infimum of the infidelity over parameter pairs >= delta apart.

    Pairs (theta, theta') are drawn with both inside the search ball and
    concentrated at the constraint boundary ||theta - theta'|| = delta, where
    the infimum is attained in all closed-form cases; a smaller set of
    uniform interior pairs guards against surprises away from the boundary.
    """
    if not (0.0 <= delta <= 2.0 * e_radius):
        raise ValidationError(f"need 0 <= delta <= 2E, got delta={delta}, E={e_radius}")
    if n_pairs < 1:
        raise ValidationError("need at least one sample pair")
    prepare = _mes_probe_map(model, tau, frame)
    m = model.m

    def infidelity(th, th2):
        ov = np.vdot(prepare(th), prepare(th2))
        return math.sqrt(max(0.0, 1.0 - abs(ov) ** 2))

    best = math.inf
    for _ in range(n_pairs):
        direction = rng.standard_normal(m)
        direction /= np.linalg.norm(direction)
        for _ in range(200):
            theta = _sample_ball(m, e_radius, rng)
            theta2 = theta + delta * direction
            if np.linalg.norm(theta2) <= e_radius:
                break
        else:
            theta = -0.5 * delta * direction
            theta2 = theta + delta * direction
        best = min(best, infidelity(theta, theta2))
    for _ in range(max(1, n_pairs // 4)):
        for _ in range(200):
            theta = _sample_ball(m, e_radius, rng)
            theta2 = _sample_ball(m, e_radius, rng)
            if np.linalg.norm(theta2 - theta) >= delta:
                best = min(best, infidelity(theta, theta2))
                break
    return best


@dataclass(frozen=True)
class StageRecord:
    n: int
    tau: float
    copies: int
    accept_rate: float
    failed: bool = False


@dataclass(frozen=True)
class EstimationRecord:
    """Outcome of one estimation run."""

    theta_true: tuple[float, ...]
    theta_hat: tuple[float, ...]
    error: float
    stages: tuple[StageRecord, ...]
    total_time: float
    success: bool
    delta: float
    seed: int

    @staticmethod
    def build(theta_true, theta_hat, stages, total_time, delta,
              seed) -> "EstimationRecord":
        err = float(np.linalg.norm(np.asarray(theta_hat) - np.asarray(theta_true)))
        return EstimationRecord(
            theta_true=tuple(float(x) for x in theta_true),
            theta_hat=tuple(float(x) for x in theta_hat),
            error=err,
            stages=tuple(stages),
            total_time=float(total_time),
            success=bool(err <= delta),
            delta=float(delta),
            seed=int(seed),
        )


def _check_run_inputs(model, theta_true, delta, e_radius):
    theta_true = np.asarray(theta_true, dtype=float).reshape(-1)
    if theta_true.size != model.m:
        raise ValidationError(f"theta_true has length {theta_true.size}, m = {model.m}")
    if np.linalg.norm(theta_true) > e_radius * (1 + 1e-12):
        raise ValidationError("theta_true lies outside the search radius")
    if delta <= 0 or delta > e_radius / 5 * (1 + 1e-12):
        raise ValidationError(f"need 0 < delta <= E/5, got delta={delta}, E={e_radius}")
    return theta_true


def _stage_estimate(reduced_exact, p, copies, tau, frame, family,
                    rng: np.random.Generator):
    """Postselect `copies` prepared copies, reconstruct, invert."""
    n_accepted = int(rng.binomial(copies, p))
    rate = n_accepted / copies if copies else 0.0
    if rate < TOL.starvation_rate or n_accepted < frame.m + 1:
        raise PostselectionStarvedError(
            f"postselection starved: accepted {n_accepted} of {copies}")
    estimate = _measure_and_reconstruct(reduced_exact, n_accepted, rng)
    theta = invert_theta(estimate, tau, frame, family=family)
    return theta, rate


def _frame_projection(frame, psi):
    coeffs = frame.basis.conj().T @ psi
    p = float(np.real(np.vdot(coeffs, coeffs)))
    if p < TOL.min_postselect_p:
        raise DegenerateProjectionError(f"projection probability {p:.3e} is degenerate")
    return coeffs / math.sqrt(p), min(p, 1.0)


def run_one_channel(model: HamiltonianModel, theta_true, delta: float,
                    e_radius: float, constants: SchemeConstants = DEFAULT_CONSTANTS,
                    rng: np.random.Generator | None = None,
                    seed: int = 0) -> EstimationRecord:
    """Single-radius estimation: MES probe, fixed tau, N ~ E^2 / delta^2 copies.

    tau = kappa / (E sqrt(c)) keeps tau ||H_theta|| <= kappa over the ball;
    the copy count N = ceil(alpha m d E^2 / delta^2) makes the tomography
    noise resolvable at scale delta.  Time resource: T = N tau.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    theta_true = _check_run_inputs(model, theta_true, delta, e_radius)
    scale = math.sqrt(model.c)
    tau = constants.kappa / (e_radius * scale)
    copies = int(math.ceil(constants.alpha * model.m * model.d * e_radius ** 2 / delta ** 2))
    frame = postselection_frame(model)
    prepare = _mes_probe_map(model, tau, frame)

    probe = evolve(model, theta_true,
                   Schedule(r=1, initial=mes(model.d), steps=((tau, None),)))
    reduced, p = _frame_projection(frame, probe.amplitudes)
    family = prepare if constants.refine else None
    theta_hat, rate = _stage_estimate(reduced, p, copies, tau, frame, family, rng)
    stage = StageRecord(n=0, tau=tau, copies=copies, accept_rate=rate)
    return EstimationRecord.build(theta_true, theta_hat, [stage],
                                  total_time=copies * 1 * tau, delta=delta, seed=seed)


def _staging_depth(e_radius: float, delta: float) -> int:
    return max(1, math.ceil(math.log2(e_radius / delta)))


def run_adaptive(model: HamiltonianModel, theta_true, delta: float,
                 e_radius: float, constants: SchemeConstants = DEFAULT_CONSTANTS,
                 rng: np.random.Generator | None = None,
                 seed: int = 0) -> EstimationRecord:
    """Feedback-staged estimation: halve the search radius each stage.

    Stage n (n = n0 .. 1) works at radius 2^n delta with the simulated
    external field -H_theta*, so the driven Hamiltonian is H_{theta-theta*};
    tau_n = kappa / (2^n delta sqrt(c)) grows as the radius shrinks while the
    per-stage copy count N_n = ceil(alpha m (1 + beta n)) stays bounded, the
    (1 + beta n) factor covering the exponentially small per-stage failure
    budget p_crit / 2^n.  Stage failures are recorded, not raised.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    theta_true = _check_run_inputs(model, theta_true, delta, e_radius)
    scale = math.sqrt(model.c)
    n0 = _staging_depth(e_radius, delta)
    frame = postselection_frame(model)
    initial = mes(model.d)

    theta_star = np.zeros(model.m)
    stages = []
    total_time = 0.0
    for n in range(n0, 0, -1):
        radius = 2.0 ** n * delta
        tau = constants.kappa / (radius * scale)
        copies = int(math.ceil(constants.alpha * model.m * (1.0 + constants.beta * n)))
        total_time += copies * 1 * tau
        shift = theta_true - theta_star
        if constants.trotter_slices > 0:
            sched = trotter_feedback_schedule(model, theta_star, tau, initial,
                                              constants.trotter_slices)
            probe = evolve(model, theta_true, sched)
        else:
            probe = evolve(model, shift,
                           Schedule(r=1, initial=initial, steps=((tau, None),)))
        prepare = _mes_probe_map(model, tau, frame)
        try:
            reduced, p = _frame_projection(frame, probe.amplitudes)
            family = prepare if constants.refine else None
            increment, rate = _stage_estimate(reduced, p, copies, tau, frame,
                                              family, rng)
        except (DegenerateProjectionError, PostselectionStarvedError,
                InversionUnstableError):
            stages.append(StageRecord(n=n, tau=tau, copies=copies,
                                      accept_rate=0.0, failed=True))
            continue
        theta_star = theta_star + increment
        stages.append(StageRecord(n=n, tau=tau, copies=copies, accept_rate=rate))
    return EstimationRecord.build(theta_true, theta_star, stages,
                                  total_time=total_time, delta=delta, seed=seed)


def run_many_channel(model: HamiltonianModel, theta_true, delta: float,
                     e_radius: float, constants: SchemeConstants = DEFAULT_CONSTANTS,
                     rng: np.random.Generator | None = None,
                     seed: int = 0) -> EstimationRecord:
    """Entanglement-staged estimation without feedback during evolution.

    All stages share the short evolution time tau = kappa / (2^n0 delta
    sqrt(c)); stage n instead entangles r_n = min(2^(n0-n) d, r_max) channels
    through the symmetric subspace, and the preceding estimate enters only as
    the measurement-side counter-rotation exp(+i tau {H_theta*}_r).  The
    time resource of a stage is N_n r_n tau.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    theta_true = _check_run_inputs(model, theta_true, delta, e_radius)
    scale = math.sqrt(model.c)
    n0 = _staging_depth(e_radius, delta)
    tau = constants.kappa / (2.0 ** n0 * delta * scale)
    r_cap = constants.effective_r_max(model.d)

    theta_star = np.zeros(model.m)
    stages = []
    total_time = 0.0
    spaces: dict[int, tuple] = {}
    for n in range(n0, 0, -1):
        r_n = min(2 ** (n0 - n) * model.d, r_cap)
        copies = int(math.ceil(constants.alpha * model.m * (1.0 + constants.beta * n)))
        total_time += copies * r_n * tau
        if r_n not in spaces:
            space = occupation_space(model.d, r_n)
            ops = [collective(space, x) for x in model.generators]
            frame = postselection_frame(model, space, collective_ops=ops)
            spaces[r_n] = (space, ops, frame)
        space, ops, frame = spaces[r_n]
        sqrt_f2 = math.sqrt(space.f2)

        def coll_ham(theta):
            h = np.zeros((space.D, space.D), dtype=complex)
            for coeff, op in zip(theta, ops):
                h += coeff * op
            return h

        def family(inc, _star=theta_star.copy()):
            w = (hermitian_expm(coll_ham(_star), -tau)
                 @ hermitian_expm(coll_ham(_star + inc), tau))
            c = frame.basis.conj().T @ (w.reshape(-1) / math.sqrt(space.D))
            return c / np.linalg.norm(c)

        w = (hermitian_expm(coll_ham(theta_star), -tau)
             @ hermitian_expm(coll_ham(theta_true), tau))
        psi = w.reshape(-1) / math.sqrt(space.D)
        try:
            reduced, p = _frame_projection(frame, psi)
            increment, rate = _stage_estimate(
                reduced, p, copies, tau, frame,
                family if constants.refine else None, rng)
        except (DegenerateProjectionError, PostselectionStarvedError,
                InversionUnstableError):
            stages.append(StageRecord(n=n, tau=tau, copies=copies,
                                      accept_rate=0.0, failed=True))
            continue
        theta_star = theta_star + increment
        stages.append(StageRecord(n=n, tau=tau, copies=copies, accept_rate=rate))
    return EstimationRecord.build(theta_true, theta_star, stages,
                                  total_time=total_time, delta=delta, seed=seed)
