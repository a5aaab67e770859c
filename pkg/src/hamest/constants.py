"""Central numeric tolerances and overridable scheme constants.

Every tolerance used by both the library and its tests lives in ``TOL`` so
the two can never drift apart.  Estimation-scheme constants (evolution-time
scale, copy budgets, staging factors) live in :class:`SchemeConstants`;
callers override them through one record rather than scattered keyword
arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances, grouped in one place."""

    hermitian_atol: float = 1e-12      # max-abs deviation from A == A^dagger
    traceless_atol: float = 1e-12      # |Tr X| for basis generators
    unitary_atol: float = 1e-10        # max-abs deviation of U^dagger U from I
    state_norm_atol: float = 1e-10     # deviation of a pure state from unit norm
    generator_trace_atol: float = 1e-10  # model generators: |Tr X_j|
    gram_atol: float = 1e-8            # model generator Gram matrix vs identity
    bigx_atol: float = 1e-10           # cached sum of squares vs direct sum
    spherical_atol: float = 1e-8       # max-abs of X_sum - (m/d) I
    branch_cut_atol: float = 1e-8      # eigenphase distance from -pi
    log_roundtrip_atol: float = 1e-9   # exp(-i log U) vs U
    frame_gram_atol: float = 1e-9      # postselection frame orthonormality
    psd_atol: float = 1e-8             # QFI matrix positive semidefiniteness
    g_hermitian_atol: float = 1e-10    # correlation matrix Hermiticity
    qfi_step: float = 1e-5             # central finite-difference step for QFI
    trj_bound_slack: float = 1e-4      # relative slack on Tr J <= 4 c t^2
    increment_slack: float = 1e-3      # relative slack on the growth-rate audit
    isometry_atol: float = 1e-10       # symmetric-subspace isometry orthonormality
    min_postselect_p: float = 1e-12    # below this the projection is degenerate
    starvation_rate: float = 0.01      # acceptance rate treated as starvation
    min_c0: float = 0.1                # minimum |c_0| for parameter inversion


TOL = Tolerances()


@dataclass(frozen=True)
class SchemeConstants:
    """Tunable constants of the estimation procedures.

    kappa   dimensionless evolution-time budget: tau = kappa / (radius * scale)
            with scale = sqrt(c), so that tau * ||H|| <= kappa over the search
            ball.  Calibrated so the first-order frame expansion stays accurate
            while tomography noise remains resolvable.
    alpha   copy-budget prefactor.  One-channel: N = ceil(alpha * m * d * E^2 /
            delta^2).  Staged schemes: N_n = ceil(alpha * m * (1 + beta * n)).
    beta    per-stage copy growth realizing the Chernoff log-factor; stage n
            (search radius 2^n * delta) must succeed with probability
            1 - p_crit / 2^n, which costs O(n) extra copies.
    p_crit  tolerated overall failure probability of a full estimation run.
    r_max   cap on the number of parallel channels; ``None`` means 2048 // d.
    refine  apply one Gauss-Newton fidelity refinement after the first-order
            inversion (removes the O(kappa^2) inversion bias).
    trotter_slices  0 = apply feedback fields exactly; k > 0 = approximate
            each stage evolution by k symmetric splitting slices.
    """

    kappa: float = 0.5
    alpha: float = 96.0
    beta: float = 1.0
    p_crit: float = 0.05
    r_max: int | None = None
    refine: bool = True
    trotter_slices: int = 0

    def effective_r_max(self, d: int) -> int:
        return self.r_max if self.r_max is not None else max(1, 2048 // d)

    def with_overrides(self, **kwargs) -> "SchemeConstants":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


DEFAULT_CONSTANTS = SchemeConstants()
