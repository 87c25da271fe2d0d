"""Closed-form convergence certificates for the randomized solvers.

Every bound here has the same skeleton: a one-step contraction pair
(gamma1, gamma2) for the squared error, folded by a two-term recurrence into
a geometric envelope with rate q, overshoot factor (1 + tau), and, on
inconsistent systems, a noise offset. The bounds differ in what they measure
(residual or iterate), which structural assumption they need, and which
second-moment constant (a "beta") enters.

All admissibility checks raise InadmissibleError with the violated
inequality and its numeric margin; nothing is clamped silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import LinearSystem, SpectralInfo
from .samplers import SamplerKind, SamplerSpec


class RateBound(Enum):
    """The certified mean-square bounds, named by their assumptions.

    PLAIN_GENERAL             no momentum, any sampler/system; residual metric.
    MOMENTUM_GENERAL          any sampler/system; residual metric with offset.
    MOMENTUM_FULL_RANK        full column rank; iterate metric with offset.
    MOMENTUM_FULL_RANK_CONSISTENT  full column rank + consistent; iterate metric.
    MOMENTUM_COLUMN_ACTION    residual-side sketch is scalar; residual metric.
    MOMENTUM_ROW_ACTION_CONSISTENT solution-side sketch scalar + consistent;
                              iterate metric.
    MOMENTUM_ANNIHILATING     sketches annihilate the least-squares residual
                              (consistent system, or any column-action sampler);
                              residual metric.
    """

    PLAIN_GENERAL = "plain_general"
    MOMENTUM_GENERAL = "momentum_general"
    MOMENTUM_FULL_RANK = "momentum_full_rank"
    MOMENTUM_FULL_RANK_CONSISTENT = "momentum_full_rank_consistent"
    MOMENTUM_COLUMN_ACTION = "momentum_column_action"
    MOMENTUM_ROW_ACTION_CONSISTENT = "momentum_row_action_consistent"
    MOMENTUM_ANNIHILATING = "momentum_annihilating"


class BetaKind(Enum):
    """Which second-moment constant a bound consumes.

    GENERAL      norm of E[(sketched normal operator)' (sketched normal operator)]
                 (PLAIN_GENERAL, MOMENTUM_GENERAL, MOMENTUM_ANNIHILATING).
    FULL_RANK    variant without the middle A (the full-rank bounds).
    COLUMN_ACTION norm of E[solution-sketch gram of A'A] (column-action bound).
    ROW_ACTION   norm of E[residual-sketch gram of AA'] (row-action bound).
    """

    GENERAL = "general"
    FULL_RANK = "full_rank"
    COLUMN_ACTION = "column_action"
    ROW_ACTION = "row_action"


# Which beta each bound needs, whether it measures residuals, and whether its
# envelope carries a noise offset on inconsistent systems.
BOUND_BETA = {
    RateBound.PLAIN_GENERAL: BetaKind.GENERAL,
    RateBound.MOMENTUM_GENERAL: BetaKind.GENERAL,
    RateBound.MOMENTUM_FULL_RANK: BetaKind.FULL_RANK,
    RateBound.MOMENTUM_FULL_RANK_CONSISTENT: BetaKind.FULL_RANK,
    RateBound.MOMENTUM_COLUMN_ACTION: BetaKind.COLUMN_ACTION,
    RateBound.MOMENTUM_ROW_ACTION_CONSISTENT: BetaKind.ROW_ACTION,
    RateBound.MOMENTUM_ANNIHILATING: BetaKind.GENERAL,
}
BOUND_MEASURES_RESIDUAL = {
    RateBound.PLAIN_GENERAL: True,
    RateBound.MOMENTUM_GENERAL: True,
    RateBound.MOMENTUM_FULL_RANK: False,
    RateBound.MOMENTUM_FULL_RANK_CONSISTENT: False,
    RateBound.MOMENTUM_COLUMN_ACTION: True,
    RateBound.MOMENTUM_ROW_ACTION_CONSISTENT: False,
    RateBound.MOMENTUM_ANNIHILATING: True,
}
BOUND_HAS_OFFSET = {
    RateBound.PLAIN_GENERAL: True,
    RateBound.MOMENTUM_GENERAL: True,
    RateBound.MOMENTUM_FULL_RANK: True,
    RateBound.MOMENTUM_FULL_RANK_CONSISTENT: False,
    RateBound.MOMENTUM_COLUMN_ACTION: False,
    RateBound.MOMENTUM_ROW_ACTION_CONSISTENT: False,
    RateBound.MOMENTUM_ANNIHILATING: False,
}


class InadmissibleError(ValueError):
    """A parameter violates the inequality a bound needs.

    Carries the inequality text, the violated limit, and the offending value
    so callers can print the margin rather than guess."""

    def __init__(self, inequality, value, bound):
        self.inequality = inequality
        self.value = value
        self.bound = bound
        margin = value - bound
        super().__init__(
            f"inadmissible: requires {inequality}; got {value:.6g} vs limit "
            f"{bound:.6g} (margin {margin:+.3e})"
        )


@dataclass(frozen=True)
class RateReport:
    """Everything one bound certifies for one (sampler, system, alpha, omega).

    eta is the rate of the momentum-free special case of the same bound (for
    the general bound this is the plain-iteration residual rate)."""

    bound: RateBound
    alpha: float
    omega: float
    rho: float
    beta: float  # the constant the selected bound consumes
    beta_kind: BetaKind
    eta: float
    gamma1: float
    gamma2: float
    q: float
    tau: float
    alpha_max: float
    omega_max: float

    def to_kv_text(self) -> str:
        lines = [
            f"bound={self.bound.value}",
            f"measures={'residual' if BOUND_MEASURES_RESIDUAL[self.bound] else 'iterate'}",
            f"offset={'yes' if BOUND_HAS_OFFSET[self.bound] else 'no'}",
            f"alpha={self.alpha:.12g}",
            f"omega={self.omega:.12g}",
            f"rho={self.rho:.12g}",
            f"beta_kind={self.beta_kind.value}",
            f"beta={self.beta:.12g}",
            f"eta={self.eta:.12g}",
            f"gamma1={self.gamma1:.12g}",
            f"gamma2={self.gamma2:.12g}",
            f"q={self.q:.12g}",
            f"tau={self.tau:.12g}",
            f"alpha_max={self.alpha_max:.12g}",
            f"omega_max={self.omega_max:.12g}",
        ]
        return "\n".join(lines)


def _sym_top_eig(mat):
    return float(np.linalg.eigvalsh(mat)[-1])


def _row_gram_norm(system, m, p):
    """lambda_max(A A' + ((m-p)/(p-1)) diag(A A')) terms for block formulas."""
    dense = system.dense
    gram = dense @ dense.T
    if p == 1:
        return float(np.diag(gram).max())
    corr = (m - p) / (p - 1)
    return _sym_top_eig(gram + corr * np.diag(np.diag(gram)))


def _col_gram_norm(system, n, s):
    dense = system.dense
    gram = dense.T @ dense
    if s == 1:
        return float(np.diag(gram).max())
    corr = (n - s) / (s - 1)
    return _sym_top_eig(gram + corr * np.diag(np.diag(gram)))


def sketch_scale(spec: SamplerSpec, system: LinearSystem) -> float:
    """The scalar rho when one side's sketch is a multiple of the identity.

    Row-action kinds scale the solution side; column-action kinds scale the
    residual side. Raises for kinds where neither side is scalar."""
    kind = spec.kind
    if kind is SamplerKind.RK or kind is SamplerKind.RGS:
        return 1.0
    if kind is SamplerKind.RBK or kind is SamplerKind.RBCD:
        return 1.0 / system.frob_sq
    if kind is SamplerKind.BGK:
        return 1.0 / (spec.block_rows * system.frob_sq)
    if kind is SamplerKind.BGLS:
        return 1.0 / (spec.block_cols * system.frob_sq)
    raise ValueError(f"{kind.value} has no identity-scaled sketch side")


def _require_dense_support(system: LinearSystem) -> None:
    # the entry-sampler constants assume every entry can be drawn
    if not np.all(system.dense != 0.0):
        raise ValueError(
            "entry-sampler closed forms assume fully dense support; this "
            "matrix has zero entries, estimate the constant numerically"
        )


def beta_closed_form(spec: SamplerSpec, info: SpectralInfo, system: LinearSystem,
                     kind: BetaKind | None = None) -> float:
    """Closed-form second-moment constant for (sampler, beta kind).

    When kind is omitted the sampler's natural constant is returned: the
    row-action constant for rk/rbk/bgk, the column-action constant for
    rgs/rbcd/bgls, and the general constant for dsgs/sgc. Unsupported
    combinations raise with the name of the missing constant; exact
    enumeration or Monte Carlo (verification module) covers those.
    """
    sk = spec.kind
    frob_sq = system.frob_sq
    if kind is None:
        kind = {
            SamplerKind.RK: BetaKind.ROW_ACTION,
            SamplerKind.RBK: BetaKind.ROW_ACTION,
            SamplerKind.BGK: BetaKind.ROW_ACTION,
            SamplerKind.RGS: BetaKind.COLUMN_ACTION,
            SamplerKind.RBCD: BetaKind.COLUMN_ACTION,
            SamplerKind.BGLS: BetaKind.COLUMN_ACTION,
            SamplerKind.DSGS: BetaKind.GENERAL,
            SamplerKind.SGC: BetaKind.GENERAL,
        }[sk]
    if kind is BetaKind.ROW_ACTION:
        if sk is SamplerKind.RK:
            return 1.0 / frob_sq
        if sk is SamplerKind.RBK:
            m, p = system.m, spec.block_rows
            if p == 1:
                return m * _row_gram_norm(system, m, 1)
            return (m * (p - 1)) / ((m - 1) * p) * _row_gram_norm(system, m, p)
        if sk is SamplerKind.BGK:
            p = spec.block_rows
            return (p * p + p) * info.sigma_max_sq + p * frob_sq
        raise ValueError(f"no closed-form row-action constant for {sk.value}")
    if kind is BetaKind.COLUMN_ACTION:
        if sk is SamplerKind.RGS:
            return 1.0 / frob_sq
        if sk is SamplerKind.RBCD:
            n, s = system.n, spec.block_cols
            if s == 1:
                return n * _col_gram_norm(system, n, 1)
            return (n * (s - 1)) / ((n - 1) * s) * _col_gram_norm(system, n, s)
        if sk is SamplerKind.BGLS:
            s = spec.block_cols
            return (s * s + s) * info.sigma_max_sq + s * frob_sq
        raise ValueError(f"no closed-form column-action constant for {sk.value}")
    if kind is BetaKind.GENERAL:
        if sk is SamplerKind.DSGS:
            _require_dense_support(system)
            return 1.0
        if sk is SamplerKind.SGC:
            tr = float(np.trace(system.dense))
            return (2.0 * frob_sq + tr * tr) / (tr * tr)
        if sk in (SamplerKind.BGK, SamplerKind.BGLS):
            # Gaussian fourth-moment identity applied to the squared gram
            p = spec.block_rows if sk is SamplerKind.BGK else spec.block_cols
            sig4 = float((info.singular_values ** 4).sum())
            top4 = info.sigma_max_sq ** 2
            return ((p * p + p) * top4 + p * sig4) / (p * p * frob_sq * frob_sq)
        raise ValueError(
            f"no closed-form general constant for {sk.value}; use exact "
            "enumeration (verification module)"
        )
    # FULL_RANK: stated form for dsgs; row-action kinds reduce to
    # rho^2 * row-action constant because their solution-side sketch is rho*I.
    if sk is SamplerKind.DSGS:
        _require_dense_support(system)
        return system.n / frob_sq
    if sk in (SamplerKind.RK, SamplerKind.RBK, SamplerKind.BGK):
        rho = sketch_scale(spec, system)
        return rho * rho * beta_closed_form(spec, info, system, BetaKind.ROW_ACTION)
    raise ValueError(f"no closed-form full-rank constant for {sk.value}")


def rate_q(gamma1: float, gamma2: float) -> tuple[float, float]:
    """Fold a two-term contraction (gamma1, gamma2) into (q, tau).

    q is the dominant root of t^2 = gamma1 t + gamma2 (or gamma1 itself when
    gamma2 = 0); tau = q - gamma1 satisfies (gamma1 + tau) tau = gamma2.
    Requires gamma2 >= 0 and gamma1 + gamma2 < 1.
    """
    if gamma2 < 0:
        raise InadmissibleError("gamma2 >= 0", gamma2, 0.0)
    if not (gamma1 + gamma2 < 1.0):
        raise InadmissibleError("gamma1 + gamma2 < 1", gamma1 + gamma2, 1.0)
    if gamma2 > 0:
        q = 0.5 * (gamma1 + math.sqrt(gamma1 * gamma1 + 4.0 * gamma2))
    else:
        q = gamma1
    return q, q - gamma1


def _alpha_max(bound: RateBound, info: SpectralInfo, beta: float, rho: float) -> float:
    s_min = info.sigma_min_nz_sq
    frob_sq = info.frob_sq
    if bound in (RateBound.PLAIN_GENERAL, RateBound.MOMENTUM_GENERAL):
        return s_min / (beta * frob_sq)
    if bound is RateBound.MOMENTUM_FULL_RANK:
        return 1.0 / (beta * frob_sq)
    if bound is RateBound.MOMENTUM_FULL_RANK_CONSISTENT:
        return 2.0 / (beta * frob_sq)
    if bound in (RateBound.MOMENTUM_COLUMN_ACTION, RateBound.MOMENTUM_ROW_ACTION_CONSISTENT):
        return 2.0 / (rho * rho * beta * frob_sq)
    return 2.0 * s_min / (beta * frob_sq)  # annihilating


def _gamma1_terms(bound: RateBound, beta: float, alpha: float, omega: float,
                  rho: float, frob_sq: float) -> tuple[float, float]:
    """(c0, quad): gamma1 = 1 + 3w + 2w^2 - (c0 + alpha*w) s_min/F + quad."""
    if bound in (RateBound.PLAIN_GENERAL, RateBound.MOMENTUM_GENERAL):
        return 2.0 * alpha, 2.0 * alpha * alpha * beta
    if bound is RateBound.MOMENTUM_FULL_RANK:
        return 2.0 * alpha - 2.0 * alpha * alpha * beta * frob_sq, 0.0
    if bound is RateBound.MOMENTUM_FULL_RANK_CONSISTENT:
        return 2.0 * alpha - alpha * alpha * beta * frob_sq, 0.0
    if bound in (RateBound.MOMENTUM_COLUMN_ACTION, RateBound.MOMENTUM_ROW_ACTION_CONSISTENT):
        return 2.0 * alpha - alpha * alpha * rho * rho * beta * frob_sq, 0.0
    return 2.0 * alpha, alpha * alpha * beta  # annihilating


def momentum_rate(bound: RateBound, info: SpectralInfo, beta: float,
                  alpha: float, omega: float, rho: float = 1.0) -> tuple[float, float]:
    """One-step contraction pair (gamma1, gamma2) for the selected bound.

    gamma2 is shared by every bound; gamma1 differs in its stepsize
    coefficient and quadratic term. The stepsize must respect the bound's
    admissible range (alpha = 0 is allowed and yields the degenerate pair)."""
    if alpha < 0:
        raise InadmissibleError("alpha >= 0", alpha, 0.0)
    if omega < 0:
        raise InadmissibleError("omega >= 0", omega, 0.0)
    if bound is RateBound.PLAIN_GENERAL and omega != 0.0:
        raise InadmissibleError("omega == 0 for the plain bound", omega, 0.0)
    limit = _alpha_max(bound, info, beta, rho)
    if alpha >= limit and alpha > 0:
        raise InadmissibleError("alpha < alpha_max for this bound", alpha, limit)
    s = info.sigma_min_nz_sq / info.frob_sq
    c0, quad = _gamma1_terms(bound, beta, alpha, omega, rho, info.frob_sq)
    gamma1 = 1.0 + 3.0 * omega + 2.0 * omega * omega - (c0 + alpha * omega) * s + quad
    gamma2 = 2.0 * omega * omega + omega + omega * alpha * info.sigma_max_sq / info.frob_sq
    return gamma1, gamma2


def _omega_bound(t1: float, t2: float) -> float:
    if t2 <= 0:
        return 0.0
    return 0.125 * (math.sqrt(t1 * t1 + 16.0 * t2) - t1)


def momentum_upper_bound(info: SpectralInfo, beta: float, alpha: float) -> float:
    """Largest admissible momentum for the general bound at this stepsize.

    Solves 4 w^2 + t1 w - t2 < 0 where t1 = 4 + alpha (s_max - s_min)/F and
    t2 = 2 alpha s_min/F - 2 alpha^2 beta. Requires t2 > 0, i.e. alpha below
    the general bound's stepsize limit."""
    s_min = info.sigma_min_nz_sq / info.frob_sq
    s_max = info.sigma_max_sq / info.frob_sq
    t1 = 4.0 + alpha * (s_max - s_min)
    t2 = 2.0 * alpha * s_min - 2.0 * alpha * alpha * beta
    if t2 <= 0:
        raise InadmissibleError(
            "2 alpha sigma_min^2/frob_sq - 2 alpha^2 beta > 0", t2, 0.0
        )
    return _omega_bound(t1, t2)


def omega_upper_bound(bound: RateBound, info: SpectralInfo, beta: float,
                      alpha: float, rho: float = 1.0) -> float:
    """Largest momentum keeping gamma1 + gamma2 < 1 for any of the bounds."""
    s_min = info.sigma_min_nz_sq / info.frob_sq
    s_max = info.sigma_max_sq / info.frob_sq
    c0, quad = _gamma1_terms(bound, beta, alpha, 0.0, rho, info.frob_sq)
    t1 = 4.0 + alpha * (s_max - s_min)
    t2 = c0 * s_min - quad
    return _omega_bound(t1, t2)


def build_report(bound: RateBound, info: SpectralInfo, beta: float,
                 alpha: float, omega: float, rho: float = 1.0) -> RateReport:
    """Assemble the full certificate for one bound at one (alpha, omega)."""
    gamma1, gamma2 = momentum_rate(bound, info, beta, alpha, omega, rho)
    q, tau = rate_q(gamma1, gamma2)
    g1_0, _ = momentum_rate(bound, info, beta, alpha, 0.0, rho)
    return RateReport(
        bound=bound, alpha=alpha, omega=omega, rho=rho,
        beta=beta, beta_kind=BOUND_BETA[bound],
        eta=g1_0, gamma1=gamma1, gamma2=gamma2, q=q, tau=tau,
        alpha_max=_alpha_max(bound, info, beta, rho),
        omega_max=omega_upper_bound(bound, info, beta, alpha, rho),
    )


def residual_envelope(k: int, err0_sq: float, r_star_norm_sq: float,
                      report: RateReport) -> float:
    """Certified upper envelope at step k for the report's error metric.

    The step index counts sampler draws from the start, so k = 0 is the
    initial point. Bounds without an offset return q^k (1 + tau) err0_sq;
    the general bounds add the inconsistency offset driven by ||r*||^2.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    qk = report.q ** k
    if report.bound is RateBound.PLAIN_GENERAL:
        head = qk * err0_sq
    else:
        head = qk * (1.0 + report.tau) * err0_sq
    if not BOUND_HAS_OFFSET[report.bound] or r_star_norm_sq == 0.0:
        return head
    scale = 2.0 * report.alpha * report.alpha * report.beta
    return head + scale * (1.0 - qk) * r_star_norm_sq / (1.0 - report.q)


def expected_iterate_rate(info: SpectralInfo, alpha: float, k: int) -> float:
    """Decay factor of the squared norm of the expected error after k steps."""
    limit = info.frob_sq / info.sigma_max_sq
    if not (0 < alpha <= limit):
        raise InadmissibleError("0 < alpha <= frob_sq / sigma_max^2", alpha, limit)
    base = 1.0 - alpha * info.sigma_min_nz_sq / info.frob_sq
    return base ** (2 * k)


def direction_decay(info: SpectralInfo, alpha: float, ell: int, k: int) -> float:
    """Per-direction decay factor along the ell-th right singular direction.

    ell is 1-based in descending singular-value order; directions beyond the
    rank have zero singular value and never move (factor 1)."""
    limit = info.frob_sq / info.sigma_max_sq
    if not (0 < alpha <= limit):
        raise InadmissibleError("0 < alpha <= frob_sq / sigma_max^2", alpha, limit)
    n = info.right_vectors.shape[0]
    if not (1 <= ell <= n):
        raise ValueError(f"direction index must be in [1, {n}], got {ell}")
    sigma_sq = info.singular_values[ell - 1] ** 2 if ell <= info.rank else 0.0
    return (1.0 - alpha * sigma_sq / info.frob_sq) ** k


def accelerated_omega_range(info: SpectralInfo, alpha: float) -> tuple[float, float, float]:
    """(lo, hi, recommended) momentum range for the accelerated mean decay."""
    limit = info.frob_sq / info.sigma_max_sq
    if not (0 < alpha <= limit):
        raise InadmissibleError("0 < alpha <= frob_sq / sigma_max^2", alpha, limit)
    ratio = alpha * info.sigma_min_nz_sq / info.frob_sq
    lo = (1.0 - math.sqrt(ratio)) ** 2
    # midpoint: hugging lo gives the best asymptotic rate but a near-defective
    # slow mode whose transient constant dwarfs any short-window envelope fit
    recommended = 0.5 * (lo + 1.0)
    return lo, 1.0, recommended


def default_stepsize(spec: SamplerSpec, info: SpectralInfo, system: LinearSystem) -> float:
    """Stock stepsize per sampler (the values used throughout the experiments).

    sgc has no stock value: callers must pass alpha explicitly; half the
    general bound's stepsize limit is a reasonable starting point."""
    kind = spec.kind
    if kind in (SamplerKind.RK, SamplerKind.RGS):
        return 1.0
    if kind is SamplerKind.DSGS:
        if info.rank == system.n:
            return 1.0 / system.n
        return info.sigma_min_nz_sq / info.sigma_max_sq
    if kind is SamplerKind.RBK:
        return system.frob_sq / beta_closed_form(spec, info, system, BetaKind.ROW_ACTION)
    if kind is SamplerKind.RBCD:
        return system.frob_sq / beta_closed_form(spec, info, system, BetaKind.COLUMN_ACTION)
    if kind is SamplerKind.BGK:
        p = spec.block_rows
        return p * system.frob_sq / ((p + 1) * info.sigma_max_sq + system.frob_sq)
    if kind is SamplerKind.BGLS:
        s = spec.block_cols
        return s * system.frob_sq / ((s + 1) * info.sigma_max_sq + system.frob_sq)
    raise ValueError(
        "sgc has no stock stepsize; pass alpha explicitly (half the general "
        "bound's alpha_max, sigma_min^2/(2 beta frob_sq), is a sound default)"
    )


def applicable_bounds(spec: SamplerSpec, info: SpectralInfo, system: LinearSystem,
                      consistent: bool) -> list[tuple[RateBound, float]]:
    """Bounds that hold for this sampler/system, with their rho scales.

    Validity only: some listed bounds need a beta constant that has no
    closed form for this sampler; fetch it by exact enumeration or Monte
    Carlo via the verification module."""
    kind = spec.kind
    column_action = kind in (SamplerKind.RGS, SamplerKind.RBCD, SamplerKind.BGLS)
    row_action = kind in (SamplerKind.RK, SamplerKind.RBK, SamplerKind.BGK)
    out = [(RateBound.MOMENTUM_GENERAL, 1.0)]
    if consistent or column_action:
        out.append((RateBound.MOMENTUM_ANNIHILATING, 1.0))
    if column_action:
        out.append((RateBound.MOMENTUM_COLUMN_ACTION, sketch_scale(spec, system)))
    if row_action and consistent:
        out.append((RateBound.MOMENTUM_ROW_ACTION_CONSISTENT, sketch_scale(spec, system)))
    if info.rank == system.n:
        out.append((RateBound.MOMENTUM_FULL_RANK, 1.0))
        if consistent:
            out.append((RateBound.MOMENTUM_FULL_RANK_CONSISTENT, 1.0))
    return out
