"""Problem containers shared across the library.

A LinearSystem holds the matrix and right-hand side. Spectral summaries and
reference solutions are computed once per system through a full SVD and are
reused by the solver, the rate calculators, and the verification tools. The
pseudoinverse is never formed densely; references act through the SVD factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.sparse as sp

# Relative scale for the numerical-rank cutoff (see compute_spectral_info).
_EPS = 2.0 ** -52

_MAX_SEED = 2 ** 64


class Metric(Enum):
    """Progress metrics: solution error (RSE) or residual error (RRE),
    both squared and normalized by the initial error."""

    RSE = "rse"
    RRE = "rre"


def _as_vector(v, m, name):
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (m,):
        raise ValueError(f"{name} must have length {m}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """An m x n real system A x = b (dense ndarray or CSR sparse storage)."""

    a: object
    b: np.ndarray

    def __post_init__(self):
        a = self.a
        if sp.issparse(a):
            a = sp.csr_matrix(a).astype(np.float64)
            if not np.all(np.isfinite(a.data)):
                raise ValueError("matrix contains non-finite entries")
        else:
            a = np.asarray(a, dtype=np.float64)
            if a.ndim != 2:
                raise ValueError(f"matrix must be 2-d, got shape {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError("matrix contains non-finite entries")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"matrix must be at least 1x1, got {a.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _as_vector(self.b, a.shape[0], "b"))
        if self.frob_sq <= 0.0:
            raise ValueError("matrix is identically zero")

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]

    @property
    def shape(self):
        return self.a.shape

    @property
    def is_sparse(self):
        return sp.issparse(self.a)

    @cached_property
    def dense(self):
        """Row-major dense copy of A (desk-scale systems only)."""
        if self.is_sparse:
            return np.ascontiguousarray(self.a.toarray(), dtype=np.float64)
        return np.ascontiguousarray(self.a, dtype=np.float64)

    @cached_property
    def dense_t(self):
        """Row-major dense copy of A transposed (fast column access)."""
        return np.ascontiguousarray(self.dense.T)

    @cached_property
    def frob_sq(self):
        if self.is_sparse:
            return float((self.a.data ** 2).sum())
        return float((np.asarray(self.a) ** 2).sum())

    @cached_property
    def row_sq_norms(self):
        if self.is_sparse:
            out = np.asarray(self.a.multiply(self.a).sum(axis=1)).reshape(-1)
        else:
            out = (np.asarray(self.a) ** 2).sum(axis=1)
        return np.ascontiguousarray(out, dtype=np.float64)

    @cached_property
    def col_sq_norms(self):
        if self.is_sparse:
            out = np.asarray(self.a.multiply(self.a).sum(axis=0)).reshape(-1)
        else:
            out = (np.asarray(self.a) ** 2).sum(axis=0)
        return np.ascontiguousarray(out, dtype=np.float64)

    def row(self, i):
        """Row i as a dense length-n vector."""
        if self.is_sparse:
            return self.a.getrow(i).toarray().reshape(-1)
        return np.asarray(self.a)[i].copy()

    def col(self, j):
        """Column j as a dense length-m vector."""
        if self.is_sparse:
            return self.a.getcol(j).toarray().reshape(-1)
        return np.asarray(self.a)[:, j].copy()

    def matvec(self, x):
        return np.asarray(self.a @ x).reshape(-1)

    def rmatvec(self, y):
        if self.is_sparse:
            return np.asarray(self.a.T @ y).reshape(-1)
        return np.asarray(self.a).T @ y

    def residual(self, x):
        return self.matvec(x) - self.b


@dataclass(frozen=True, eq=False)
class SpectralInfo:
    """SVD summary of a matrix: positive singular values (descending), rank,
    extreme singular values, squared Frobenius norm, and singular vectors."""

    sigma_min_nz: float
    sigma_max: float
    frob_sq: float
    rank: int
    right_vectors: np.ndarray  # n x n orthogonal, columns are right vectors
    singular_values: np.ndarray  # length rank, descending, all > 0
    left_vectors: np.ndarray  # m x m orthogonal, columns are left vectors

    @property
    def sigma_min_nz_sq(self):
        return self.sigma_min_nz ** 2

    @property
    def sigma_max_sq(self):
        return self.sigma_max ** 2


def compute_spectral_info(a) -> SpectralInfo:
    """Full SVD with a conventional numerical-rank cutoff.

    A singular value counts as nonzero when it exceeds
    max(m, n) * sigma_max * 2**-52. Raises on all-zero input; numpy raises
    LinAlgError if the SVD fails to converge.
    """
    if isinstance(a, LinearSystem):
        dense = a.dense
    elif sp.issparse(a):
        dense = a.toarray().astype(np.float64)
    else:
        dense = np.asarray(a, dtype=np.float64)
    if dense.ndim != 2:
        raise ValueError("matrix must be 2-d")
    frob_sq = float((dense ** 2).sum())
    if frob_sq <= 0.0:
        raise ValueError("matrix is identically zero")
    m, n = dense.shape
    u, s, vt = np.linalg.svd(dense, full_matrices=True)
    threshold = max(m, n) * s[0] * _EPS
    rank = int(np.count_nonzero(s > threshold))
    retained = np.ascontiguousarray(s[:rank])
    return SpectralInfo(
        sigma_min_nz=float(retained[-1]),
        sigma_max=float(s[0]),
        frob_sq=frob_sq,
        rank=rank,
        right_vectors=np.ascontiguousarray(vt.T),
        singular_values=retained,
        left_vectors=np.ascontiguousarray(u),
    )


@dataclass(frozen=True, eq=False)
class ReferenceSolutions:
    """Exact targets for a system and a starting point: the least-norm
    least-squares solution, the x0-dependent fixed point, and the
    least-squares residual."""

    x_ls: np.ndarray  # pseudoinverse solution
    x0_star: np.ndarray  # x_ls + component of x0 in the null space of A
    r_star: np.ndarray  # A x_ls - b


def reference_solutions(system: LinearSystem, x0, info: SpectralInfo | None = None) -> ReferenceSolutions:
    """Compute reference targets through SVD factors (no dense pseudoinverse).

    x_ls solves the normal equations with minimum norm; x0_star adds back the
    null-space component of x0; r_star is the residual at x_ls.
    """
    x0 = _as_vector(x0, system.n, "x0")
    if info is None:
        info = compute_spectral_info(system)
    r = info.rank
    ur = info.left_vectors[:, :r]
    vr = info.right_vectors[:, :r]
    s = info.singular_values
    x_ls = vr @ ((ur.T @ system.b) / s)
    x0_star = x_ls + x0 - vr @ (vr.T @ x0)
    r_star = system.matvec(x_ls) - system.b
    return ReferenceSolutions(x_ls=x_ls, x0_star=x0_star, r_star=r_star)


def is_consistent(system: LinearSystem, refs: ReferenceSolutions, rtol: float = 1e-10) -> bool:
    """True when the least-squares residual vanishes relative to b."""
    return float(np.linalg.norm(refs.r_star)) <= rtol * max(1.0, float(np.linalg.norm(system.b)))


def rse(x, x_ref, x0) -> float:
    """Squared solution error normalized by the initial one."""
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    denom = float(((x0 - x_ref) ** 2).sum())
    if denom <= 0.0:
        raise ValueError("initial point already equals the reference (zero denominator)")
    return float(((x - x_ref) ** 2).sum()) / denom


def rre(r, r_star, r0) -> float:
    """Squared residual error normalized by the initial one."""
    r = np.asarray(r, dtype=np.float64)
    r_star = np.asarray(r_star, dtype=np.float64)
    r0 = np.asarray(r0, dtype=np.float64)
    denom = float(((r0 - r_star) ** 2).sum())
    if denom <= 0.0:
        raise ValueError("initial residual already equals the reference (zero denominator)")
    return float(((r - r_star) ** 2).sum()) / denom


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters for a solve: stepsize, momentum, stopping rule, seed.

    check_every controls how often the stopping rule is evaluated (1 gives
    exact iteration counts; timing runs may use trace_every to keep the
    metric out of the hot loop).
    """

    alpha: float
    omega: float = 0.0
    max_iter: int = 1000
    tol: float = 1e-6
    metric: Metric = Metric.RSE
    seed: int = 0
    trace_every: int = 1
    check_every: int = 1

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.omega >= 0):
            raise ValueError(f"omega must be nonnegative, got {self.omega}")
        if not (self.tol > 0):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.trace_every < 1 or self.check_every < 1:
            raise ValueError("trace_every and check_every must be at least 1")
        if not (0 <= int(self.seed) < _MAX_SEED):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if not isinstance(self.metric, Metric):
            object.__setattr__(self, "metric", Metric(self.metric))


@dataclass(frozen=True, eq=False)
class IterationTrace:
    """Metric values sampled along one solve, with wall-clock stamps.

    Entry k = 0 is always present and records metric 1.0 (the metrics are
    normalized by the initial error)."""

    ks: np.ndarray
    values: np.ndarray
    seconds: np.ndarray

    @property
    def entries(self):
        return list(zip(self.ks.tolist(), self.values.tolist(), self.seconds.tolist()))

    def __len__(self):
        return len(self.ks)

    def final(self):
        return int(self.ks[-1]), float(self.values[-1])
