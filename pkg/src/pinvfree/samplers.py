"""The eight randomized sampling rules and their update directions.

Every rule fits one contract: a random sketch pair turns the current residual
into an update direction whose expectation is A'(Ax - b) / ||A||_F^2. The
closed forms below never materialize sketching matrices; tests and the
verification module rebuild the directions from explicit matrices instead.

Kinds:
  rk    randomized Kaczmarz (row, norm-squared weights)
  rgs   randomized Gauss-Seidel (column, norm-squared weights)
  dsgs  doubly stochastic Gauss-Seidel (entry, value-squared weights)
  rbk   randomized block Kaczmarz (uniform row subset of size p)
  rbcd  randomized block coordinate descent (uniform column subset of size s)
  bgk   block Gaussian Kaczmarz (Gaussian row sketch, p columns)
  bgls  block Gaussian least squares (Gaussian column sketch, s columns)
  sgc   symmetric Gaussian coordinate (entry plus Gaussian quadratic weight)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .core import LinearSystem

ENUMERATION_CAP = 10 ** 6

# Scale for the symmetry / nonzero-trace validation of the sgc sampler.
_SGC_RTOL = 1e-12


class SamplerKind(Enum):
    RK = "rk"
    RGS = "rgs"
    DSGS = "dsgs"
    RBK = "rbk"
    RBCD = "rbcd"
    BGK = "bgk"
    BGLS = "bgls"
    SGC = "sgc"


_ROW_BLOCK_KINDS = (SamplerKind.RBK, SamplerKind.BGK)
_COL_BLOCK_KINDS = (SamplerKind.RBCD, SamplerKind.BGLS)
_ENTRY_KINDS = (SamplerKind.DSGS, SamplerKind.SGC)
FINITE_SUPPORT_KINDS = (
    SamplerKind.RK,
    SamplerKind.RGS,
    SamplerKind.DSGS,
    SamplerKind.RBK,
    SamplerKind.RBCD,
)
# Row-action kinds scale the identity on the solution side, so directions
# stay in the row space of A.
ROW_ACTION_KINDS = (SamplerKind.RK, SamplerKind.RBK, SamplerKind.BGK)


@dataclass(frozen=True)
class SamplerSpec:
    """A sampling rule plus its block size where one applies."""

    kind: SamplerKind
    block_rows: int | None = None  # p, for rbk/bgk
    block_cols: int | None = None  # s, for rbcd/bgls

    def __post_init__(self):
        if not isinstance(self.kind, SamplerKind):
            object.__setattr__(self, "kind", SamplerKind(self.kind))
        if self.kind in _ROW_BLOCK_KINDS:
            if self.block_rows is None or self.block_rows < 1:
                raise ValueError(f"{self.kind.value} needs block_rows >= 1")
            if self.block_cols is not None:
                raise ValueError(f"{self.kind.value} does not take block_cols")
        elif self.kind in _COL_BLOCK_KINDS:
            if self.block_cols is None or self.block_cols < 1:
                raise ValueError(f"{self.kind.value} needs block_cols >= 1")
            if self.block_rows is not None:
                raise ValueError(f"{self.kind.value} does not take block_rows")
        else:
            if self.block_rows is not None or self.block_cols is not None:
                raise ValueError(f"{self.kind.value} takes no block size")

    @property
    def label(self):
        if self.kind in _ROW_BLOCK_KINDS:
            return f"{self.kind.value}(p={self.block_rows})"
        if self.kind in _COL_BLOCK_KINDS:
            return f"{self.kind.value}(s={self.block_cols})"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class SampleRealization:
    """One draw from a sampler; only the kind-relevant fields are set."""

    kind: SamplerKind
    row: int | None = None  # rk
    col: int | None = None  # rgs
    pair: tuple[int, int] | None = None  # dsgs / sgc entry (i, j)
    rows: np.ndarray | None = None  # rbk subset (sorted)
    cols: np.ndarray | None = None  # rbcd subset (sorted)
    factor: np.ndarray | None = None  # bgk S (m x p) / bgls T (n x s)
    eta: np.ndarray | None = None  # sgc Gaussian vector (length n)


@dataclass(frozen=True, eq=False)
class UpdateDirection:
    """The realized update direction d with E[d] = A'(Ax - b) / ||A||_F^2."""

    d: np.ndarray


@dataclass(frozen=True, eq=False)
class SamplerTables:
    """Per-(spec, system) precomputation: cumulative categorical weights,
    entry coordinate maps, and cached scalars used by the closed forms."""

    spec: SamplerSpec
    m: int
    n: int
    frob_sq: float
    cum: np.ndarray | None = None  # cumulative probabilities over support
    entry_rows: np.ndarray | None = None  # support coordinates for entry kinds
    entry_cols: np.ndarray | None = None
    entry_vals: np.ndarray | None = None
    weights: np.ndarray | None = None  # per-support-point probabilities
    trace: float | None = None  # sgc only


def _entry_support(system: LinearSystem):
    """Coordinates and values of the nonzero entries, row-major order."""
    if system.is_sparse:
        coo = system.a.tocoo()
        mask = coo.data != 0.0
        rows = coo.row[mask].astype(np.int64)
        cols = coo.col[mask].astype(np.int64)
        vals = coo.data[mask].astype(np.float64)
        order = np.lexsort((cols, rows))
        return rows[order], cols[order], vals[order]
    dense = system.dense
    rows, cols = np.nonzero(dense)
    return rows.astype(np.int64), cols.astype(np.int64), dense[rows, cols]


def _cumulative(weights):
    total = weights.sum()
    if total <= 0:
        raise ValueError("sampler support is empty (all weights zero)")
    cum = np.cumsum(weights / total)
    cum[-1] = 1.0
    return cum


def validate_spec(spec: SamplerSpec, system: LinearSystem) -> None:
    """Check that the sampler applies to this system's shape and structure."""
    kind = spec.kind
    if kind in _ROW_BLOCK_KINDS and spec.block_rows > system.m:
        raise ValueError(
            f"block_rows={spec.block_rows} exceeds row count m={system.m}"
        )
    if kind in _COL_BLOCK_KINDS and spec.block_cols > system.n:
        raise ValueError(
            f"block_cols={spec.block_cols} exceeds column count n={system.n}"
        )
    if kind is SamplerKind.SGC:
        if system.m != system.n:
            raise ValueError("sgc needs a square matrix")
        dense = system.dense
        scale = math.sqrt(system.frob_sq)
        asym = float(np.abs(dense - dense.T).max())
        if asym > _SGC_RTOL * scale:
            raise ValueError(
                f"sgc needs a symmetric matrix (max asymmetry {asym:.3e})"
            )
        tr = float(np.trace(dense))
        if abs(tr) <= _SGC_RTOL * scale:
            raise ValueError("sgc needs a matrix with nonzero trace")


def prepare(spec: SamplerSpec, system: LinearSystem) -> SamplerTables:
    """Build the immutable draw tables for a sampler on a system."""
    validate_spec(spec, system)
    kind = spec.kind
    m, n, frob_sq = system.m, system.n, system.frob_sq
    if kind is SamplerKind.RK:
        w = system.row_sq_norms / frob_sq
        return SamplerTables(spec, m, n, frob_sq, cum=_cumulative(w), weights=w / w.sum())
    if kind is SamplerKind.RGS:
        w = system.col_sq_norms / frob_sq
        return SamplerTables(spec, m, n, frob_sq, cum=_cumulative(w), weights=w / w.sum())
    if kind in _ENTRY_KINDS:
        rows, cols, vals = _entry_support(system)
        w = vals ** 2
        w = w / w.sum()
        tr = float(np.trace(system.dense)) if kind is SamplerKind.SGC else None
        return SamplerTables(
            spec, m, n, frob_sq,
            cum=_cumulative(w), entry_rows=rows, entry_cols=cols,
            entry_vals=vals, weights=w, trace=tr,
        )
    # Block and Gaussian kinds need no tables beyond the shared scalars.
    return SamplerTables(spec, m, n, frob_sq)


def variates_per_iteration(spec: SamplerSpec, system: LinearSystem) -> tuple[int, int]:
    """(uniforms, normals) one draw consumes; fixed per spec and system."""
    kind = spec.kind
    if kind in (SamplerKind.RK, SamplerKind.RGS, SamplerKind.DSGS):
        return 1, 0
    if kind is SamplerKind.RBK:
        return spec.block_rows, 0
    if kind is SamplerKind.RBCD:
        return spec.block_cols, 0
    if kind is SamplerKind.BGK:
        return 0, system.m * spec.block_rows
    if kind is SamplerKind.BGLS:
        return 0, system.n * spec.block_cols
    return 1, system.n  # sgc


def categorical_index(cum: np.ndarray, u: float) -> int:
    """Smallest index whose cumulative weight exceeds u (ties go low)."""
    return int(np.searchsorted(cum, u, side="right").clip(0, len(cum) - 1))


def uniform_subset(count: int, k: int, uniforms: np.ndarray) -> np.ndarray:
    """Uniform k-subset of range(count) by partial Fisher-Yates, sorted."""
    idx = np.arange(count, dtype=np.int64)
    for i in range(k):
        j = i + int(uniforms[i] * (count - i))
        if j >= count:  # guard the u -> 1.0 rounding edge
            j = count - 1
        idx[i], idx[j] = idx[j], idx[i]
    return np.sort(idx[:k])


def draw(spec: SamplerSpec, system: LinearSystem, rng: np.random.Generator,
         tables: SamplerTables | None = None) -> SampleRealization:
    """Draw one realization. Consumption order per draw: uniforms first,
    then normals, exactly as reported by variates_per_iteration."""
    if tables is None:
        tables = prepare(spec, system)
    kind = spec.kind
    if kind is SamplerKind.RK:
        return SampleRealization(kind, row=categorical_index(tables.cum, rng.random()))
    if kind is SamplerKind.RGS:
        return SampleRealization(kind, col=categorical_index(tables.cum, rng.random()))
    if kind is SamplerKind.DSGS:
        t = categorical_index(tables.cum, rng.random())
        return SampleRealization(kind, pair=(int(tables.entry_rows[t]), int(tables.entry_cols[t])))
    if kind is SamplerKind.RBK:
        u = rng.random(spec.block_rows)
        return SampleRealization(kind, rows=uniform_subset(system.m, spec.block_rows, u))
    if kind is SamplerKind.RBCD:
        u = rng.random(spec.block_cols)
        return SampleRealization(kind, cols=uniform_subset(system.n, spec.block_cols, u))
    if kind is SamplerKind.BGK:
        return SampleRealization(kind, factor=rng.standard_normal((system.m, spec.block_rows)))
    if kind is SamplerKind.BGLS:
        return SampleRealization(kind, factor=rng.standard_normal((system.n, spec.block_cols)))
    # sgc: entry index, then the Gaussian weight vector
    t = categorical_index(tables.cum, rng.random())
    pair = (int(tables.entry_rows[t]), int(tables.entry_cols[t]))
    return SampleRealization(kind, pair=pair, eta=rng.standard_normal(system.n))


def update_direction(real: SampleRealization, spec: SamplerSpec,
                     system: LinearSystem, x: np.ndarray,
                     tables: SamplerTables | None = None) -> UpdateDirection:
    """Closed-form update direction for one realization at the point x."""
    kind = spec.kind
    frob_sq = system.frob_sq
    if kind is SamplerKind.RK:
        j = real.row
        a_j = system.row(j)
        nrm = system.row_sq_norms[j]
        if nrm == 0.0:
            raise ValueError(f"row {j} has zero norm")
        return UpdateDirection(((a_j @ x - system.b[j]) / nrm) * a_j)
    if kind is SamplerKind.RGS:
        i = real.col
        col = system.col(i)
        nrm = system.col_sq_norms[i]
        if nrm == 0.0:
            raise ValueError(f"column {i} has zero norm")
        r = system.matvec(x) - system.b
        d = np.zeros(system.n)
        d[i] = (col @ r) / nrm
        return UpdateDirection(d)
    if kind is SamplerKind.DSGS:
        i, j = real.pair
        a_ij = system.dense[i, j] if not system.is_sparse else system.a[i, j]
        if a_ij == 0.0:
            raise ValueError(f"entry ({i},{j}) is zero")
        d = np.zeros(system.n)
        d[j] = (system.row(i) @ x - system.b[i]) / a_ij
        return UpdateDirection(d)
    if kind is SamplerKind.RBK:
        rows = real.rows
        p = spec.block_rows
        if system.is_sparse:
            block = system.a[rows]
            rr = np.asarray(block @ x).reshape(-1) - system.b[rows]
            d = np.asarray(block.T @ rr).reshape(-1)
        else:
            block = system.dense[rows]
            rr = block @ x - system.b[rows]
            d = block.T @ rr
        return UpdateDirection((system.m / (p * frob_sq)) * d)
    if kind is SamplerKind.RBCD:
        cols = real.cols
        s = spec.block_cols
        r = system.matvec(x) - system.b
        if system.is_sparse:
            sub = np.asarray(system.a[:, cols].T @ r).reshape(-1)
        else:
            sub = system.dense[:, cols].T @ r
        d = np.zeros(system.n)
        d[cols] = (system.n / (s * frob_sq)) * sub
        return UpdateDirection(d)
    if kind is SamplerKind.BGK:
        s_factor = real.factor
        p = spec.block_rows
        r = system.matvec(x) - system.b
        # S and S' applied as chained matrix-vector products
        d = system.rmatvec(s_factor @ (s_factor.T @ r))
        return UpdateDirection(d / (p * frob_sq))
    if kind is SamplerKind.BGLS:
        t_factor = real.factor
        s = spec.block_cols
        r = system.matvec(x) - system.b
        d = t_factor @ (t_factor.T @ system.rmatvec(r))
        return UpdateDirection(d / (s * frob_sq))
    # sgc
    i, j = real.pair
    a_ij = system.dense[i, j]
    if a_ij == 0.0:
        raise ValueError(f"entry ({i},{j}) is zero")
    if tables is not None and tables.trace is not None:
        tr = tables.trace
    else:
        tr = float(np.trace(system.dense))
    eta = real.eta
    quad = float(eta @ (system.matvec(eta)))
    d = np.zeros(system.n)
    d[i] = (quad / tr) * (system.row(j) @ x - system.b[j]) / a_ij
    return UpdateDirection(d)


def enumerate_support(spec: SamplerSpec, system: LinearSystem,
                      cap: int = ENUMERATION_CAP):
    """Yield (probability, realization) over a finite-support sampler.

    Raises for Gaussian kinds and when the outcome count exceeds the cap.
    """
    validate_spec(spec, system)
    kind = spec.kind
    if kind not in FINITE_SUPPORT_KINDS:
        raise ValueError(f"{kind.value} has continuous support; use Monte Carlo")
    if kind is SamplerKind.RK:
        w = system.row_sq_norms / system.frob_sq
        for j in range(system.m):
            if w[j] > 0:
                yield float(w[j]), SampleRealization(kind, row=j)
        return
    if kind is SamplerKind.RGS:
        w = system.col_sq_norms / system.frob_sq
        for i in range(system.n):
            if w[i] > 0:
                yield float(w[i]), SampleRealization(kind, col=i)
        return
    if kind is SamplerKind.DSGS:
        rows, cols, vals = _entry_support(system)
        w = vals ** 2 / system.frob_sq
        for t in range(len(vals)):
            yield float(w[t]), SampleRealization(kind, pair=(int(rows[t]), int(cols[t])))
        return
    if kind is SamplerKind.RBK:
        count = math.comb(system.m, spec.block_rows)
        if count > cap:
            raise ValueError(f"{count} row subsets exceed the enumeration cap {cap}")
        prob = 1.0 / count
        for subset in combinations(range(system.m), spec.block_rows):
            yield prob, SampleRealization(kind, rows=np.array(subset, dtype=np.int64))
        return
    count = math.comb(system.n, spec.block_cols)
    if count > cap:
        raise ValueError(f"{count} column subsets exceed the enumeration cap {cap}")
    prob = 1.0 / count
    for subset in combinations(range(system.n), spec.block_cols):
        yield prob, SampleRealization(kind, cols=np.array(subset, dtype=np.int64))


def exact_update_operator(spec: SamplerSpec, system: LinearSystem,
                          cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Exact expectation of the n x m update operator by enumeration.

    Sums P(outcome) times the realized operator for every outcome of a
    finite-support sampler; the result should equal A' / ||A||_F^2.
    """
    kind = spec.kind
    m, n = system.m, system.n
    frob_sq = system.frob_sq
    out = np.zeros((n, m))
    if kind is SamplerKind.RK:
        for prob, real in enumerate_support(spec, system, cap):
            j = real.row
            out[:, j] += prob * system.row(j) / system.row_sq_norms[j]
        return out
    if kind is SamplerKind.RGS:
        for prob, real in enumerate_support(spec, system, cap):
            i = real.col
            out[i, :] += prob * system.col(i) / system.col_sq_norms[i]
        return out
    if kind is SamplerKind.DSGS:
        for prob, real in enumerate_support(spec, system, cap):
            i, j = real.pair
            out[j, i] += prob / system.dense[i, j]
        return out
    if kind is SamplerKind.RBK:
        scale = m / (spec.block_rows * frob_sq)
        for prob, real in enumerate_support(spec, system, cap):
            for j in real.rows:
                out[:, j] += prob * scale * system.row(int(j))
        return out
    if kind is SamplerKind.RBCD:
        scale = n / (spec.block_cols * frob_sq)
        for prob, real in enumerate_support(spec, system, cap):
            for i in real.cols:
                out[int(i), :] += prob * scale * system.col(int(i))
        return out
    raise ValueError(f"{kind.value} has continuous support; use Monte Carlo")
