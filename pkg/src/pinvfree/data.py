"""Test-problem construction: synthetic matrices, right-hand sides,
Matrix Market files, and graph incidence systems for average consensus.

All generators are pure functions of their seed (Philox streams keyed by
SeedSequence), so any system used in a test or experiment can be rebuilt
exactly from its recorded parameters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import LinearSystem, SpectralInfo, compute_spectral_info


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def gen_gaussian(m: int, n: int, seed) -> np.ndarray:
    """Dense matrix of i.i.d. standard normal entries."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    return _rng(seed).standard_normal((m, n))


def gen_conditioned(m: int, n: int, kappa: float, seed) -> np.ndarray:
    """Gaussian draw remapped to condition number exactly kappa.

    Takes the SVD of a Gaussian matrix and applies the affine map on
    singular values that keeps the largest one fixed and sends the smallest
    to sigma_max/kappa; the spacing pattern of the spectrum is preserved.
    Works for either orientation (the remap happens on the transposed
    problem when m < n).
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if m < n:
        return gen_conditioned(n, m, kappa, seed).T
    for attempt in range(10):
        raw = gen_gaussian(m, n, seed if attempt == 0 else [seed, attempt])
        u, s, vt = np.linalg.svd(raw, full_matrices=False)
        spread = s[0] - s[-1]
        if spread > 0 or n == 1:
            break
    else:
        raise ValueError("no singular-value spread after bounded retries")
    if n == 1:
        return raw
    target_min = s[0] / kappa
    mapped = target_min + (s - s[-1]) * (s[0] - target_min) / spread
    return (u * mapped) @ vt


def gen_sparse(m: int, n: int, density: float, kappa: float, seed):
    """Sparse matrix with roughly density*m*n nonzeros and condition ~kappa.

    Sums min(m, n) sparse rank-1 outer products with geometrically spaced
    scales from 1 down to 1/kappa. The placement budget is inflated to
    -log(1-density)*m*n so the expected union of supports hits the target
    density; the condition number is approximate, not exact, and should be
    reported post hoc if it matters. density=1 falls back to the dense
    conditioned generator.
    """
    if not (0 < density <= 1):
        raise ValueError("density must be in (0, 1]")
    if density == 1.0:
        return sp.csr_matrix(gen_conditioned(m, n, kappa, seed))
    rng = _rng(seed)
    r = min(m, n)
    per_term = -math.log1p(-density) * m * n / r
    scales = kappa ** (-np.arange(r) / max(r - 1, 1))
    rows, cols, vals = [], [], []
    carry = 0.0
    for i in range(r):
        want = per_term + carry
        if want < 0.5:
            carry = want
            continue
        nnz_u = int(np.clip(round(math.sqrt(want * m / n)), 1, m))
        nnz_v = int(np.clip(round(want / nnz_u), 1, n))
        carry = want - nnz_u * nnz_v
        u_idx = rng.choice(m, nnz_u, replace=False)
        v_idx = rng.choice(n, nnz_v, replace=False)
        u_val = rng.standard_normal(nnz_u)
        v_val = rng.standard_normal(nnz_v)
        u_val /= np.linalg.norm(u_val)
        v_val /= np.linalg.norm(v_val)
        rows.append(np.repeat(u_idx, nnz_v))
        cols.append(np.tile(v_idx, nnz_u))
        vals.append(scales[i] * np.outer(u_val, v_val).ravel())
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, n),
    ).tocsr()
    mat.sum_duplicates()
    row_nnz = np.diff(mat.indptr)
    col_cover = np.zeros(n, dtype=bool)
    col_cover[mat.indices] = True
    if (row_nnz == 0).any() or not col_cover.all():
        warnings.warn(
            "sparse draw left some rows or columns empty; raise density "
            "for full support coverage",
            stacklevel=2,
        )
    return mat


class RhsMode(Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class RhsRecipe:
    """How to build b: plant x* (consistent) or add a left-null component."""

    mode: RhsMode
    x_star_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.mode, RhsMode):
            object.__setattr__(self, "mode", RhsMode(self.mode))


def make_rhs(a, recipe: RhsRecipe, seed, info: SpectralInfo | None = None):
    """Right-hand side with a known planted solution.

    Consistent: b = A x* for standard normal x*. Inconsistent: adds N z with
    N an orthonormal basis of the left null space and z standard normal, so
    x* stays a least-squares solution. Returns (b, x_star).
    """
    a_arr = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=np.float64)
    m, n = a_arr.shape
    # nested entropy keeps x* independent of the matrix stream even when the
    # caller reuses one seed for both
    x_star = _rng([recipe.x_star_seed, 211]).standard_normal(n)
    b = a_arr @ x_star
    if recipe.mode is RhsMode.CONSISTENT:
        return b, x_star
    if info is None:
        info = compute_spectral_info(a_arr)
    if info.rank >= m:
        raise ValueError(
            "inconsistent right-hand side needs rank < m (the left null "
            f"space is trivial at rank {info.rank})"
        )
    null_basis = info.left_vectors[:, info.rank:]
    z = _rng([seed, 212]).standard_normal(m - info.rank)
    return b + null_basis @ z, x_star


_MM_HEADER = "%%MatrixMarket"


def _mm_fail(path, lineno, msg):
    raise ValueError(f"{path}:{lineno}: {msg}")


def read_matrix_market(path):
    """Parse a Matrix Market file (coordinate or array, real, general or
    symmetric). Coordinate data returns CSR with duplicates summed; array
    data returns a dense ndarray. Errors carry the offending line number."""
    path = Path(path)
    with path.open("r", encoding="ascii", errors="replace") as fh:
        lines = fh.readlines()
    if not lines:
        _mm_fail(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != _MM_HEADER or header[1].lower() != "matrix":
        _mm_fail(path, 1, "malformed header (expected '%%MatrixMarket matrix "
                          "<format> <field> <symmetry>')")
    fmt, field, symmetry = (tok.lower() for tok in header[2:5])
    if fmt not in ("coordinate", "array"):
        _mm_fail(path, 1, f"unsupported format '{fmt}'")
    if field != "real":
        _mm_fail(path, 1, f"unsupported field '{field}' (only real)")
    if symmetry not in ("general", "symmetric"):
        _mm_fail(path, 1, f"unsupported symmetry '{symmetry}'")

    data_lines = []
    for lineno, raw in enumerate(lines[1:], start=2):
        stripped = raw.strip()
        if not stripped or stripped.startswith("%"):
            continue
        data_lines.append((lineno, stripped))
    if not data_lines:
        _mm_fail(path, len(lines), "missing size line")

    size_lineno, size_line = data_lines[0]
    size_tok = size_line.split()
    if fmt == "coordinate":
        if len(size_tok) != 3:
            _mm_fail(path, size_lineno, "coordinate size line needs 'm n nnz'")
        try:
            m, n, nnz = (int(t) for t in size_tok)
        except ValueError:
            _mm_fail(path, size_lineno, "non-integer size entry")
        if m < 1 or n < 1 or nnz < 0:
            _mm_fail(path, size_lineno, "invalid dimensions")
        if symmetry == "symmetric" and m != n:
            _mm_fail(path, size_lineno, "symmetric matrix must be square")
        entries = data_lines[1:]
        if len(entries) < nnz:
            _mm_fail(path, len(lines), f"expected {nnz} entries, found {len(entries)}")
        if len(entries) > nnz:
            _mm_fail(path, entries[nnz][0], f"extra data past the {nnz} declared entries")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for k, (lineno, line) in enumerate(entries):
            tok = line.split()
            if len(tok) != 3:
                _mm_fail(path, lineno, "entry needs 'i j value'")
            try:
                i, j, v = int(tok[0]), int(tok[1]), float(tok[2])
            except ValueError:
                _mm_fail(path, lineno, f"cannot parse entry '{line}'")
            if not (1 <= i <= m and 1 <= j <= n):
                _mm_fail(path, lineno, f"index ({i}, {j}) out of range for {m}x{n}")
            rows[k], cols[k], vals[k] = i - 1, j - 1, v
        if symmetry == "symmetric":
            off = rows != cols
            rows = np.concatenate([rows, cols[off]])
            cols = np.concatenate([cols, rows[:nnz][off]])
            vals = np.concatenate([vals, vals[:nnz][off]])
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        mat.sum_duplicates()
        return mat

    if len(size_tok) != 2:
        _mm_fail(path, size_lineno, "array size line needs 'm n'")
    try:
        m, n = (int(t) for t in size_tok)
    except ValueError:
        _mm_fail(path, size_lineno, "non-integer size entry")
    if m < 1 or n < 1:
        _mm_fail(path, size_lineno, "invalid dimensions")
    if symmetry == "symmetric" and m != n:
        _mm_fail(path, size_lineno, "symmetric matrix must be square")
    expect = m * n if symmetry == "general" else n * (n + 1) // 2
    entries = data_lines[1:]
    if len(entries) < expect:
        _mm_fail(path, len(lines), f"expected {expect} values, found {len(entries)}")
    if len(entries) > expect:
        _mm_fail(path, entries[expect][0], "extra data past the declared values")
    vals = np.empty(expect, dtype=np.float64)
    for k, (lineno, line) in enumerate(entries):
        tok = line.split()
        if len(tok) != 1:
            _mm_fail(path, lineno, "array entry must be a single value")
        try:
            vals[k] = float(tok[0])
        except ValueError:
            _mm_fail(path, lineno, f"cannot parse value '{line}'")
    if symmetry == "general":
        return vals.reshape((m, n), order="F").copy()
    out = np.zeros((n, n))
    k = 0
    for j in range(n):  # stored column-wise from the diagonal down
        cnt = n - j
        out[j:, j] = vals[k:k + cnt]
        k += cnt
    return out + np.tril(out, -1).T


def write_matrix_market(path, a) -> None:
    """Emit coordinate (sparse input) or array (dense input) real general
    format with 17 significant digits, enough to round-trip doubles."""
    path = Path(path)
    with path.open("w", encoding="ascii") as fh:
        if sp.issparse(a):
            coo = a.tocoo()
            fh.write(f"{_MM_HEADER} matrix coordinate real general\n")
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
        else:
            arr = np.asarray(a, dtype=np.float64)
            fh.write(f"{_MM_HEADER} matrix array real general\n")
            fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
            for v in arr.ravel(order="F"):
                fh.write(f"{v:.17g}\n")


class GraphKind(Enum):
    CYCLE = "cycle"
    LINE = "line"
    RGG = "rgg"


@dataclass(frozen=True)
class GraphTopology:
    """Graph family for consensus systems. radius applies to rgg only and
    defaults to log(n)/n when omitted."""

    kind: GraphKind
    n_nodes: int
    radius: float | None = None

    def __post_init__(self):
        if not isinstance(self.kind, GraphKind):
            object.__setattr__(self, "kind", GraphKind(self.kind))
        if self.kind is GraphKind.CYCLE and self.n_nodes < 3:
            raise ValueError("cycle needs at least 3 nodes")
        if self.kind is not GraphKind.CYCLE and self.n_nodes < 2:
            raise ValueError("graph needs at least 2 nodes")
        if self.kind is GraphKind.RGG:
            if self.radius is None:
                object.__setattr__(
                    self, "radius", math.log(self.n_nodes) / self.n_nodes
                )
            if self.radius <= 0:
                raise ValueError("radius must be positive")
        elif self.radius is not None:
            raise ValueError("radius only applies to rgg")


def _connected(n: int, edges) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = n
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    return comps == 1


def _rgg_edges(n: int, radius: float, rng) -> list[tuple[int, int]]:
    pts = rng.random((n, 2))
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    iu, iv = np.triu_indices(n, k=1)
    keep = d2[iu, iv] <= radius * radius
    return list(zip(iu[keep].tolist(), iv[keep].tolist()))


def incidence_system(topo: GraphTopology, c, seed=0):
    """Signed incidence system whose solutions from x0 = c reach consensus.

    Each undirected edge (u, v) with u < v contributes a row with +1 at u
    and -1 at v; b = 0. Returns (system, c_bar) where c_bar = mean(c) is the
    consensus value (the projection of c onto the all-ones null direction
    for a connected graph). Disconnected rgg draws are regenerated, up to 50
    times."""
    c = np.asarray(c, dtype=np.float64)
    n = topo.n_nodes
    if c.shape != (n,):
        raise ValueError(f"private values must have length {n}")
    if topo.kind is GraphKind.CYCLE:
        edges = [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)]
    elif topo.kind is GraphKind.LINE:
        edges = [(i, i + 1) for i in range(n - 1)]
    else:
        rng = _rng(seed)
        for _ in range(50):
            edges = _rgg_edges(n, topo.radius, rng)
            if _connected(n, edges):
                break
        else:
            raise ValueError(
                "random geometric graph stayed disconnected after 50 draws; "
                "increase the radius"
            )
    m = len(edges)
    rows = np.repeat(np.arange(m), 2)
    cols = np.array([uv for edge in edges for uv in edge], dtype=np.int64)
    vals = np.tile(np.array([1.0, -1.0]), m)
    a = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
    system = LinearSystem(a, np.zeros(m))
    return system, float(c.mean())
