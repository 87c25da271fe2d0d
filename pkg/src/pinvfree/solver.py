"""Iteration drivers: plain and momentum updates over any sampler.

solve() runs one chained loop: draw indices or sketches, form the update
direction, apply x <- x - alpha*d + omega*(x - x_prev), check the stopping
rule, and trace the metric. The hot loop lives in a backend class, either
the compiled extension (_iterloop.CLoop) or the pure-Python twin
(_pyloop.PyLoop); both consume pregenerated variate blocks with the same
layout, so a given (system, spec, config, x0) follows one sample path no
matter which backend executes it.

Residuals are maintained incrementally where the sampler admits it and
recomputed from scratch every 1000 iterations to cap drift. The divergence
guard aborts once the metric passes 1e12, which is how inadmissible
stepsize and momentum pairs surface as errors instead of hangs.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import _pyloop, samplers
from .core import (
    IterationTrace,
    LinearSystem,
    Metric,
    SolverConfig,
    compute_spectral_info,
    reference_solutions,
)
from .samplers import SamplerKind, SamplerSpec, UpdateDirection

try:
    from ._iterloop import CLoop

    _HAVE_C = True
except ImportError:  # extension not built; fall back to pure Python
    CLoop = None
    _HAVE_C = False

_DIV_LIMIT = 1e12
_RECOMPUTE_EVERY = 1000
_VARIATE_BUDGET = 65536

_KIND_CODE = {
    SamplerKind.RK: 0,
    SamplerKind.RGS: 1,
    SamplerKind.DSGS: 2,
    SamplerKind.RBK: 3,
    SamplerKind.RBCD: 4,
    SamplerKind.BGK: 5,
    SamplerKind.BGLS: 6,
    SamplerKind.SGC: 7,
}

# placeholder passed when a backend takes no uniforms or no normals
_EMPTY_BLOCK = np.zeros((1, 1))


class DivergenceError(RuntimeError):
    """Raised when the metric blows past the divergence guard."""

    def __init__(self, iteration, metric, trial=None):
        self.iteration = int(iteration)
        self.metric = float(metric)
        self.trial = trial
        where = f"iteration {self.iteration}"
        if trial is not None:
            where += f" of trial {trial}"
        super().__init__(
            f"divergence at {where}: metric {self.metric:.3e} exceeded "
            f"{_DIV_LIMIT:g}; the (alpha, omega) pair is likely inadmissible"
        )


def available_backends() -> tuple[str, ...]:
    return ("c", "python") if _HAVE_C else ("python",)


def _resolve_backend(name: str | None) -> str:
    if name is None:
        name = os.environ.get("PINVFREE_BACKEND", "auto")
    name = str(name).lower()
    if name == "auto":
        return "c" if _HAVE_C else "python"
    if name == "c":
        if not _HAVE_C:
            raise RuntimeError(
                "compiled backend requested but the extension is not built"
            )
        return "c"
    if name == "python":
        return "python"
    raise ValueError(f"unknown backend {name!r}; use auto, c, or python")


def pfr_step(x, d, alpha: float) -> np.ndarray:
    """One plain update: x - alpha*d."""
    if isinstance(d, UpdateDirection):
        d = d.d
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if x.shape != d.shape:
        raise ValueError(f"shape mismatch: x {x.shape} vs d {d.shape}")
    return x - alpha * d


def mpfr_step(x, x_prev, d, alpha: float, omega: float) -> np.ndarray:
    """One momentum update: x - alpha*d + omega*(x - x_prev)."""
    if isinstance(d, UpdateDirection):
        d = d.d
    x = np.asarray(x, dtype=np.float64)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if x.shape != d.shape or x.shape != x_prev.shape:
        raise ValueError("shape mismatch between x, x_prev, and d")
    return x - alpha * d + omega * (x - x_prev)


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of one solve.

    elapsed_seconds covers the iteration loop only; setup_seconds holds the
    one-off cost of tables, SVD references, and buffer allocation. trace_x
    is filled only when iterate collection was requested and then has one
    row per trace entry.
    """

    x_final: np.ndarray
    iterations: int
    converged: bool
    trace: IterationTrace
    elapsed_seconds: float
    timed_out: bool = False
    setup_seconds: float = 0.0
    backend: str = "python"
    trace_x: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class TrialEnsemble:
    """Per-checkpoint means over independent trials of the same solve."""

    n_trials: int
    mean_metric_at_k: list
    mean_iterate_at_k: list | None
    stderr_metric_at_k: list


def _metric_now(prep, x):
    """Metric recomputed from scratch at the current iterate."""
    if prep["metric_code"] == 0:
        diff = x - prep["x_ref"]
    else:
        diff = (prep["dense"] @ x - prep["b"]) - prep["r_star"]
    return float(diff @ diff) * prep["inv_denom"]


def _prepare(system: LinearSystem, spec: SamplerSpec, config: SolverConfig, x0):
    x0 = np.ascontiguousarray(np.asarray(x0, dtype=np.float64).reshape(-1))
    if x0.shape != (system.n,):
        raise ValueError(f"x0 must have length {system.n}, got {x0.shape[0]}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 contains non-finite entries")

    tables = samplers.prepare(spec, system)
    info = compute_spectral_info(system)
    refs = reference_solutions(system, x0, info)
    dense = system.dense
    dense_t = system.dense_t
    b = np.ascontiguousarray(system.b, dtype=np.float64)
    r0 = dense @ x0 - b

    if config.metric is Metric.RSE:
        metric_code = 0
        x_ref = np.ascontiguousarray(refs.x0_star)
        r_star = np.ascontiguousarray(refs.r_star)
        denom = float(((x0 - x_ref) ** 2).sum())
        scale_sq = max(float(x0 @ x0), float(x_ref @ x_ref))
    else:
        metric_code = 1
        x_ref = np.ascontiguousarray(refs.x0_star)
        r_star = np.ascontiguousarray(refs.r_star)
        denom = float(((r0 - r_star) ** 2).sum())
        scale_sq = max(float(r0 @ r0), float(r_star @ r_star), float(b @ b))
    # a denominator at rounding level makes the ratio 0/0 noise: the start
    # already sits on the reference for every purpose double precision serves
    if denom <= 1e-24 * scale_sq:
        denom = 0.0

    kind = spec.kind
    if kind in (SamplerKind.RGS, SamplerKind.RBCD, SamplerKind.SGC):
        maintain_mode = 1
    elif kind in (SamplerKind.BGK, SamplerKind.BGLS):
        maintain_mode = 2
    else:  # rk / dsgs / rbk: maintain r only when the metric needs it
        maintain_mode = 1 if metric_code == 1 else 0

    if kind in (SamplerKind.RK, SamplerKind.RBK) and maintain_mode == 1:
        gram = np.ascontiguousarray(dense @ dense.T)
    else:
        gram = np.zeros((0, 0))

    cum = tables.cum if tables.cum is not None else np.zeros(1)
    entry_rows = (
        tables.entry_rows
        if tables.entry_rows is not None
        else np.zeros(0, dtype=np.int64)
    )
    entry_cols = (
        tables.entry_cols
        if tables.entry_cols is not None
        else np.zeros(0, dtype=np.int64)
    )
    entry_vals = (
        tables.entry_vals if tables.entry_vals is not None else np.zeros(0)
    )
    trace_a = tables.trace if tables.trace is not None else 0.0

    n_uni, n_nor = samplers.variates_per_iteration(spec, system)
    chunk = max(1, min(1024, _VARIATE_BUDGET // max(1, n_uni + n_nor)))

    return {
        "x0": x0,
        "dense": dense,
        "dense_t": dense_t,
        "b": b,
        "r0": r0,
        "info": info,
        "refs": refs,
        "metric_code": metric_code,
        "x_ref": x_ref,
        "r_star": r_star,
        "denom": denom,
        "inv_denom": 1.0 / denom if denom > 0 else 0.0,
        "maintain_mode": maintain_mode,
        "gram": gram,
        "cum": np.ascontiguousarray(cum, dtype=np.float64),
        "entry_rows": np.ascontiguousarray(entry_rows, dtype=np.int64),
        "entry_cols": np.ascontiguousarray(entry_cols, dtype=np.int64),
        "entry_vals": np.ascontiguousarray(entry_vals, dtype=np.float64),
        "trace_a": float(trace_a),
        "kind_code": _KIND_CODE[kind],
        "block": spec.block_rows or spec.block_cols or 1,
        "n_uni": n_uni,
        "n_nor": n_nor,
        "chunk": chunk,
    }


def solve(
    system: LinearSystem,
    spec: SamplerSpec,
    config: SolverConfig,
    x0,
    *,
    time_limit: float | None = None,
    collect_trace_x: bool = False,
    backend: str | None = None,
    seed_seq: np.random.SeedSequence | None = None,
) -> SolveResult:
    """Run one randomized solve from x0 with x1 = x0.

    The iteration index k counts draws; the k = 0 trace entry is the start
    point with metric 1.0 (0.0 when the start already sits at the target).
    Raises DivergenceError when the metric passes the guard. time_limit is
    checked between variate chunks, so overshoot is at most one chunk.
    """
    backend_name = _resolve_backend(backend)
    t_setup = time.perf_counter()
    prep = _prepare(system, spec, config, x0)
    setup_seconds = time.perf_counter() - t_setup
    x0 = prep["x0"]
    n = system.n

    metric0 = 1.0 if prep["denom"] > 0 else 0.0
    if metric0 <= config.tol:
        trace = IterationTrace(
            np.array([0], dtype=np.int64), np.array([metric0]), np.array([0.0])
        )
        trace_x = x0[None, :].copy() if collect_trace_x else None
        return SolveResult(
            x_final=x0.copy(),
            iterations=0,
            converged=True,
            trace=trace,
            elapsed_seconds=0.0,
            setup_seconds=setup_seconds,
            backend=backend_name,
            trace_x=trace_x,
        )

    cap = config.max_iter // config.trace_every + 3
    trace_ks = np.zeros(cap, dtype=np.int64)
    trace_vals = np.zeros(cap)
    trace_times = np.zeros(cap)
    if collect_trace_x:
        trace_xs = np.zeros((cap, n))
    else:
        trace_xs = np.zeros((1, 1))

    x = x0.copy()
    x_prev = x0.copy()
    r = prep["r0"].copy()
    r_prev = prep["r0"].copy()

    loop_cls = CLoop if backend_name == "c" else _pyloop.PyLoop
    loop = loop_cls(
        prep["kind_code"], prep["dense"], prep["dense_t"], prep["b"],
        config.alpha, config.omega, prep["block"], system.frob_sq,
        prep["trace_a"], prep["cum"], prep["entry_rows"], prep["entry_cols"],
        prep["entry_vals"], system.row_sq_norms, system.col_sq_norms,
        prep["gram"], prep["metric_code"], prep["x_ref"], prep["r_star"],
        prep["inv_denom"], config.tol, _DIV_LIMIT, config.check_every,
        config.trace_every, _RECOMPUTE_EVERY, x, x_prev, r, r_prev,
        prep["maintain_mode"], trace_ks, trace_vals, trace_times, trace_xs,
        collect_trace_x,
    )

    if seed_seq is None:
        seed_seq = np.random.SeedSequence(config.seed)
    rng = np.random.Generator(np.random.Philox(seed_seq))
    n_uni, n_nor, chunk = prep["n_uni"], prep["n_nor"], prep["chunk"]

    timed_out = False
    status = 0
    loop.start()
    t_run = time.perf_counter()
    while loop.k < config.max_iter and status == 0:
        c = min(chunk, config.max_iter - loop.k)
        uniforms = rng.random((c, n_uni)) if n_uni else _EMPTY_BLOCK
        normals = rng.standard_normal((c, n_nor)) if n_nor else _EMPTY_BLOCK
        final_chunk = loop.k + c == config.max_iter
        status = loop.run(uniforms, normals, c, final_chunk)
        if (
            time_limit is not None
            and status == 0
            and loop.k < config.max_iter
            and time.perf_counter() - t_run > time_limit
        ):
            timed_out = True
            break
    elapsed = time.perf_counter() - t_run

    count = loop.trace_count
    ks = trace_ks[:count]
    vals = trace_vals[:count]
    times = trace_times[:count]
    xs = trace_xs[:count] if collect_trace_x else None

    if status == 3:
        raise DivergenceError(loop.k, vals[-1] if count else loop.last_metric)

    if timed_out and (count == 0 or ks[-1] != loop.k):
        # the loop stopped between records; add one at the current iterate
        ks = np.append(ks, loop.k)
        vals = np.append(vals, _metric_now(prep, x))
        times = np.append(times, time.perf_counter() - t_run)
        if collect_trace_x:
            xs = np.vstack([xs, x[None, :]])

    trace = IterationTrace(
        np.concatenate([[0], ks]).astype(np.int64),
        np.concatenate([[1.0], vals]),
        np.concatenate([[0.0], times]),
    )
    trace_x_out = None
    if collect_trace_x:
        trace_x_out = np.vstack([x0[None, :], xs]) if len(xs) else x0[None, :].copy()

    return SolveResult(
        x_final=x.copy(),
        iterations=int(loop.k),
        converged=status == 1,
        trace=trace,
        elapsed_seconds=elapsed,
        timed_out=timed_out,
        setup_seconds=setup_seconds,
        backend=backend_name,
        trace_x=trace_x_out,
    )


def run_trials(
    system: LinearSystem,
    spec: SamplerSpec,
    config: SolverConfig,
    x0,
    n_trials: int,
    *,
    collect_iterates: bool = False,
    backend: str | None = None,
) -> TrialEnsemble:
    """Repeat solve over disjoint random streams and average the traces.

    The checkpoint grid is the union of traced iteration counts across
    trials, restricted to multiples of trace_every; a trial that stopped
    early contributes its last traced value at later checkpoints. Errors
    inside a trial are re-raised with the trial index attached.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    children = np.random.SeedSequence(config.seed).spawn(n_trials)
    results = []
    for t, child in enumerate(children):
        try:
            results.append(
                solve(
                    system, spec, config, x0,
                    collect_trace_x=collect_iterates,
                    backend=backend, seed_seq=child,
                )
            )
        except DivergenceError as exc:
            raise DivergenceError(exc.iteration, exc.metric, trial=t) from None
        except Exception as exc:
            raise RuntimeError(f"trial {t} failed: {exc}") from exc

    grid = sorted(
        {
            int(k)
            for res in results
            for k in res.trace.ks.tolist()
            if k % config.trace_every == 0
        }
    )
    mean_metric = []
    stderr_metric = []
    mean_iterate = [] if collect_iterates else None
    for k in grid:
        col = np.empty(n_trials)
        rows = np.empty((n_trials, system.n)) if collect_iterates else None
        for t, res in enumerate(results):
            # exact entry when traced, else the last value before k
            idx = int(np.searchsorted(res.trace.ks, k, side="right")) - 1
            col[t] = res.trace.values[idx]
            if collect_iterates:
                rows[t] = res.trace_x[idx]
        mean_metric.append((k, float(col.mean())))
        se = float(col.std(ddof=1) / math.sqrt(n_trials)) if n_trials > 1 else 0.0
        stderr_metric.append((k, se))
        if collect_iterates:
            mean_iterate.append((k, rows.mean(axis=0)))
    return TrialEnsemble(
        n_trials=n_trials,
        mean_metric_at_k=mean_metric,
        mean_iterate_at_k=mean_iterate,
        stderr_metric_at_k=stderr_metric,
    )
