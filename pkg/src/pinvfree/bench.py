"""Micro-benchmark of the two iteration backends.

Runs each sampler for a fixed iteration count on one generated system with
the compiled loop and with the pure-Python loop, then prints iterations per
second and the speedup. Stopping checks are pushed out of the hot loop so
the numbers reflect update cost only.

    python3 -m pinvfree.bench --m 300 --n 120 --iters 20000
"""

from __future__ import annotations

import argparse

import numpy as np

from .core import LinearSystem, SolverConfig, compute_spectral_info
from .data import RhsRecipe, gen_conditioned, make_rhs
from .samplers import SamplerKind, SamplerSpec
from .solver import available_backends, solve
from .theory import default_stepsize


def _specs(m: int, n: int) -> list[SamplerSpec]:
    p = max(2, min(8, m))
    s = max(2, min(8, n))
    return [
        SamplerSpec(SamplerKind.RK),
        SamplerSpec(SamplerKind.RGS),
        SamplerSpec(SamplerKind.DSGS),
        SamplerSpec(SamplerKind.RBK, block_rows=p),
        SamplerSpec(SamplerKind.RBCD, block_cols=s),
        SamplerSpec(SamplerKind.BGK, block_rows=p),
        SamplerSpec(SamplerKind.BGLS, block_cols=s),
    ]


def run(m: int, n: int, iters: int, seed: int, omega: float) -> list[dict]:
    a = gen_conditioned(m, n, 5.0, seed)
    b, _ = make_rhs(a, RhsRecipe("consistent"), seed)
    system = LinearSystem(a, b)
    info = compute_spectral_info(a)
    x0 = np.zeros(n)
    rows = []
    for spec in _specs(m, n):
        alpha = default_stepsize(spec, info, system)
        cfg = SolverConfig(
            alpha=alpha, omega=omega, max_iter=iters, tol=1e-300,
            seed=seed, trace_every=iters, check_every=iters,
        )
        row = {"method": spec.label}
        for backend in available_backends():
            res = solve(system, spec, cfg, x0, backend=backend)
            row[backend] = res.iterations / max(res.elapsed_seconds, 1e-12)
        rows.append(row)
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=300)
    ap.add_argument("--n", type=int, default=120)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--omega", type=float, default=0.4)
    args = ap.parse_args(argv)

    backends = available_backends()
    print(f"system {args.m}x{args.n}, {args.iters} iterations, "
          f"omega={args.omega}, backends: {', '.join(backends)}")
    header = f"{'method':<12}" + "".join(f"{be + ' it/s':>14}" for be in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for row in run(args.m, args.n, args.iters, args.seed, args.omega):
        line = f"{row['method']:<12}"
        for be in backends:
            line += f"{row[be]:>14.3g}"
        if len(backends) == 2:
            line += f"{row['c'] / row['python']:>10.1f}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
