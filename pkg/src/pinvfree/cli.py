"""Command-line front end.

Subcommands generate or load a linear system, run the randomized solvers,
and emit plot-ready CSV (with '#'-prefixed provenance headers) or textual
rate certificates. Exit codes: 0 on success, 1 when a configuration is
inadmissible or a verification check fails, 2 on I/O, parse, or usage
errors.
"""

from __future__ import annotations

import sys
import time

import click
import numpy as np

from . import data, theory, verify
from .core import (
    LinearSystem,
    Metric,
    SolverConfig,
    compute_spectral_info,
    is_consistent,
    reference_solutions,
)
from .samplers import FINITE_SUPPORT_KINDS, SamplerKind, SamplerSpec
from .solver import DivergenceError, run_trials, solve
from .theory import InadmissibleError

_CELL_TIMEOUT = 200.0
_COLUMN_KINDS = (SamplerKind.RGS, SamplerKind.RBCD, SamplerKind.BGLS)


def _common_options(fn):
    opts = [
        click.option(
            "--method", default="rk", show_default=True,
            help="sampler kind(s), comma separated: rk rgs dsgs rbk rbcd "
                 "bgk bgls sgc (an m prefix such as mrk is accepted)",
        ),
        click.option("--m", "m_rows", type=int, default=100, show_default=True,
                      help="rows of the generated matrix"),
        click.option("--n", "n_cols", type=int, default=50, show_default=True,
                      help="columns of the generated matrix (nodes for consensus)"),
        click.option("--kappa", type=float, default=0.0,
                      help="target condition number; 0 keeps the raw Gaussian spectrum"),
        click.option("--density", type=float, default=1.0, show_default=True,
                      help="nonzero fraction; below 1 generates a sparse matrix"),
        click.option("--mtx", type=click.Path(), default=None,
                      help="load the matrix from a MatrixMarket file instead of generating"),
        click.option("--rhs", type=click.Choice(["consistent", "inconsistent"]),
                      default="consistent", show_default=True),
        click.option("--alpha", default="default", show_default=True,
                      help="stepsize, a number or 'default'"),
        click.option("--omega", default="0", show_default=True,
                      help="momentum value or comma list"),
        click.option("--trials", type=int, default=10, show_default=True),
        click.option("--max-iter", "max_iter", type=int, default=None,
                      help="iteration cap [default: 100000; consensus 10000000]"),
        click.option("--tol", type=float, default=None,
                      help="stopping tolerance [default: 1e-6; compare and consensus 1e-12]"),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--block", type=int, default=2, show_default=True,
                      help="block size: rows p for rbk/bgk, columns s for rbcd/bgls"),
        click.option("--out", type=click.Path(), default=None,
                      help="write the output file here instead of stdout"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _parse_kind(name: str) -> SamplerKind:
    name = name.strip().lower()
    candidates = [name]
    if name.startswith("m") and len(name) > 1:
        candidates.append(name[1:])
    for cand in candidates:
        try:
            return SamplerKind(cand)
        except ValueError:
            continue
    raise click.UsageError(
        f"unknown method {name!r}; choose from "
        + ", ".join(k.value for k in SamplerKind)
    )


def _make_spec(kind: SamplerKind, block: int) -> SamplerSpec:
    if kind in (SamplerKind.RBK, SamplerKind.BGK):
        return SamplerSpec(kind, block_rows=block)
    if kind in (SamplerKind.RBCD, SamplerKind.BGLS):
        return SamplerSpec(kind, block_cols=block)
    return SamplerSpec(kind)


def _parse_specs(method: str, block: int) -> list[SamplerSpec]:
    specs = [
        _make_spec(_parse_kind(tok), block)
        for tok in method.split(",")
        if tok.strip()
    ]
    if not specs:
        raise click.UsageError("method list is empty")
    return specs


def _single_spec(method: str, block: int) -> SamplerSpec:
    specs = _parse_specs(method, block)
    if len(specs) != 1:
        raise click.UsageError("this subcommand takes exactly one method")
    return specs[0]


def _parse_omegas(text: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"bad omega list {text!r}")
    if not vals:
        raise click.UsageError("omega list is empty")
    if any(w < 0 for w in vals):
        raise click.UsageError("omega must be nonnegative")
    return vals


def _build_system(m_rows, n_cols, kappa, density, mtx, rhs, seed):
    """Matrix from flags, right-hand side from the rhs recipe."""
    if mtx is not None:
        a = data.read_matrix_market(mtx)
        src = f"mtx={mtx}"
    elif density < 1.0:
        a = data.gen_sparse(m_rows, n_cols, density, kappa if kappa > 0 else 1.0, seed)
        src = (f"gen=sparse m={m_rows} n={n_cols} density={density} "
               f"kappa={kappa if kappa > 0 else 1.0} seed={seed}")
    elif kappa > 0:
        a = data.gen_conditioned(m_rows, n_cols, kappa, seed)
        src = f"gen=conditioned m={m_rows} n={n_cols} kappa={kappa} seed={seed}"
    else:
        a = data.gen_gaussian(m_rows, n_cols, seed)
        src = f"gen=gaussian m={m_rows} n={n_cols} seed={seed}"
    info = compute_spectral_info(a)
    b, _ = data.make_rhs(a, data.RhsRecipe(rhs), seed, info=info)
    return LinearSystem(a, b), info, src


def _resolve_alpha(alpha_text, spec, info, system) -> float:
    if str(alpha_text).strip().lower() == "default":
        return theory.default_stepsize(spec, info, system)
    try:
        value = float(alpha_text)
    except ValueError:
        raise click.UsageError(
            f"--alpha must be a number or 'default', got {alpha_text!r}"
        )
    if value <= 0:
        raise click.UsageError("alpha must be positive")
    return value


def _pick_metric(kind: SamplerKind, rhs: str) -> Metric:
    # column-action methods solve least squares, so the residual metric is
    # the one that converges on inconsistent systems
    if rhs == "inconsistent" and kind in _COLUMN_KINDS:
        return Metric.RRE
    return Metric.RSE


def _prov(sub: str, pairs) -> list[str]:
    lines = [f"# pinvfree {sub}"]
    lines.extend(f"# {key}={value}" for key, value in pairs)
    return lines


def _emit(out_path, lines):
    text = "\n".join(lines) + "\n"
    if out_path is None:
        click.echo(text, nl=False)
        return
    try:
        with open(out_path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    click.echo(f"wrote {out_path}")


def _guard(body):
    try:
        return body()
    except click.ClickException:
        raise
    except InadmissibleError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    except DivergenceError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    except (OSError, ValueError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)


def _held(ks, vals, k):
    """Value at the largest recorded iteration <= k."""
    idx = int(np.searchsorted(ks, k, side="right")) - 1
    return vals[idx]


@click.group()
@click.version_option(package_name="pinvfree")
def main():
    """Randomized pseudoinverse-free linear-system solvers."""


@main.command("solve")
@_common_options
def cmd_solve(**kw):
    """Run one method once and emit its iteration trace as CSV."""

    def body():
        spec = _single_spec(kw["method"], kw["block"])
        omegas = _parse_omegas(kw["omega"])
        if len(omegas) != 1:
            raise click.UsageError("solve takes one omega; use sweep for lists")
        system, info, src = _build_system(
            kw["m_rows"], kw["n_cols"], kw["kappa"], kw["density"],
            kw["mtx"], kw["rhs"], kw["seed"],
        )
        alpha = _resolve_alpha(kw["alpha"], spec, info, system)
        metric = _pick_metric(spec.kind, kw["rhs"])
        tol = kw["tol"] if kw["tol"] is not None else 1e-6
        max_iter = kw["max_iter"] if kw["max_iter"] is not None else 100000
        cfg = SolverConfig(
            alpha=alpha, omega=omegas[0], max_iter=max_iter, tol=tol,
            metric=metric, seed=kw["seed"],
        )
        res = solve(system, spec, cfg, np.zeros(system.n))
        lines = _prov("solve", [
            ("method", spec.label), ("matrix", src), ("rhs", kw["rhs"]),
            ("alpha", f"{alpha:.12g}"), ("omega", f"{omegas[0]:.12g}"),
            ("metric", metric.value), ("tol", f"{tol:g}"),
            ("max_iter", max_iter), ("seed", kw["seed"]),
            ("converged", res.converged), ("iterations", res.iterations),
            ("setup_seconds", f"{res.setup_seconds:.6f}"),
            ("elapsed_seconds", f"{res.elapsed_seconds:.6f}"),
            ("backend", res.backend),
        ])
        lines.append("iter,metric,seconds")
        for k, v, t in res.trace.entries:
            lines.append(f"{int(k)},{v:.12e},{t:.6f}")
        _emit(kw["out"], lines)

    _guard(body)


@main.command("sweep")
@_common_options
def cmd_sweep(**kw):
    """Trial-mean metric per iteration, one CSV column per omega."""

    def body():
        spec = _single_spec(kw["method"], kw["block"])
        omegas = _parse_omegas(kw["omega"])
        system, info, src = _build_system(
            kw["m_rows"], kw["n_cols"], kw["kappa"], kw["density"],
            kw["mtx"], kw["rhs"], kw["seed"],
        )
        alpha = _resolve_alpha(kw["alpha"], spec, info, system)
        metric = _pick_metric(spec.kind, kw["rhs"])
        tol = kw["tol"] if kw["tol"] is not None else 1e-6
        max_iter = kw["max_iter"] if kw["max_iter"] is not None else 100000
        x0 = np.zeros(system.n)

        series: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        markers: dict[float, str] = {}
        for w in omegas:
            cfg = SolverConfig(
                alpha=alpha, omega=w, max_iter=max_iter, tol=tol,
                metric=metric, seed=kw["seed"],
            )
            try:
                ens = run_trials(system, spec, cfg, x0, kw["trials"])
            except DivergenceError as exc:
                markers[w] = (
                    f"diverged at iteration {exc.iteration}"
                    + (f" in trial {exc.trial}" if exc.trial is not None else "")
                )
                continue
            ks = np.array([k for k, _ in ens.mean_metric_at_k])
            vals = np.array([v for _, v in ens.mean_metric_at_k])
            series[w] = (ks, vals)

        pairs = [
            ("method", spec.label), ("matrix", src), ("rhs", kw["rhs"]),
            ("alpha", f"{alpha:.12g}"),
            ("omega", ",".join(f"{w:g}" for w in omegas)),
            ("trials", kw["trials"]), ("metric", metric.value),
            ("tol", f"{tol:g}"), ("max_iter", max_iter), ("seed", kw["seed"]),
        ]
        pairs.extend(
            (f"omega_{w:g}", markers[w]) for w in omegas if w in markers
        )
        lines = _prov("sweep", pairs)
        lines.append("iter," + ",".join(f"omega_{w:g}" for w in omegas))
        grid = sorted({int(k) for ks, _ in series.values() for k in ks})
        if not grid:
            grid = [0]
        for k in grid:
            row = [str(k)]
            for w in omegas:
                if w in markers:
                    row.append("diverged")
                else:
                    ks, vals = series[w]
                    row.append(f"{_held(ks, vals, k):.12e}")
            lines.append(",".join(row))
        _emit(kw["out"], lines)

    _guard(body)


@main.command("compare")
@_common_options
def cmd_compare(**kw):
    """Wall-time against metric for several methods at a tight tolerance.

    Timing covers the iteration loop only; setup cost is reported in the
    header. Each method gets a 200 second budget."""

    def body():
        specs = _parse_specs(kw["method"], kw["block"])
        omegas = _parse_omegas(kw["omega"])
        if len(omegas) != 1:
            raise click.UsageError("compare takes one omega")
        omega = omegas[0]
        system, info, src = _build_system(
            kw["m_rows"], kw["n_cols"], kw["kappa"], kw["density"],
            kw["mtx"], kw["rhs"], kw["seed"],
        )
        tol = kw["tol"] if kw["tol"] is not None else 1e-12
        max_iter = kw["max_iter"] if kw["max_iter"] is not None else 10**7
        every = max(1, max_iter // 4000)

        pairs = [
            ("methods", ",".join(s.label for s in specs)), ("matrix", src),
            ("rhs", kw["rhs"]), ("omega", f"{omega:g}"), ("tol", f"{tol:g}"),
            ("max_iter", max_iter), ("seed", kw["seed"]),
            ("stopping_checked_every", every),
            ("per_method_time_limit_seconds", f"{_CELL_TIMEOUT:g}"),
        ]
        rows = []
        for spec in specs:
            alpha = _resolve_alpha(kw["alpha"], spec, info, system)
            metric = _pick_metric(spec.kind, kw["rhs"])
            cfg = SolverConfig(
                alpha=alpha, omega=omega, max_iter=max_iter, tol=tol,
                metric=metric, seed=kw["seed"], trace_every=every,
                check_every=every,
            )
            try:
                res = solve(system, spec, cfg, np.zeros(system.n),
                            time_limit=_CELL_TIMEOUT)
            except DivergenceError as exc:
                pairs.append((f"method_{spec.label}", f"diverged: {exc}"))
                continue
            status = "timeout" if res.timed_out else (
                "converged" if res.converged else "max_iter"
            )
            pairs.append((
                f"method_{spec.label}",
                f"alpha={alpha:.12g} metric={metric.value} status={status} "
                f"iterations={res.iterations} "
                f"setup_seconds={res.setup_seconds:.6f} "
                f"elapsed_seconds={res.elapsed_seconds:.6f} "
                f"backend={res.backend}",
            ))
            rows.extend(
                f"{spec.label},{int(k)},{t:.6f},{v:.12e}"
                for k, v, t in res.trace.entries
            )
        lines = _prov("compare", pairs)
        lines.append("method,iter,seconds,metric")
        lines.extend(rows)
        _emit(kw["out"], lines)

    _guard(body)


@main.command("consensus")
@_common_options
@click.option("--graph", type=click.Choice(["cycle", "line", "rgg"]),
              default="cycle", show_default=True)
@click.option("--radius", type=float, default=None,
              help="rgg connection radius [default: log(n)/n]")
def cmd_consensus(**kw):
    """Average-consensus benchmark on a graph incidence system.

    Runs rk, rbk, and bgk with and without momentum from the private node
    values and reports mean iterations and seconds to reach the consensus
    value at RSE <= tol. Cells that exhaust the 200 second budget show --.
    """

    def body():
        n = kw["n_cols"]
        topo = data.GraphTopology(kw["graph"], n, kw["radius"])
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([kw["seed"], 1]))
        )
        c = rng.standard_normal(n)
        system, c_bar = data.incidence_system(topo, c, seed=kw["seed"])
        info = compute_spectral_info(system.a)
        tol = kw["tol"] if kw["tol"] is not None else 1e-12
        max_iter = kw["max_iter"] if kw["max_iter"] is not None else 10**7
        omegas = _parse_omegas(kw["omega"])
        if omegas == [0.0]:
            omegas = [0.0, 0.5]
        p = min(kw["block"], system.m)
        specs = [
            SamplerSpec(SamplerKind.RK),
            SamplerSpec(SamplerKind.RBK, block_rows=p),
            SamplerSpec(SamplerKind.BGK, block_rows=p),
        ]

        pairs = [
            ("graph", topo.kind.value), ("nodes", n), ("edges", system.m),
            ("consensus_value", f"{c_bar:.12g}"),
            ("omega", ",".join(f"{w:g}" for w in omegas)),
            ("block", p), ("trials", kw["trials"]), ("tol", f"{tol:g}"),
            ("max_iter", max_iter), ("seed", kw["seed"]),
            ("per_cell_time_limit_seconds", f"{_CELL_TIMEOUT:g}"),
        ]
        lines = _prov("consensus", pairs)
        lines.append("method,omega,mean_iterations,mean_seconds,status")
        for spec in specs:
            alpha = _resolve_alpha(kw["alpha"], spec, info, system)
            for w in omegas:
                cfg = SolverConfig(
                    alpha=alpha, omega=w, max_iter=max_iter, tol=tol,
                    metric=Metric.RSE, seed=kw["seed"], trace_every=100,
                    check_every=100,
                )
                children = np.random.SeedSequence(kw["seed"]).spawn(kw["trials"])
                budget = _CELL_TIMEOUT
                iters, secs = [], []
                status = "ok"
                for child in children:
                    t0 = time.perf_counter()
                    try:
                        res = solve(system, spec, cfg, c,
                                    time_limit=budget, seed_seq=child)
                    except DivergenceError:
                        status = "diverged"
                        break
                    budget -= time.perf_counter() - t0
                    if res.timed_out or budget <= 0 or not res.converged:
                        status = "timeout" if res.timed_out else (
                            "ok" if res.converged else "max_iter"
                        )
                        if status != "ok":
                            break
                    iters.append(res.iterations)
                    secs.append(res.elapsed_seconds)
                if status == "ok" and len(iters) == kw["trials"]:
                    lines.append(
                        f"{spec.label},{w:g},{np.mean(iters):.1f},"
                        f"{np.mean(secs):.4f},ok"
                    )
                else:
                    lines.append(f"{spec.label},{w:g},--,--,{status}")
        _emit(kw["out"], lines)

    _guard(body)


@main.command("verify")
@_common_options
@click.option("--corrupt", default=None,
              help="negative-control hook: perturb this method's sampling "
                   "probabilities so the identity check must fail")
def cmd_verify(**kw):
    """Run the statistical verification suite and print verdicts."""

    def body():
        system, info, src = _build_system(
            kw["m_rows"], kw["n_cols"], kw["kappa"], kw["density"],
            kw["mtx"], kw["rhs"], kw["seed"],
        )
        results = verify.run_suite(
            system, seed=kw["seed"], corrupt_method=kw["corrupt"]
        )
        lines = _prov("verify", [
            ("matrix", src), ("seed", kw["seed"]),
            ("corrupt", kw["corrupt"]),
        ])
        lines.extend(verify.format_results(results).splitlines())
        failed = [r.name for r in results if not r.passed]
        lines.append(
            f"# verdict: {'PASS' if not failed else 'FAIL (' + ', '.join(failed) + ')'}"
        )
        _emit(kw["out"], lines)
        if failed:
            sys.exit(1)

    _guard(body)


def _beta_for_bound(spec, system, info, beta_kind, seed):
    """Constant for a bound: closed form if one exists, else the oracle."""
    try:
        return theory.beta_closed_form(spec, info, system, beta_kind), "closed-form"
    except ValueError:
        pass
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed, 23]))
    )
    est = verify.estimate_beta(spec, system, 200_000, rng, kind=beta_kind)
    how = "oracle-exact" if est.exact else f"oracle-mc n={est.n_samples}"
    return est.value, how


@main.command("rates")
@_common_options
def cmd_rates(**kw):
    """Print convergence certificates for one method on one system.

    One block per applicable bound: the beta constant and its source, the
    admissible stepsize cap, the momentum cap, and the certified rate q
    with its transient factor. Exits 1 when no bound admits the configured
    (alpha, omega) pair."""

    def body():
        spec = _single_spec(kw["method"], kw["block"])
        omegas = _parse_omegas(kw["omega"])
        if len(omegas) != 1:
            raise click.UsageError("rates takes one omega")
        omega = omegas[0]
        system, info, src = _build_system(
            kw["m_rows"], kw["n_cols"], kw["kappa"], kw["density"],
            kw["mtx"], kw["rhs"], kw["seed"],
        )
        alpha = _resolve_alpha(kw["alpha"], spec, info, system)
        refs = reference_solutions(system, np.zeros(system.n), info)
        consistent = is_consistent(system, refs)
        lines = _prov("rates", [
            ("method", spec.label), ("matrix", src), ("rhs", kw["rhs"]),
            ("alpha", f"{alpha:.12g}"), ("omega", f"{omega:.12g}"),
            ("seed", kw["seed"]),
            ("rank", info.rank), ("sigma_min", f"{info.sigma_min_nz:.12g}"),
            ("sigma_max", f"{info.sigma_max:.12g}"),
            ("frob_sq", f"{info.frob_sq:.12g}"),
            ("consistent", consistent),
        ])
        admitted = 0
        rejected = 0
        for bound, rho in theory.applicable_bounds(spec, info, system, consistent):
            beta_kind = theory.BOUND_BETA[bound]
            try:
                beta, how = _beta_for_bound(spec, system, info, beta_kind, kw["seed"])
            except ValueError as exc:
                lines.append(f"-- {bound.value}: beta unavailable ({exc})")
                lines.append("")
                continue
            lines.append(f"-- {bound.value} (beta source: {how})")
            try:
                report = theory.build_report(
                    bound, info, beta, alpha, omega, rho=rho
                )
            except InadmissibleError as exc:
                lines.append(str(exc))
                lines.append("")
                rejected += 1
                continue
            lines.extend(report.to_kv_text().splitlines())
            lines.append("")
            admitted += 1
        try:
            lo, hi, rec = theory.accelerated_omega_range(info, alpha)
            lines.append(
                f"accelerated omega range: ({lo:.12g}, {hi:g}) "
                f"recommended={rec:.12g}"
            )
        except (ValueError, InadmissibleError) as exc:
            lines.append(f"accelerated omega range: unavailable ({exc})")
        _emit(kw["out"], lines)
        if admitted == 0 and rejected > 0:
            sys.exit(1)

    _guard(body)


if __name__ == "__main__":
    main()
