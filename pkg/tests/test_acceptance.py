"""End-to-end acceptance checks, one test per shipped claim.

Each test prints a CRITERION line with the measured numbers so a -s run
reads as a report; pass/fail comes from the asserts. Stochastic checks
use seeded streams throughout and were sized so the tolerance bands sit
well clear of the Monte-Carlo noise floor.
"""

from __future__ import annotations

import time
import warnings

import numpy as np

from pinvfree import (
    BetaKind,
    GraphTopology,
    LinearSystem,
    Metric,
    RateBound,
    RhsRecipe,
    SamplerKind,
    SamplerSpec,
    SolverConfig,
    accelerated_omega_range,
    available_backends,
    beta_closed_form,
    build_report,
    check_gaussian_fourth_moment,
    compute_spectral_info,
    default_stepsize,
    estimate_beta,
    exact_update_operator,
    gen_conditioned,
    gen_gaussian,
    gen_sparse,
    incidence_system,
    make_rhs,
    mpfr_step,
    omega_upper_bound,
    pfr_step,
    reference_solutions,
    residual_envelope,
    run_trials,
    solve,
)
from pinvfree.samplers import categorical_index, prepare

from conftest import symmetric_psd_system


def _philox(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _report(n, text):
    print(f"CRITERION {n}: {text}")


def _system_from(a, seed, consistent):
    info = compute_spectral_info(a)
    mode = "consistent" if consistent else "inconsistent"
    b, _ = make_rhs(a, RhsRecipe(mode, x_star_seed=seed), seed, info)
    return LinearSystem(a, b), info


# ------------------------------------------------------------ sampler means


def test_criterion_01_finite_samplers_average_to_scaled_adjoint():
    """Enumerated sampler means equal the scaled adjoint entrywise."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    checked = 0
    for i in range(20):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(2, 7))
        a = gen_gaussian(m, n, seed=1000 + i)
        system = LinearSystem(a, np.zeros(m))
        target = a.T / system.frob_sq
        specs = [
            SamplerSpec(SamplerKind.RK),
            SamplerSpec(SamplerKind.RGS),
            SamplerSpec(SamplerKind.DSGS),
        ]
        for p in sorted({1, 2, m}):
            specs.append(SamplerSpec(SamplerKind.RBK, block_rows=p))
        for s in sorted({1, 2, n}):
            specs.append(SamplerSpec(SamplerKind.RBCD, block_cols=s))
        for spec in specs:
            mean = exact_update_operator(spec, system)
            err = float(np.abs(mean - target).max())
            worst = max(worst, err)
            checked += 1
            assert err <= 1e-12, f"{spec.kind.value} on {m}x{n}: {err:.3e}"
    dt = time.perf_counter() - t0
    _report(1, f"{checked} enumerated means, worst entry error {worst:.2e}, "
               f"{dt:.1f}s")
    assert dt <= 60.0


def test_criterion_02_gaussian_sketch_fourth_moment_identity():
    """Sample fourth moment of the Gaussian sketch matches its closed form."""
    t0 = time.perf_counter()
    rng = _philox(202)
    sizes = [(4, 3), (3, 3), (4, 2), (2, 3), (3, 2)]
    worst_z = 0.0
    worst_rel = 0.0
    for i, (m, n) in enumerate(sizes):
        a = gen_gaussian(m, n, seed=1100 + i)
        for p in (1, 2, 3):
            est, target, rel = check_gaussian_fourth_moment(a, p, 1_000_000, rng)
            z = float((np.abs(est.mean_matrix - target) / est.stderr_matrix).max())
            worst_z = max(worst_z, z)
            worst_rel = max(worst_rel, rel)
            assert z <= 5.0, f"m={m} p={p}: z={z:.2f}"
            assert rel <= 0.05, f"m={m} p={p}: rel={rel:.3%}"
    dt = time.perf_counter() - t0
    _report(2, f"15 matrix/width pairs at 1e6 draws, worst z {worst_z:.2f}, "
               f"worst rel {worst_rel:.3%}, {dt:.1f}s")
    assert dt <= 120.0


# ------------------------------------------------------- mean iterate decay


def _planted_ensemble(x0_offset, seed):
    """2000-trial row-sampling ensemble from a planted start offset."""
    a = gen_gaussian(20, 10, seed=11)
    info = compute_spectral_info(a)
    b, x_star = make_rhs(a, RhsRecipe("consistent", x_star_seed=11), 11, info)
    system = LinearSystem(a, b)
    cfg = SolverConfig(alpha=1.0, omega=0.0, max_iter=100, tol=1e-300,
                      metric=Metric.RSE, seed=seed, trace_every=1)
    ens = run_trials(system, SamplerSpec(SamplerKind.RK), cfg,
                     x_star + x0_offset, 2000, collect_iterates=True)
    return info, x_star, ens


def test_criterion_03_mean_iterate_geometric_rate():
    """Squared mean-iterate error contracts at the slow-direction rate."""
    t0 = time.perf_counter()
    a = gen_gaussian(20, 10, seed=11)
    info = compute_spectral_info(a)
    info_check = info.rank == 10
    assert info_check, "test matrix must have full column rank"
    v_min = info.right_vectors[:, -1]
    info, x_star, ens = _planted_ensemble(v_min, seed=303)
    ks = np.array([k for k, _ in ens.mean_iterate_at_k])
    errs = np.array([float(((xb - x_star) ** 2).sum())
                     for _, xb in ens.mean_iterate_at_k])
    rate_fit = float(np.exp(np.polyfit(ks, np.log(errs), 1)[0]))
    target = (1.0 - info.sigma_min_nz_sq / info.frob_sq) ** 2
    rel = abs(rate_fit - target) / target
    dt = time.perf_counter() - t0
    _report(3, f"fitted rate {rate_fit:.6f} vs predicted {target:.6f} "
               f"({rel:.3%} off), 2000 trials, {dt:.1f}s")
    assert rel <= 0.10
    assert dt <= 60.0


def test_criterion_04_per_direction_decay_ratios():
    """Mean inner products shrink per step at each direction's own ratio."""
    a = gen_gaussian(20, 10, seed=11)
    info0 = compute_spectral_info(a)
    v_top = info0.right_vectors[:, 0]
    v_min = info0.right_vectors[:, -1]
    info, x_star, ens = _planted_ensemble(v_top + v_min, seed=304)
    ks = np.array([k for k, _ in ens.mean_iterate_at_k])
    proj_top = np.array([float((xb - x_star) @ v_top)
                         for _, xb in ens.mean_iterate_at_k])
    proj_bot = np.array([float((xb - x_star) @ v_min)
                         for _, xb in ens.mean_iterate_at_k])
    # the fast direction drops under the noise floor quickly; fit it early
    win = 7
    fit_top = float(np.exp(np.polyfit(ks[:win], np.log(np.abs(proj_top[:win])), 1)[0]))
    fit_bot = float(np.exp(np.polyfit(ks, np.log(np.abs(proj_bot)), 1)[0]))
    tgt_top = 1.0 - info.sigma_max_sq / info.frob_sq
    tgt_bot = 1.0 - info.sigma_min_nz_sq / info.frob_sq
    rel_top = abs(fit_top - tgt_top) / tgt_top
    rel_bot = abs(fit_bot - tgt_bot) / tgt_bot
    _report(4, f"top ratio {fit_top:.4f} vs {tgt_top:.4f} ({rel_top:.2%} off), "
               f"bottom ratio {fit_bot:.6f} vs {tgt_bot:.6f} ({rel_bot:.3%} off)")
    assert rel_top <= 0.10
    assert rel_bot <= 0.10


# --------------------------------------------------------- momentum bounds


def _general_beta(spec, info, system):
    try:
        return beta_closed_form(spec, info, system, BetaKind.GENERAL)
    except ValueError:
        return estimate_beta(spec, system, 0, None, BetaKind.GENERAL).value


def test_criterion_05_momentum_residual_envelope_holds():
    """Trial-mean squared residual error stays under the certified envelope."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    kinds = [
        SamplerSpec(SamplerKind.RK),
        SamplerSpec(SamplerKind.RGS),
        SamplerSpec(SamplerKind.DSGS),
        SamplerSpec(SamplerKind.RBK, block_rows=2),
        SamplerSpec(SamplerKind.RBCD, block_cols=2),
        SamplerSpec(SamplerKind.BGK, block_rows=2),
        SamplerSpec(SamplerKind.BGLS, block_cols=2),
    ]
    sizes = [(50, 30), (40, 24), (36, 20)]
    worst = 0.0
    for i in range(20):
        spec = kinds[i % len(kinds)]
        m, n = sizes[i % len(sizes)]
        system, info = _system_from(gen_gaussian(m, n, seed=600 + i),
                                    600 + i, consistent=i % 2 == 0)
        beta = _general_beta(spec, info, system)
        alpha = float(rng.uniform(0.3, 0.9)) * info.sigma_min_nz_sq / (beta * system.frob_sq)
        om_max = omega_upper_bound(RateBound.MOMENTUM_GENERAL, info, beta, alpha)
        omega = float(rng.uniform(0.1, 0.8)) * om_max
        assert omega > 0.0
        report = build_report(RateBound.MOMENTUM_GENERAL, info, beta, alpha, omega)

        x0 = np.zeros(n)
        refs = reference_solutions(system, x0, info)
        r_star_sq = float((refs.r_star ** 2).sum())
        denom = float(((system.residual(x0) - refs.r_star) ** 2).sum())
        cfg = SolverConfig(alpha=alpha, omega=omega, max_iter=200, tol=1e-300,
                          metric=Metric.RRE, seed=700 + i, trace_every=25,
                          check_every=200)
        ens = run_trials(system, spec, cfg, x0, 2000)
        for (k, mval), (_, sval) in zip(ens.mean_metric_at_k, ens.stderr_metric_at_k):
            raw = mval * denom
            band = residual_envelope(k, denom, r_star_sq, report) + 3.0 * sval * denom
            worst = max(worst, raw / band)
            assert raw <= band, (f"config {i} ({spec.kind.value}) k={k}: "
                                 f"{raw:.4e} > {band:.4e}")
    dt = time.perf_counter() - t0
    _report(5, f"20 admissible configs x 9 checkpoints, worst mean/envelope "
               f"ratio {worst:.3f}, {dt:.1f}s")


def test_criterion_06_recommended_momentum_accelerates_mean_iterate():
    """At the recommended momentum the mean iterate beats its own envelope
    and the plain run by a wide factor at the horizon."""
    a = gen_gaussian(30, 15, seed=21)
    info = compute_spectral_info(a)
    b, _ = make_rhs(a, RhsRecipe("consistent", x_star_seed=21), 21, info)
    system = LinearSystem(a, b)
    refs = reference_solutions(system, np.zeros(15), info)
    x_star = refs.x0_star
    omega = accelerated_omega_range(info, 1.0)[2]

    def mean_path(om, k_max):
        # exact recursion for the expected iterate; the per-trial second
        # moment is unstable at this momentum, so trial averages drown in
        # noise long before k=200 while the expectation itself is exact
        f = info.frob_sq
        y_prev = np.zeros(15)
        y = np.zeros(15)
        errs = [float(((y - x_star) ** 2).sum())]
        for _ in range(k_max):
            y_next = y - (a.T @ (a @ y - b)) / f + om * (y - y_prev)
            y_prev, y = y, y_next
            errs.append(float(((y - x_star) ** 2).sum()))
        return np.array(errs)

    e_mom = mean_path(omega, 200)
    e_plain = mean_path(0.0, 200)
    c_fit = max(e_mom[k] / omega ** k for k in range(21))
    env = c_fit * omega ** 200
    ratio = e_plain[200] / e_mom[200]

    # ground the recursion against sampled trials over the early window
    cfg = SolverConfig(alpha=1.0, omega=omega, max_iter=10, tol=1e-300,
                      metric=Metric.RSE, seed=77, trace_every=1)
    ens = run_trials(system, SamplerSpec(SamplerKind.RK), cfg, np.zeros(15),
                     2000, collect_iterates=True)
    mc_rel = 0.0
    for k, xb in ens.mean_iterate_at_k:
        if 1 <= k <= 5:
            emp = float(((xb - x_star) ** 2).sum())
            mc_rel = max(mc_rel, abs(emp - e_mom[k]) / e_mom[k])

    _report(6, f"omega {omega:.4f}: error at 200 {e_mom[200]:.3e} vs envelope "
               f"{env:.3e}, plain/momentum ratio {ratio:.2e}, "
               f"recursion-vs-trials drift {mc_rel:.2%}")
    assert e_mom[200] <= env
    assert ratio >= 10.0
    assert mc_rel <= 0.10


def test_criterion_07_two_term_recurrence_envelope():
    """The folded geometric envelope dominates the two-term recurrence."""
    rng = np.random.default_rng(707)
    n_cfg = 10_000
    g1 = rng.uniform(0.0, 1.0, n_cfg)
    g2 = rng.uniform(0.0, 1.0, n_cfg) * (1.0 - g1) * 0.999
    g2[:100] = 0.0
    zeta = rng.uniform(0.0, 2.0, n_cfg)
    zeta[100:200] = 0.0
    f0 = rng.uniform(0.0, 5.0, n_cfg)
    f0[200:300] = 0.0

    q = np.where(g2 > 0, 0.5 * (g1 + np.sqrt(g1 * g1 + 4.0 * g2)), g1)
    tau = q - g1
    head = (1.0 + tau) * f0
    offset = zeta / (1.0 - q)

    # the two seeds F^0 = F^1 share the k=0 envelope; step t produces
    # F^{t+1}, whose envelope uses q^t
    f_prev = f0.copy()
    f_cur = f0.copy()
    qk = np.ones(n_cfg)
    worst = float(((f_cur - head) / np.maximum(head, 1e-30)).max())
    for _ in range(500):
        f_next = g1 * f_cur + g2 * f_prev + zeta
        qk *= q
        bound = qk * head + (1.0 - qk) * offset
        # rounding headroom only; the inequality itself is exact
        viol = float(((f_next - bound) / np.maximum(bound, 1e-30)).max())
        worst = max(worst, viol)
        f_prev, f_cur = f_cur, f_next
    _report(7, f"{n_cfg} admissible tuples x 500 steps, worst relative "
               f"excursion {worst:.2e}")
    assert worst <= 1e-9


# ------------------------------------------------------ iteration counting


def _mean_iterations(system, spec, alpha, omega, metric, root, n_trials=10):
    children = np.random.SeedSequence(root).spawn(n_trials)
    total = 0
    for child in children:
        cfg = SolverConfig(alpha=alpha, omega=omega, max_iter=5_000_000,
                          tol=1e-6, metric=metric, seed=0,
                          trace_every=1_000_000, check_every=10)
        res = solve(system, spec, cfg, np.zeros(system.n), seed_seq=child)
        assert res.converged
        total += res.iterations
    return total / n_trials


def test_criterion_08_momentum_cuts_iterations_to_tolerance():
    """Momentum strictly reduces mean iterations to tolerance for the
    row method on a conditioned consistent system and for the three
    column methods on an inconsistent one."""
    t0 = time.perf_counter()
    lines = []

    a = gen_conditioned(500, 100, 30.0, seed=31)
    sys_con, _ = _system_from(a, 31, consistent=True)
    base = _mean_iterations(sys_con, SamplerSpec(SamplerKind.RK), 1.0, 0.0,
                            Metric.RSE, root=100)
    for omega in (0.3, 0.4, 0.5):
        got = _mean_iterations(sys_con, SamplerSpec(SamplerKind.RK), 1.0,
                               omega, Metric.RSE, root=100)
        lines.append(f"rk w={omega}: {got:.0f} vs {base:.0f}")
        assert got < base, lines[-1]

    # inconsistent target: a few fast directions over a uniform slow bulk,
    # where the residual metric still has to drain the bulk
    g = np.random.default_rng(31).standard_normal((500, 100))
    u, _, vt = np.linalg.svd(g, full_matrices=False)
    sig = np.r_[np.full(5, 10.0), np.full(95, 10.0 / 30.0)]
    sys_inc, info = _system_from((u * sig) @ vt, 31, consistent=False)
    for spec in (SamplerSpec(SamplerKind.RGS),
                 SamplerSpec(SamplerKind.RBCD, block_cols=20),
                 SamplerSpec(SamplerKind.BGLS, block_cols=20)):
        alpha = default_stepsize(spec, info, sys_inc)
        base = _mean_iterations(sys_inc, spec, alpha, 0.0, Metric.RRE, root=200)
        for omega in (0.3, 0.4, 0.5):
            got = _mean_iterations(sys_inc, spec, alpha, omega, Metric.RRE,
                                   root=200)
            lines.append(f"{spec.label} w={omega}: {got:.0f} vs {base:.0f}")
            assert got < base, lines[-1]
    dt = time.perf_counter() - t0
    _report(8, "; ".join(lines) + f"; {dt:.1f}s")


def test_criterion_09_consensus_momentum_halves_iterations():
    """On the 100-node ring, momentum 0.5 halves the block-row method's
    mean iteration count, near the published reference counts."""
    t0 = time.perf_counter()
    topo = GraphTopology("cycle", 100)
    c = np.random.default_rng(42).random(100)
    system, _ = incidence_system(topo, c)
    info = compute_spectral_info(system.dense)
    spec = SamplerSpec(SamplerKind.RBK, block_rows=20)
    alpha = default_stepsize(spec, info, system)

    means = {}
    for omega in (0.0, 0.5):
        children = np.random.SeedSequence(900).spawn(10)
        counts = []
        for child in children:
            cfg = SolverConfig(alpha=alpha, omega=omega, max_iter=500_000,
                              tol=1e-12, metric=Metric.RSE, seed=0,
                              trace_every=100_000, check_every=1)
            res = solve(system, spec, cfg, c, seed_seq=child)
            assert res.converged
            counts.append(res.iterations)
        means[omega] = float(np.mean(counts))

    half = means[0.0] / 2.0
    dt = time.perf_counter() - t0
    _report(9, f"mean iterations {means[0.0]:.0f} (plain) vs {means[0.5]:.0f} "
               f"(momentum), half-count target {half:.0f}, reference "
               f"35500/17700, {dt:.1f}s")
    assert abs(means[0.5] - half) <= 0.20 * half
    assert abs(means[0.0] - 35500.0) <= 0.50 * 35500.0
    assert abs(means[0.5] - 17700.0) <= 0.50 * 17700.0
    assert dt <= 300.0


# ------------------------------------------------------------ constants


def test_criterion_10_beta_closed_forms_match_oracle():
    """Closed-form second-moment constants agree with the measuring oracle."""
    system, info = _system_from(gen_gaussian(10, 6, seed=83), 83, True)
    finite = [
        SamplerSpec(SamplerKind.RK),
        SamplerSpec(SamplerKind.RGS),
        SamplerSpec(SamplerKind.DSGS),
        SamplerSpec(SamplerKind.RBK, block_rows=2),
        SamplerSpec(SamplerKind.RBCD, block_cols=2),
    ]
    worst_exact = 0.0
    for spec in finite:
        closed = beta_closed_form(spec, info, system)
        est = estimate_beta(spec, system, 0, None)
        assert est.exact
        rel = abs(est.value - closed) / closed
        worst_exact = max(worst_exact, rel)
        assert rel <= 1e-10, f"{spec.label}: rel={rel:.2e}"

    rng = _philox(84)
    worst_z = 0.0
    gaussian = [SamplerSpec(SamplerKind.BGK, block_rows=2),
                SamplerSpec(SamplerKind.BGLS, block_cols=2)]
    for spec in gaussian:
        closed = beta_closed_form(spec, info, system)
        est = estimate_beta(spec, system, 100_000, rng)
        z = abs(est.value - closed) / est.stderr
        worst_z = max(worst_z, z)
        assert z <= 5.0, f"{spec.label}: z={z:.2f}"

    psd_system, psd_info, _ = symmetric_psd_system(6, seed=29)
    spec = SamplerSpec(SamplerKind.SGC)
    closed = beta_closed_form(spec, psd_info, psd_system)
    est = estimate_beta(spec, psd_system, 100_000, rng)
    z = abs(est.value - closed) / est.stderr
    worst_z = max(worst_z, z)
    assert z <= 5.0, f"sgc: z={z:.2f}"
    _report(10, f"5 enumerated constants (worst rel {worst_exact:.2e}), "
                f"3 sampled constants at 1e5 draws (worst z {worst_z:.2f})")


def test_criterion_11_determinism_and_zero_momentum_equivalence():
    """Same seed, same trace, on every backend; the momentum update at
    zero momentum is the plain update, stepwise and end to end."""
    system, info = _system_from(gen_gaussian(10, 6, seed=19), 19, True)
    spec = SamplerSpec(SamplerKind.RK)
    cfg = SolverConfig(alpha=0.9, omega=0.0, max_iter=120, tol=1e-300, seed=5)
    for backend in available_backends():
        first = solve(system, spec, cfg, np.zeros(6), backend=backend,
                      seed_seq=np.random.SeedSequence(5))
        second = solve(system, spec, cfg, np.zeros(6), backend=backend,
                       seed_seq=np.random.SeedSequence(5))
        assert np.array_equal(first.x_final, second.x_final)
        assert np.array_equal(first.trace.ks, second.trace.ks)
        assert np.array_equal(first.trace.values, second.trace.values)
        other = solve(system, spec, cfg, np.zeros(6), backend=backend,
                      seed_seq=np.random.SeedSequence(6))
        assert not np.array_equal(first.x_final, other.x_final)

    rng = np.random.default_rng(11)
    for _ in range(50):
        x = rng.standard_normal(6)
        xp = rng.standard_normal(6)
        d = rng.standard_normal(6)
        assert np.array_equal(mpfr_step(x, xp, d, 0.9, 0.0),
                              pfr_step(x, d, 0.9))

    # a dedicated momentum-free loop over the same draw stream reproduces
    # the momentum solver at omega zero, bit for bit
    res = solve(system, spec, cfg, np.zeros(6), backend="python")
    tables = prepare(spec, system)
    us = _philox(5).random((120, 1))
    x = np.zeros(6)
    dense = system.dense
    for k in range(120):
        j = categorical_index(tables.cum, us[k, 0])
        step = cfg.alpha * (dense[j] @ x - system.b[j]) / system.row_sq_norms[j]
        x = x - step * dense[j]
    assert np.array_equal(res.x_final, x)
    _report(11, f"repeat traces identical on backends {available_backends()}; "
                f"zero-momentum run equals plain loop bitwise")


def test_criterion_12_wall_clock_ranking_report():
    """Non-gating timing report: row-method ranking on consistent systems
    and column-method ranking on inconsistent ones, each on one dense and
    one sparse matrix. Timings are hardware-bound, so nothing here asserts
    speed; the rankings are emitted for inspection."""
    dense = gen_conditioned(300, 80, 5.0, seed=90)
    with warnings.catch_warnings():
        # rows the sparse draw leaves empty carry zero sampling weight and
        # do not affect the timing comparison
        warnings.simplefilter("ignore", UserWarning)
        sparse = gen_sparse(200, 50, 0.4, 2.0, seed=91)

    trios = {
        "consistent": (Metric.RSE,
                       [SamplerSpec(SamplerKind.RK),
                        SamplerSpec(SamplerKind.RBK, block_rows=20),
                        SamplerSpec(SamplerKind.BGK, block_rows=20)]),
        "inconsistent": (Metric.RRE,
                         [SamplerSpec(SamplerKind.RGS),
                          SamplerSpec(SamplerKind.RBCD, block_cols=20),
                          SamplerSpec(SamplerKind.BGLS, block_cols=20)]),
    }
    rows = []
    for label, a in (("dense 300x80", dense), ("sparse 200x50", sparse)):
        arr = a.toarray() if hasattr(a, "toarray") else a
        info = compute_spectral_info(arr)
        # the sparse generator only approximates its condition target, so
        # report the measured value alongside the timings
        kappa = float(info.singular_values[0] / info.singular_values[-1])
        for mode, (metric, specs) in trios.items():
            b, _ = make_rhs(arr, RhsRecipe(mode, x_star_seed=92), 92, info)
            system = LinearSystem(a, b)
            ranking = []
            for spec in specs:
                alpha = default_stepsize(spec, info, system)
                cfg = SolverConfig(alpha=alpha, omega=0.5, max_iter=5_000_000,
                                  tol=1e-12, metric=metric, seed=12,
                                  trace_every=1_000_000, check_every=100)
                res = solve(system, spec, cfg, np.zeros(system.n),
                            seed_seq=np.random.SeedSequence(93))
                status = "ok" if res.converged else "hit max_iter"
                ranking.append((res.elapsed_seconds, spec.label,
                                res.iterations, status))
            ranking.sort()
            rows.append(f"{label} (cond {kappa:.0f}) {mode} -> " + ", ".join(
                f"{name} {secs*1e3:.0f}ms/{iters}it ({status})"
                for secs, name, iters, status in ranking))
    _report(12, " | ".join(rows))
    assert len(rows) == 4
