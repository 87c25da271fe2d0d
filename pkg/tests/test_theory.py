"""Closed-form rates: frozen values, admissibility walls, and identities."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinvfree import (
    BetaKind,
    InadmissibleError,
    LinearSystem,
    RateBound,
    SamplerKind,
    SamplerSpec,
    accelerated_omega_range,
    applicable_bounds,
    beta_closed_form,
    build_report,
    compute_spectral_info,
    default_stepsize,
    direction_decay,
    expected_iterate_rate,
    momentum_rate,
    momentum_upper_bound,
    omega_upper_bound,
    rate_q,
    residual_envelope,
    sketch_scale,
)
from pinvfree.theory import BOUND_BETA, BOUND_HAS_OFFSET, BOUND_MEASURES_RESIDUAL

from conftest import build_system

MOMENTUM_BOUNDS = [b for b in RateBound if b is not RateBound.PLAIN_GENERAL]


def identity_system(n=2):
    system = LinearSystem(np.eye(n), np.ones(n))
    return system, compute_spectral_info(system.dense)


def test_rate_q_frozen_value():
    q, tau = rate_q(0.5, 0.1)
    assert q == pytest.approx(0.6531128874149275, rel=1e-12)
    assert tau == pytest.approx(0.1531128874149275, rel=1e-12)


def test_rate_q_no_second_term():
    q, tau = rate_q(0.7, 0.0)
    assert q == 0.7
    assert tau == 0.0


def test_rate_q_rejections():
    with pytest.raises(InadmissibleError):
        rate_q(0.6, 0.5)  # gamma1 + gamma2 >= 1
    with pytest.raises(InadmissibleError):
        rate_q(0.5, -0.01)


@given(
    g1=st.floats(0.0, 0.99),
    frac=st.floats(0.0, 0.999),
)
@settings(max_examples=300, deadline=None)
def test_rate_q_characteristic_identity(g1, frac):
    """q = gamma1 + tau solves t^2 = gamma1 t + gamma2, so (g1+tau) tau = g2."""
    g2 = frac * (0.999 - g1)
    q, tau = rate_q(g1, g2)
    assert abs((g1 + tau) * tau - g2) <= 1e-12
    assert g1 <= q < 1.0


def test_momentum_upper_bound_frozen():
    _, info = identity_system()
    # t1 = 4, t2 = 2*0.5*0.5 - 2*0.25*0.5 = 0.25, root (sqrt(20)-4)/8
    got = momentum_upper_bound(info, beta=0.5, alpha=0.5)
    assert got == pytest.approx((math.sqrt(20.0) - 4.0) / 8.0, rel=1e-12)
    assert got == pytest.approx(0.059016994374947425, rel=1e-12)


def test_momentum_upper_bound_requires_positive_headroom():
    _, info = identity_system()
    # alpha at the stationary point of t2 leaves none
    with pytest.raises(InadmissibleError):
        momentum_upper_bound(info, beta=0.5, alpha=2.0)


def test_omega_upper_bound_is_the_admissibility_wall():
    """gamma1 + gamma2 crosses 1 exactly at the returned omega.

    momentum_rate reports the raw pair; the certificate gate lives in
    rate_q, which build_report applies."""
    system, info, _ = build_system(9, 5, seed=8)
    beta = 1.0 / info.frob_sq  # row-action constant for single-row sketches
    for bound in MOMENTUM_BOUNDS:
        alpha = 0.8
        w = omega_upper_bound(bound, info, beta, alpha)
        assert w > 0
        g1, g2 = momentum_rate(bound, info, beta, alpha, 0.999 * w)
        assert g1 + g2 < 1.0
        g1h, g2h = momentum_rate(bound, info, beta, alpha, 1.001 * w)
        assert g1h + g2h > 1.0
        build_report(bound, info, beta, alpha, 0.999 * w)
        with pytest.raises(InadmissibleError):
            build_report(bound, info, beta, alpha, 1.001 * w)


def test_momentum_rate_zero_alpha_degenerates():
    _, info = identity_system()
    g1, g2 = momentum_rate(RateBound.MOMENTUM_GENERAL, info, 0.5, 0.0, 0.0)
    assert g1 == pytest.approx(1.0)
    assert g2 == pytest.approx(0.0)


def test_plain_bound_rejects_momentum():
    _, info = identity_system()
    with pytest.raises(InadmissibleError):
        momentum_rate(RateBound.PLAIN_GENERAL, info, 0.5, 0.5, 0.1)


def test_plain_rate_identity_matrix():
    # eta = 1 - (2 alpha - alpha^2 beta1 F) sigma_min^2/F at alpha = 1, I_2:
    # single-row sketches have beta = 1/F, so eta = 1 - 1/2 = 1/2 for the
    # consistent full-rank bound; the plain general bound gives 0.75 at 0.5
    _, info = identity_system()
    g1, g2 = momentum_rate(RateBound.PLAIN_GENERAL, info, 0.5, 0.5, 0.0)
    assert g2 == 0.0
    assert g1 == pytest.approx(0.75, rel=1e-12)


def test_report_eta_matches_identity_example():
    """Single-row sampler on I_2 at alpha = 0.5: the consistent bounds all
    certify q = eta = 0.625 once momentum is off."""
    system, info = identity_system()
    beta = 1.0 / info.frob_sq
    for bound in (
        RateBound.MOMENTUM_ROW_ACTION_CONSISTENT,
        RateBound.MOMENTUM_FULL_RANK_CONSISTENT,
        RateBound.MOMENTUM_ANNIHILATING,
    ):
        rep = build_report(bound, info, beta, alpha=0.5, omega=0.0)
        assert rep.q == pytest.approx(0.625, rel=1e-12)
        assert rep.eta == pytest.approx(0.625, rel=1e-12)
        assert rep.tau == 0.0


def test_report_eta_is_momentum_free_gamma1():
    system, info, _ = build_system(10, 6, seed=4)
    beta = 1.0 / info.frob_sq
    for bound in MOMENTUM_BOUNDS:
        w = 0.5 * max(omega_upper_bound(bound, info, beta, 0.7), 0.0)
        rep = build_report(bound, info, beta, alpha=0.7, omega=w)
        g1_zero, _ = momentum_rate(bound, info, beta, 0.7, 0.0)
        assert rep.eta == pytest.approx(g1_zero, rel=1e-12)


def test_momentum_never_tightens_the_certificate():
    """The certified q at omega > 0 is never below the omega = 0 value."""
    system, info, _ = build_system(8, 5, seed=12)
    beta = 1.0 / info.frob_sq
    rng = np.random.default_rng(0)
    for bound in MOMENTUM_BOUNDS:
        alpha = 0.6
        w_max = omega_upper_bound(bound, info, beta, alpha)
        rep0 = build_report(bound, info, beta, alpha, 0.0)
        for _ in range(25):
            w = rng.uniform(0.0, 0.95 * w_max)
            rep = build_report(bound, info, beta, alpha, w)
            assert rep.q >= rep0.q - 1e-12


def test_alpha_walls_per_bound():
    system, info, _ = build_system(9, 6, seed=3)
    beta = 1.0 / info.frob_sq
    for bound in MOMENTUM_BOUNDS:
        rep = build_report(bound, info, beta, 0.5, 0.0)
        assert rep.alpha_max > 0
        momentum_rate(bound, info, beta, 0.999 * rep.alpha_max, 0.0)
        with pytest.raises(InadmissibleError):
            momentum_rate(bound, info, beta, 1.001 * rep.alpha_max, 0.0)


def test_report_kv_text_fields():
    _, info = identity_system()
    rep = build_report(RateBound.MOMENTUM_GENERAL, info, 0.5, 0.5, 0.02)
    text = rep.to_kv_text()
    for key in ("bound=", "alpha=", "omega=", "beta=", "eta=", "gamma1=",
                "gamma2=", "q=", "tau=", "alpha_max=", "omega_max=",
                "measures=", "offset="):
        assert key in text


def test_residual_envelope_shape():
    _, info = identity_system()
    rep = build_report(RateBound.MOMENTUM_GENERAL, info, 0.5, 0.4, 0.01)
    e0 = residual_envelope(0, 2.0, 0.0, rep)
    assert e0 == pytest.approx((1.0 + rep.tau) * 2.0, rel=1e-12)
    # consistent: pure geometric decay
    assert residual_envelope(50, 2.0, 0.0, rep) == pytest.approx(
        rep.q ** 50 * (1 + rep.tau) * 2.0, rel=1e-12)
    # inconsistent: approaches the noise floor from either side
    floor = 2.0 * rep.alpha ** 2 * rep.beta * 3.0 / (1.0 - rep.q)
    assert residual_envelope(100000, 2.0, 3.0, rep) == pytest.approx(
        floor, rel=1e-6)
    with pytest.raises(ValueError):
        residual_envelope(-1, 1.0, 0.0, rep)


def test_residual_envelope_dominates_recurrence():
    """Simulating the two-term recurrence never crosses the envelope."""
    _, info = identity_system()
    rep = build_report(RateBound.MOMENTUM_GENERAL, info, 0.5, 0.4, 0.01)
    zeta = 2.0 * rep.alpha ** 2 * rep.beta * 3.0
    f_prev = f_cur = 2.0
    for k in range(1, 300):
        f_prev, f_cur = f_cur, rep.gamma1 * f_cur + rep.gamma2 * f_prev + zeta
        env = residual_envelope(k, 2.0, 3.0, rep)
        assert f_cur <= env * (1.0 + 1e-9)


def test_expected_iterate_rate_and_direction_decay_frozen():
    a = np.zeros((3, 2))
    a[0, 0] = 3.0
    a[1, 1] = 4.0
    info = compute_spectral_info(a)
    # sigma_min^2/F = 9/25
    assert expected_iterate_rate(info, 1.0, 1) == pytest.approx(0.4096)
    assert expected_iterate_rate(info, 1.0, 0) == 1.0
    # 1-based in descending order: ell = 1 is sigma = 4
    assert direction_decay(info, 1.0, 1, 1) == pytest.approx(1 - 16 / 25)
    assert direction_decay(info, 1.0, 2, 2) == pytest.approx((1 - 9 / 25) ** 2)
    with pytest.raises(ValueError):
        direction_decay(info, 1.0, 3, 1)


def test_accelerated_omega_range_frozen():
    _, info = identity_system()
    lo, hi, rec = accelerated_omega_range(info, 0.5)
    assert lo == pytest.approx(0.25, rel=1e-12)
    assert hi == 1.0
    assert rec == pytest.approx(0.625, rel=1e-12)
    assert lo < rec < hi
    with pytest.raises(InadmissibleError):
        accelerated_omega_range(info, 3.0)


def test_sketch_scales():
    system, _, _ = build_system(8, 5, seed=2)
    F = system.frob_sq
    assert sketch_scale(SamplerSpec(SamplerKind.RK), system) == 1.0
    assert sketch_scale(SamplerSpec(SamplerKind.RGS), system) == 1.0
    assert sketch_scale(SamplerSpec(SamplerKind.RBK, block_rows=3), system) == \
        pytest.approx(1.0 / F)
    assert sketch_scale(SamplerSpec(SamplerKind.RBCD, block_cols=2), system) == \
        pytest.approx(1.0 / F)
    assert sketch_scale(SamplerSpec(SamplerKind.BGK, block_rows=3), system) == \
        pytest.approx(1.0 / (3.0 * F))
    assert sketch_scale(SamplerSpec(SamplerKind.BGLS, block_cols=2), system) == \
        pytest.approx(1.0 / (2.0 * F))


def test_beta_closed_form_single_row_and_column():
    system, info, _ = build_system(7, 4, seed=9)
    F = info.frob_sq
    rk = SamplerSpec(SamplerKind.RK)
    rgs = SamplerSpec(SamplerKind.RGS)
    assert beta_closed_form(rk, info, system, BetaKind.ROW_ACTION) == \
        pytest.approx(1.0 / F, rel=1e-12)
    assert beta_closed_form(rgs, info, system, BetaKind.COLUMN_ACTION) == \
        pytest.approx(1.0 / F, rel=1e-12)


def test_beta_closed_form_block_row_edge_cases():
    system, info, _ = build_system(6, 4, seed=14)
    gram = system.dense @ system.dense_t
    m = system.m
    # p = m selects every row: the constant collapses to the top eigenvalue
    full = SamplerSpec(SamplerKind.RBK, block_rows=m)
    assert beta_closed_form(full, info, system, BetaKind.ROW_ACTION) == \
        pytest.approx(info.sigma_max_sq, rel=1e-10)
    # p = 1 reduces to m times the largest squared row norm
    single = SamplerSpec(SamplerKind.RBK, block_rows=1)
    assert beta_closed_form(single, info, system, BetaKind.ROW_ACTION) == \
        pytest.approx(m * float(np.max(np.diag(gram))), rel=1e-12)


def test_beta_closed_form_entry_sampler_needs_dense_support():
    a = np.array([[1.0, 0.0], [2.0, 3.0]])
    system = LinearSystem(a, np.zeros(2))
    info = compute_spectral_info(a)
    spec = SamplerSpec(SamplerKind.DSGS)
    with pytest.raises(ValueError):
        beta_closed_form(spec, info, system, BetaKind.GENERAL)
    dense, dinfo, _ = build_system(5, 3, seed=4)
    assert beta_closed_form(SamplerSpec(SamplerKind.DSGS), dinfo, dense,
                            BetaKind.GENERAL) == pytest.approx(1.0)
    assert beta_closed_form(SamplerSpec(SamplerKind.DSGS), dinfo, dense,
                            BetaKind.FULL_RANK) == \
        pytest.approx(dense.n / dinfo.frob_sq, rel=1e-12)


def test_default_stepsizes():
    system, info, _ = build_system(8, 5, seed=7)
    assert default_stepsize(SamplerSpec(SamplerKind.RK), info, system) == 1.0
    assert default_stepsize(SamplerSpec(SamplerKind.RGS), info, system) == 1.0
    # full column rank: entry sampler uses 1/n
    assert default_stepsize(SamplerSpec(SamplerKind.DSGS), info, system) == \
        pytest.approx(1.0 / 5.0)
    rbk = SamplerSpec(SamplerKind.RBK, block_rows=8)
    assert default_stepsize(rbk, info, system) == \
        pytest.approx(system.frob_sq / info.sigma_max_sq, rel=1e-10)
    p = 1
    ident = LinearSystem(np.eye(2), np.ones(2))
    iinfo = compute_spectral_info(ident.dense)
    assert default_stepsize(SamplerSpec(SamplerKind.BGK, block_rows=p),
                            iinfo, ident) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        default_stepsize(SamplerSpec(SamplerKind.SGC), info, system)


def test_applicable_bounds_membership():
    # full rank + consistent row sampler: everything except column-action
    system, info, _ = build_system(9, 5, seed=16, consistent=True)
    rk_bounds = {b for b, _ in applicable_bounds(
        SamplerSpec(SamplerKind.RK), info, system, consistent=True)}
    assert rk_bounds == {
        RateBound.MOMENTUM_GENERAL,
        RateBound.MOMENTUM_ANNIHILATING,
        RateBound.MOMENTUM_ROW_ACTION_CONSISTENT,
        RateBound.MOMENTUM_FULL_RANK,
        RateBound.MOMENTUM_FULL_RANK_CONSISTENT,
    }
    # inconsistent column sampler keeps the annihilating bound
    rgs_bounds = {b for b, _ in applicable_bounds(
        SamplerSpec(SamplerKind.RGS), info, system, consistent=False)}
    assert RateBound.MOMENTUM_ANNIHILATING in rgs_bounds
    assert RateBound.MOMENTUM_COLUMN_ACTION in rgs_bounds
    assert RateBound.MOMENTUM_ROW_ACTION_CONSISTENT not in rgs_bounds
    assert RateBound.MOMENTUM_FULL_RANK_CONSISTENT not in rgs_bounds
    # inconsistent row sampler on a rank-deficient system: general only
    a = np.vstack([np.eye(3), np.eye(3)])[:, :2] @ np.array([[1.0, 0.0], [1.0, 0.0]])
    rd = LinearSystem(a + 0.0, np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]))
    rd_info = compute_spectral_info(rd.dense)
    assert rd_info.rank < rd.n
    rk_rd = {b for b, _ in applicable_bounds(
        SamplerSpec(SamplerKind.RK), rd_info, rd, consistent=False)}
    assert rk_rd == {RateBound.MOMENTUM_GENERAL}


def test_applicable_bounds_rho_values():
    system, info, _ = build_system(9, 5, seed=16)
    pairs = dict(applicable_bounds(
        SamplerSpec(SamplerKind.RBCD, block_cols=2), info, system, consistent=False))
    assert pairs[RateBound.MOMENTUM_GENERAL] == 1.0
    assert pairs[RateBound.MOMENTUM_COLUMN_ACTION] == \
        pytest.approx(1.0 / system.frob_sq)


def test_bound_tables_are_total():
    for table in (BOUND_BETA, BOUND_MEASURES_RESIDUAL, BOUND_HAS_OFFSET):
        assert set(table) == set(RateBound)
