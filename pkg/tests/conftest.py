"""Shared builders for the test suite.

Everything here is seeded; no test depends on wall-clock or ambient RNG
state. Builders return plain tuples rather than fixtures so tests can ask
for several systems with different seeds in one function.
"""

from __future__ import annotations

import numpy as np
import pytest

from pinvfree import (
    LinearSystem,
    RhsMode,
    RhsRecipe,
    SamplerKind,
    SamplerSpec,
    compute_spectral_info,
    gen_conditioned,
    gen_gaussian,
    make_rhs,
    reference_solutions,
)


def build_system(m, n, seed, consistent=True, kappa=0.0):
    """(system, info, refs_at_zero) for a seeded random dense system."""
    if kappa > 0:
        a = gen_conditioned(m, n, kappa, seed)
    else:
        a = gen_gaussian(m, n, seed)
    info = compute_spectral_info(a)
    mode = RhsMode.CONSISTENT if consistent else RhsMode.INCONSISTENT
    b, _ = make_rhs(a, RhsRecipe(mode, x_star_seed=seed), seed, info)
    system = LinearSystem(a, b)
    refs = reference_solutions(system, np.zeros(n), info)
    return system, info, refs


def symmetric_psd_system(n, seed, consistent=True):
    """Symmetric positive definite system for the scalar-sketch sampler."""
    g = gen_gaussian(n + 2, n, seed)
    a = g.T @ g
    info = compute_spectral_info(a)
    rng = np.random.default_rng(seed + 1)
    x_star = rng.standard_normal(n)
    b = a @ x_star
    if not consistent:
        # symmetric full-rank matrices are always consistent; perturbation
        # would change the solution, so only the consistent form is offered
        raise ValueError("symmetric PSD systems here are consistent only")
    system = LinearSystem(a, b)
    refs = reference_solutions(system, np.zeros(n), info)
    return system, info, refs


def all_specs(system):
    """One spec per sampler kind, with small blocks, valid for the system."""
    m, n = system.m, system.n
    specs = [
        SamplerSpec(SamplerKind.RK),
        SamplerSpec(SamplerKind.RGS),
        SamplerSpec(SamplerKind.DSGS),
        SamplerSpec(SamplerKind.RBK, block_rows=min(2, m)),
        SamplerSpec(SamplerKind.RBCD, block_cols=min(2, n)),
        SamplerSpec(SamplerKind.BGK, block_rows=2),
        SamplerSpec(SamplerKind.BGLS, block_cols=2),
    ]
    return specs


@pytest.fixture(scope="session")
def small_consistent():
    return build_system(12, 8, seed=5, consistent=True)


@pytest.fixture(scope="session")
def small_inconsistent():
    return build_system(12, 8, seed=6, consistent=False)
