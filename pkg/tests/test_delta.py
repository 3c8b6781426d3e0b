import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import QUAD
from wellsep import (
    DegenerateStrengths,
    DeltaPairConfig,
    GreenOperator,
    InvalidStrength,
    Units,
    asymptotic_pair_energy,
    delta_bound_state,
    delta_matrix_element_terms,
    delta_spectrum,
    exact_pair_energies,
    first_order_pair_wavefunction,
    green_kernel,
    kappa_factors,
)
from wellsep.delta import equal_strength_block, equal_strength_second_order

E12 = math.exp(-12.0)


def _poly_residual(cfg, eta_b):
    b1, b2, L = cfg.b1, cfg.b2, cfg.separation_L
    return abs((eta_b - b1) * (eta_b - b2) - b1 * b2 * math.exp(-2 * L * eta_b)) / b1**2


# -- single well ----------------------------------------------------------

def test_bound_state_gamma2():
    b = delta_bound_state(2.0)
    assert b.energy == -2.0
    assert float(b.wavefunction(0.0)) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert delta_bound_state(1.0).energy == -0.5


@pytest.mark.parametrize("gamma", [0.0, -1.0, math.nan])
def test_bound_state_invalid_strength(gamma):
    with pytest.raises(InvalidStrength):
        delta_bound_state(gamma)


def test_bound_state_units():
    u = Units(hbar=2.0, mass=3.0)
    b = delta_bound_state(1.0, 0.0, u)
    # -mγ²/2ħ²
    assert b.energy == pytest.approx(-3.0 / 8.0, rel=1e-15)


# -- exact roots ----------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(g1=st.floats(0.3, 4.0), g2=st.floats(0.3, 4.0), L=st.floats(0.5, 8.0))
def test_root_residuals(g1, g2, L):
    cfg = DeltaPairConfig(g1, g2, L)
    roots = exact_pair_energies(cfg)
    assert roots.count in (1, 2)
    assert list(roots.energies) == sorted(roots.energies)
    for e in roots.energies:
        eta = math.sqrt(-2.0 * e)  # ħ = m = 1
        assert _poly_residual(cfg, eta) < 1e-13


def test_root_count_threshold():
    assert exact_pair_energies(DeltaPairConfig(1.0, 1.0, 0.5)).count == 1
    assert exact_pair_energies(DeltaPairConfig(1.0, 1.0, 1.5)).count == 2


def test_decoupled_limit():
    roots = exact_pair_energies(DeltaPairConfig(2.0, 1.0, 40.0))
    assert roots.energies == pytest.approx((-2.0, -0.5), abs=1e-15)


def test_reference_shift_example(cfg3):
    roots = exact_pair_energies(cfg3)
    assert roots.references[0] == -2.0
    assert roots.shifts[0] == pytest.approx(-2.4577e-5, rel=1e-4)
    assert roots.energies[0] == roots.references[0] + roots.shifts[0]


def test_references_at_large_separation():
    # the deep root stays tagged with the deep level once its shift is below the bisection tolerance
    for L in (5.0, 6.0, 8.0, 12.0):
        cfg = DeltaPairConfig(2.0, 1.0, L)
        roots = exact_pair_energies(cfg)
        assert roots.references == (-2.0, -0.5)
        asym = asymptotic_pair_energy(cfg) - cfg.eps1
        assert roots.shifts[0] == pytest.approx(asym, rel=1e-6)


@pytest.mark.parametrize("L", [1.5, 3.0, 5.0, 8.0])
def test_equal_strength_factorization(L):
    g = 1.0
    roots = exact_pair_energies(DeltaPairConfig(g, g, L))
    signs = (1.0, -1.0)
    for e, s in zip(roots.energies, signs):
        eta = math.sqrt(-2.0 * e)
        assert abs((eta - g) ** 2 - g * g * math.exp(-2 * L * eta)) < 1e-12
        assert eta == pytest.approx(g * (1 + s * math.exp(-L * eta)), abs=1e-12)


def test_config_swaps_to_deeper_first():
    cfg = DeltaPairConfig(1.0, 2.0, 3.0)
    assert (cfg.gamma1, cfg.gamma2, cfg.swapped) == (2.0, 1.0, True)
    with pytest.raises(ValueError):
        DeltaPairConfig(2.0, 1.0, 0.0)


# -- asymptotics ----------------------------------------------------------

def test_asymptotic_example(cfg3):
    assert asymptotic_pair_energy(cfg3) == pytest.approx(-2.0 * (1 + 2 * E12), rel=1e-15)


def test_asymptotic_single_well():
    assert asymptotic_pair_energy(DeltaPairConfig(2.0, 0.0, 3.0)) == -2.0


def test_asymptotic_rejects_degenerate():
    with pytest.raises(DegenerateStrengths):
        asymptotic_pair_energy(DeltaPairConfig(1.0, 1.0, 3.0))
    with pytest.raises(DegenerateStrengths):
        asymptotic_pair_energy(DeltaPairConfig(1.0, 0.97, 3.0))


def test_expansion_consistency_rate():
    consts = []
    for L in (2.0, 3.0, 4.0):
        cfg = DeltaPairConfig(2.0, 1.0, L)
        ex = exact_pair_energies(cfg).shifts[0]
        asym = asymptotic_pair_energy(cfg) - cfg.eps1
        consts.append(abs(ex - asym) / abs(ex) / math.exp(-2 * cfg.b1 * L))
    assert max(consts) / min(consts) < 3.0


# -- closed-form terms ----------------------------------------------------

def test_term_values(cfg3):
    t = delta_matrix_element_terms(cfg3)
    assert tuple(t) == pytest.approx((-2 * E12, -4 / 3 * E12, -2 / 3 * E12), rel=1e-14)
    assert tuple(t) == pytest.approx((-1.22884e-5, -8.19227e-6, -4.09614e-6), rel=1e-5)
    assert t.total == pytest.approx(-4 * E12, rel=1e-14)


@pytest.mark.parametrize("seed", range(20))
def test_term_sum_identity(seed):
    rng = np.random.default_rng(seed)
    g2 = rng.uniform(0.3, 2.0)
    cfg = DeltaPairConfig(g2 * rng.uniform(1.2, 5.0), g2, rng.uniform(1.0, 6.0))
    asym = asymptotic_pair_energy(cfg) - cfg.eps1
    assert delta_matrix_element_terms(cfg).total == pytest.approx(asym, rel=1e-12)


def test_terms_vanish_without_second_well():
    assert tuple(delta_matrix_element_terms(DeltaPairConfig(2.0, 0.0, 3.0))) == (0.0, 0.0, 0.0)


def test_first_order_wavefunction(cfg3):
    assert first_order_pair_wavefunction(cfg3, 0.0) == pytest.approx(math.sqrt(2) * (1 + E12), rel=1e-15)
    x = np.linspace(-5, 8, 27)
    bare = delta_bound_state(2.0).wavefunction(x)
    assert np.array_equal(first_order_pair_wavefunction(DeltaPairConfig(2.0, 0.0, 3.0), x), bare)


# -- κ factors ------------------------------------------------------------

def test_kappa_closed_form_values(cfg3):
    k = kappa_factors(cfg3)
    assert k.kappa1 == pytest.approx(5.5 * math.exp(-6), rel=1e-14)
    assert k.kappa2 == pytest.approx(2 * (2 / 3 * math.exp(-3) - math.exp(-6)), rel=1e-14)


def test_kappa_decay_with_L():
    for L in (4.0, 6.0):
        a, b = kappa_factors(DeltaPairConfig(2.0, 1.0, L)), kappa_factors(DeltaPairConfig(2.0, 1.0, 2 * L))
        for x, y in zip((a.kappa1, a.kappa2, a.kappa2_prime), (b.kappa1, b.kappa2, b.kappa2_prime)):
            assert abs(y) < abs(x)


def test_kappa_rejects_equal_strengths():
    with pytest.raises(DegenerateStrengths):
        kappa_factors(DeltaPairConfig(1.0, 1.0, 3.0))


@pytest.mark.parametrize("units", [Units(), Units(hbar=1.3, mass=0.8)])
@pytest.mark.parametrize("L", [2.0, 3.0])
def test_kappa_cross_validation(units, L):
    cfg = DeltaPairConfig(2.0, 1.0, L, units)
    s1 = delta_spectrum(2.0, 0.0, units, "k")
    s2 = delta_spectrum(1.0, L, units, "kbar")
    eps = s1.bound[0].energy
    g1p = GreenOperator(s1, eps, ("k",), QUAD)
    g2 = GreenOperator(s2, eps, (), QUAD)
    ref = kappa_factors(cfg)
    w = 2.0 * 1.0
    assert w * green_kernel(g1p, L, 0.0).total == pytest.approx(ref.kappa1, rel=1e-6)
    assert w * green_kernel(g2, 0.0, L).continuum_total == pytest.approx(ref.kappa2, rel=1e-6)
    assert w * green_kernel(g2, 0.0, L, power=2).continuum_total == pytest.approx(ref.kappa2_prime, rel=1e-6)


# -- equal-strength helpers -------------------------------------------------

def test_equal_strength_block_values():
    blk = equal_strength_block(1.0, 5.0)
    e5 = math.exp(-5.0)
    assert blk.gamma_el == pytest.approx(-e5, rel=1e-15)
    assert blk.delta_ov == pytest.approx(6 * e5, rel=1e-15)
    assert blk.alpha == pytest.approx(-e5 * e5, rel=1e-15)
    assert equal_strength_second_order(1.0, 5.0) == pytest.approx(4.5 * math.exp(-10.0), rel=1e-14)
