import math
import time
import warnings

import numpy as np
import pytest

from wellsep import (
    DeltaPairConfig,
    GridMismatch,
    GridSpec,
    Potential,
    RegimeWarning,
    Units,
    exact_pair_energies,
    grid_diagonalize,
    richardson,
)
from wellsep.oracle import aligned_grid, extrapolated_levels, refined

UNITS = Units()


def _pair(g1, g2, L):
    return [Potential.delta(g1, 0.0), Potential.delta(g2, L)]


def _box_errors(ns):
    return [grid_diagonalize([], UNITS, GridSpec(0.0, 1.0, n)).eigenvalues[0] - 0.5 * math.pi**2 for n in ns]


def test_single_delta():
    pot = [Potential.delta(2.0, 0.0)]
    e = [grid_diagonalize(pot, UNITS, GridSpec(-12.0, 12.0, n)).eigenvalues[0] for n in (4096, 8192)]
    assert abs(e[0] + 2.0) < 2e-3
    assert (e[0] + 2.0) / (e[1] + 2.0) == pytest.approx(4.0, rel=0.05)


def test_particle_in_a_box_h2_rate():
    errs = _box_errors((64, 128, 256))
    h = 1.0 / 64
    assert abs(errs[0]) < math.pi**4 / 24 * h**2 * 1.01
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, rel=0.01)


def test_richardson_is_fourth_order():
    ref = 0.5 * math.pi**2
    res = [grid_diagonalize([], UNITS, GridSpec(0.0, 1.0, n)) for n in (64, 128, 256)]
    e1 = richardson(res[0], res[1]).values[0] - ref
    e2 = richardson(res[1], res[2]).values[0] - ref
    assert abs(e1) < 1e-2 * abs(res[1].eigenvalues[0] - ref)
    assert e1 / e2 == pytest.approx(16.0, rel=0.05)


def test_double_delta_example():
    pots = _pair(2.0, 1.0, 3.0)
    root = exact_pair_energies(DeltaPairConfig(2.0, 1.0, 3.0)).energies[0]
    res = extrapolated_levels(pots, UNITS, aligned_grid(pots, UNITS, 0.01))
    est = res.richardson_estimate
    assert abs(est.values[0] - root) < 1e-6
    # the bar brackets the root
    assert abs(est.values[0] - root) <= est.errors[0]


def test_random_pairs_match_roots():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(10):
        g1, g2 = rng.uniform(0.5, 3.0, size=2)
        L = rng.uniform(2.0, 6.0)
        pots = _pair(g1, g2, L)
        root = exact_pair_energies(DeltaPairConfig(g1, g2, L)).energies[0]
        res = extrapolated_levels(pots, UNITS, aligned_grid(pots, UNITS, 0.01))
        assert abs(res.richardson_estimate.values[0] - root) <= max(1e-6, 1e-4 * abs(root))
    assert time.perf_counter() - t0 < 60.0


def test_general_units():
    u = Units(hbar=1.3, mass=0.8)
    pots = _pair(2.0, 1.0, 3.0)
    root = exact_pair_energies(DeltaPairConfig(2.0, 1.0, 3.0, u)).energies[0]
    res = extrapolated_levels(pots, u, aligned_grid(pots, u, 0.01))
    assert abs(res.richardson_estimate.values[0] - root) <= max(1e-6, 1e-4 * abs(root))


def test_eigenvectors_normalized_and_sorted():
    pots = _pair(1.0, 1.0, 4.0)
    g = aligned_grid(pots, UNITS, 0.02)
    r = grid_diagonalize(pots, UNITS, g, n_eigs=3)
    assert np.all(np.diff(r.eigenvalues) > 0)
    assert np.allclose(g.spacing * np.sum(r.eigenvectors**2, axis=0), 1.0, atol=1e-12)


def test_monotone_in_box_size():
    pots = _pair(2.0, 1.0, 3.0)
    root = exact_pair_energies(DeltaPairConfig(2.0, 1.0, 3.0)).energies[0]
    h = 0.005
    energies = []
    for margin in (2.0, 4.0, 6.0):
        grid = GridSpec(-margin, 3.0 + margin, int(round((3.0 + 2 * margin) / h)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            energies.append(grid_diagonalize(pots, UNITS, grid).eigenvalues[0])
    assert energies[0] > energies[1] > energies[2]
    # above the root up to the discretization estimate
    fine = GridSpec(-6.0, 9.0, 2 * 3000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        bar = abs(grid_diagonalize(pots, UNITS, fine).eigenvalues[0] - energies[2]) / 3.0
    assert all(e >= root - bar for e in energies)


def test_margin_warning():
    with pytest.warns(RegimeWarning):
        grid_diagonalize(_pair(1.0, 1.0, 3.0), UNITS, GridSpec(-2.0, 5.0, 700))


def test_grid_mismatch():
    pots = _pair(2.0, 1.0, 3.0)
    g = aligned_grid(pots, UNITS, 0.05)
    a = grid_diagonalize(pots, UNITS, g)
    with pytest.raises(GridMismatch):
        richardson(a, grid_diagonalize(pots, UNITS, GridSpec(g.x_min - 1, g.x_max, 2 * g.n_points)))
    with pytest.raises(GridMismatch):
        richardson(a, a)
    richardson(a, grid_diagonalize(pots, UNITS, refined(g)))


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(1.0, 0.0, 100)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 10)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 100, "periodic")
    with pytest.raises(ValueError):
        grid_diagonalize([], UNITS, GridSpec(0.0, 1.0, 64), n_eigs=0)


def test_aligned_grid_hits_centers():
    pots = _pair(2.0, 1.0, 3.3)
    g = aligned_grid(pots, UNITS, 0.013)
    for c in (0.0, 3.3):
        j = (c - g.x_min) / g.spacing
        assert abs(j - round(j)) < 1e-9
        j2 = (c - g.x_min) / refined(g).spacing
        assert abs(j2 - round(j2)) < 1e-9
