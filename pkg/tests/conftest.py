"""Shared fixtures: the standard unequal pair (γ₁=2, γ₂=1, L=3) and helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from wellsep import (
    DeltaPairConfig,
    NondegInput,
    QuadratureSpec,
    StateFunction,
    apply_green,
    delta_spectrum,
    first_order,
    inner_product,
    second_order,
)

QUAD = QuadratureSpec(kernel="quadrature")


def pair_input(g1=2.0, g2=1.0, L=3.0, units=None, order=2, spec=None, gap_threshold=0.1):
    """Nondegenerate input for the deeper well of a delta pair."""
    s1 = delta_spectrum(g1, 0.0, units, "k")
    s2 = delta_spectrum(g2, L, units, "kbar")
    return NondegInput(
        s1.bound[0], s1, s2, s1.potential, s2.potential, order,
        spec or QuadratureSpec(), gap_threshold,
    )


def gaussian(center: float, width: float) -> StateFunction:
    """Unnormalized Gaussian bump with a support hint at the 1e-12 level."""
    reach = width * math.sqrt(2.0 * math.log(1e12))
    return StateFunction(
        lambda x: np.exp(-0.5 * ((np.asarray(x, dtype=float) - center) / width) ** 2),
        (center - reach, center + reach),
        frequency=3.0 / width,
    )


def resolvent_residual(g, f, h=0.005, span=(-8.0, 8.0), guard=3):
    """max |(ε - H)Gf - Qf| on a grid, with a 4th-order Laplacian away from the spike."""
    sp = g.spectrum
    gf = apply_green(g, f)
    x = np.arange(span[0], span[1] + h / 2, h)
    y = gf(x)
    d2 = (-y[4:] + 16 * y[3:-1] - 30 * y[2:-2] + 16 * y[1:-3] - y[:-4]) / (12 * h * h)
    xi = x[2:-2]
    r = g.evaluation_energy * y[2:-2] + 0.5 * sp.units.scale * d2 - f(xi)
    for lab in g.excluded_states:
        b = sp.bound[sp.index_of(lab)].wavefunction
        r = r + inner_product(b, f) * b(xi)
    keep = np.abs(xi - sp.potential.center) > guard * h
    return float(np.max(np.abs(r[keep])))


@pytest.fixture(scope="session")
def cfg3():
    return DeltaPairConfig(2.0, 1.0, 3.0)


@pytest.fixture(scope="session")
def nd3():
    """Input, first- and second-order results at L = 3."""
    inp = pair_input()
    r1 = first_order(inp)
    r2 = second_order(inp, r1)
    return inp, r1, r2


# acceptance lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
