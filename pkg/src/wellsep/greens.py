"""Green's operators of a local Hamiltonian.

``G = Σ' |n⟩⟨n| / (ε - H)`` over one local spectrum, optionally with some
bound states removed from the sum (the projected operators of the
theory). Bound terms are summed exactly. Continuum terms are kept in
closed spectral form: a point mass ``w δ(x - y)`` maps to a source whose
value at ``x`` is the Fourier integral ``w ∫dq ψ_q(x)ψ_q(y)/(ε - E(q))``
(evaluated to infinity, no cutoff), and a smooth input maps to its
momentum-space coefficients on a truncated grid. Nested applications stay
in the same representation, so ``G² f`` is two calls to
:func:`apply_green` and carries squared denominators exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EnergyCollision
from .spectrum import (
    TAIL_TOL,
    Expansion,
    GridPart,
    LocalSpectrum,
    Potential,
    QuadratureSpec,
    Source,
    StateFunction,
    apply_potential,
    continuum_transform,
    expansion_evaluator,
    inner_product,
)

__all__ = [
    "GreenOperator",
    "SandwichResult",
    "KernelValue",
    "apply_green",
    "green_sandwich",
    "green_kernel",
    "COLLISION_TOL",
]

COLLISION_TOL = 1e-6
_TAIL_LOG = math.log(1.0 / TAIL_TOL)


@dataclass(frozen=True, eq=False)
class GreenOperator:
    """``Σ'_n |n⟩⟨n| / (ε - E_n)`` over ``spectrum`` minus excluded states.

    Parameters
    ----------
    spectrum : LocalSpectrum
    evaluation_energy : float
        ε; must be negative (bound-state problems only).
    excluded_states : tuple of str
        Labels of bound states dropped from the sum.
    q_spec : QuadratureSpec
    """

    spectrum: LocalSpectrum
    evaluation_energy: float
    excluded_states: tuple[str, ...] = ()
    q_spec: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self) -> None:
        object.__setattr__(self, "excluded_states", tuple(self.excluded_states))
        if not self.evaluation_energy < 0:
            raise ValueError("Green operators are evaluated below the continuum threshold")
        for lab in self.excluded_states:
            self.spectrum.index_of(lab)
        eps = self.evaluation_energy
        for i in self.retained:
            e = self.spectrum.bound[i].energy
            if abs(eps - e) < COLLISION_TOL * max(1.0, abs(eps)):
                raise EnergyCollision(
                    f"ε = {eps!r} collides with retained level {self.spectrum.bound[i].label!r} at {e!r}"
                )

    @property
    def excluded(self) -> frozenset[int]:
        return frozenset(self.spectrum.index_of(lab) for lab in self.excluded_states)

    @property
    def retained(self) -> tuple[int, ...]:
        ex = self.excluded
        return tuple(i for i in range(len(self.spectrum.bound)) if i not in ex)

    def denominator(self, energy):
        return self.evaluation_energy - energy


def _reach(energies, units) -> float:
    kappa = min(units.decay_rate(e) for e in energies)
    # polynomial prefactors of repeated poles widen the tail slightly
    return (_TAIL_LOG + 4.0 * len(energies)) / kappa


def _wrap(exp: Expansion, spec: QuadratureSpec, support_hint, label="") -> StateFunction:
    sp = exp.spectrum
    lo, hi = support_hint
    for i, _ in exp.bound:
        blo, bhi = sp.bound[i].wavefunction.support
        lo, hi = min(lo, blo), max(hi, bhi)
    for s in exp.sources:
        r = _reach(s.energies, sp.units)
        lo, hi = min(lo, s.position - r), max(hi, s.position + r)
    bps = set(sp.kinks()) | {s.position for s in exp.sources}
    for i, _ in exp.bound:
        bps.update(sp.bound[i].wavefunction.breakpoints)
    freq = max((float(np.max(g.nodes)) for g in exp.grids), default=0.0)
    return StateFunction(
        expansion_evaluator(exp, spec),
        (lo, hi),
        tuple(sorted(bps)),
        expansion=exp,
        frequency=freq,
        label=label,
    )


def apply_green(g: GreenOperator, f: StateFunction) -> StateFunction:
    """The function ``G f`` in spectral form.

    Bound coefficients ``⟨n|f⟩/(ε - E_n)`` are exact for point masses and
    for inputs already expanded in ``g.spectrum``; smooth foreign inputs
    are projected by quadrature, with the slowly decaying large-q tail
    carried by exact point sources. Excluded states are dropped.
    """
    sp, spec, eps = g.spectrum, g.q_spec, g.evaluation_energy
    retained = g.retained
    closed = spec.kernel == "auto" and sp.resolvent is not None
    own = sp.expansion_of(f)
    if own is not None and not f.points:
        bound = tuple((i, c / (eps - sp.bound[i].energy)) for i, c in own.bound if i in retained)
        sources = tuple(Source(s.position, s.weight, s.energies + (eps,)) for s in own.sources)
        grids = []
        for gp in own.grids:
            h = 1.0 / (eps - sp.units.kinetic(gp.nodes))
            grids.append(GridPart(gp.nodes, gp.weights, tuple(c * h for c in gp.coeffs)))
        exp = Expansion(sp, bound, sources, tuple(grids), closed)
        return _wrap(exp, spec, f.support)

    bound = []
    for i in retained:
        b = sp.bound[i]
        c = inner_product(b.wavefunction, f, spec)
        bound.append((i, c / (eps - b.energy)))
    sources = tuple(Source(p, w, (eps,)) for p, w in f.points if w != 0.0)
    grids = ()
    if f.has_smooth and f.support[1] > f.support[0]:
        smooth = StateFunction(f.evaluate, f.support, f.breakpoints, frequency=f.frequency)
        q, w = sp.q_grid(sp.extent_of(smooth), spec)
        ft = continuum_transform(sp, smooth, q, spec)
        # slow 1/q² tails go into exact sources, the remainder onto the grid
        tails = sp.tail_sources(smooth)
        if tails:
            ft = tuple(F - T for F, T in zip(ft, sp.source_transform(tails, q)))
            sources += tuple(Source(t.position, t.weight, t.energies + (eps,)) for t in tails)
        h = 1.0 / (eps - sp.units.kinetic(q))
        grids = (GridPart(q, w, tuple(F * h for F in ft)),)
    exp = Expansion(sp, tuple(bound), sources, grids, closed)
    hint = f.support
    return _wrap(exp, spec, hint)


@dataclass(frozen=True)
class KernelValue:
    """Spectral sum at a pair of points, split by origin."""

    bound: float
    continuum: tuple[float, ...]

    @property
    def continuum_total(self) -> float:
        return float(sum(self.continuum))

    @property
    def total(self) -> float:
        return self.bound + self.continuum_total


def green_kernel(g: GreenOperator, x: float, y: float, power: int = 1) -> KernelValue:
    """``⟨x|G^power|y⟩`` split into bound and per-family continuum parts."""
    if power < 1:
        raise ValueError("power must be a positive integer")
    energies = (g.evaluation_energy,) * power
    bound = g.spectrum.bound_kernel(x, y, energies, g.excluded)
    cont = g.spectrum.continuum_kernel(x, y, energies, g.q_spec)
    return KernelValue(bound, cont)


@dataclass(frozen=True)
class SandwichResult:
    """``⟨bra|V_l G V_r|ket⟩`` with its bound and continuum contributions."""

    bound: float
    continuum: float
    per_family: tuple[float, ...]

    @property
    def total(self) -> float:
        return self.bound + self.continuum


def green_sandwich(
    bra: StateFunction,
    g: GreenOperator,
    v_mid: Potential,
    ket: StateFunction,
    v_right: Potential | None = None,
) -> SandwichResult:
    """``⟨bra|V̂_mid Ĝ V̂_right|ket⟩`` (``v_right`` defaults to ``v_mid``).

    Between two delta spikes the result is the product of the point
    weights and the kernel ``G(c_l, c_r)``; no x-space quadrature occurs.
    """
    v_right = v_mid if v_right is None else v_right
    left = apply_potential(v_mid, bra)
    right = apply_potential(v_right, ket)
    if v_mid.is_delta and v_right.is_delta:
        wl = left.points[0][1]
        wr = right.points[0][1]
        if wl == 0.0 or wr == 0.0:
            zeros = tuple(0.0 for _ in g.spectrum.continuum)
            return SandwichResult(0.0, 0.0, zeros)
        k = green_kernel(g, v_mid.center, v_right.center)
        fams = tuple(wl * wr * c for c in k.continuum)
        return SandwichResult(wl * wr * k.bound, float(sum(fams)), fams)
    image = apply_green(g, right)
    exp = image.expansion
    sp = g.spectrum
    bound = 0.0
    for i, c in exp.bound:
        bound += c * inner_product(left, sp.bound[i].wavefunction, g.q_spec)
    cont = 0.0
    if exp.sources or exp.grids:
        rest = _wrap(Expansion(sp, (), exp.sources, exp.grids, exp.closed_form), g.q_spec, image.support)
        cont = inner_product(left, rest, g.q_spec)
    # families are only resolved separately between two spikes
    return SandwichResult(bound, cont, (cont,))
