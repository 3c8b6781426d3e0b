"""Two-level theory for (almost) degenerate levels of the two wells.

With ``|k⟩`` a level of well 1 at ``ε`` and ``|k̄⟩`` a level of well 2 at
``u = ε + gap``, the ansatz ``|φ⟩ = |k⟩ + b|k̄⟩ + |δφ⟩`` and the block

    α = ⟨k|V₂|k⟩,  β = ⟨k̄|V₁|k̄⟩,  Γ = ⟨k|V₂|k̄⟩,  Δ = ⟨k|k̄⟩

give at leading order ``b⁽⁰⁾ = t ± √(t² + 1)`` with ``t = gap/2Γ`` and
``δE⁽¹⁾ = Γ b⁽⁰⁾``. At the next order, with the sandwiches
``S₂ = ⟨k|V₂G₂'V₂|k⟩`` and ``S₁ = ⟨k̄|V₁G₁'V₁|k̄⟩``,

    b⁽¹⁾  = [(β - α) + (S₁ - S₂)]/(2Γ) · (1 ± t/√(t² + 1))
    δE⁽²⁾ = Γ b⁽¹⁾ + α + S₂ - ΓΔ (b⁽⁰⁾)².

Branch labels follow the sign in front of the square root.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .errors import RegimeWarning, ZeroCoupling
from .greens import GreenOperator, apply_green, green_sandwich
from .spectrum import (
    BoundState,
    LocalSpectrum,
    Potential,
    QuadratureSpec,
    StateFunction,
    apply_potential,
    inner_product,
    matrix_element,
)

__all__ = [
    "PairBlock",
    "PairSolution",
    "PairSandwiches",
    "pair_block",
    "leading_mixing",
    "pair_first_order_state",
    "pair_sandwiches",
    "pair_second_order",
    "PairBranchResult",
    "pair_solve",
    "REGIME_THRESHOLD",
]

REGIME_THRESHOLD = 0.5


@dataclass(frozen=True)
class PairBlock:
    """Matrix elements of the two-level problem.

    ``gap`` is ``u_k̄ - ε_k``; ``kbar_energy`` is ``u_k̄`` (used for the
    regime check).
    """

    alpha: float
    beta: float
    gamma_el: float
    delta_ov: float
    gap: float
    kbar_energy: float = math.nan


@dataclass(frozen=True, eq=False)
class PairSolution:
    """One branch of the two-level solution."""

    branch: str
    b0: float
    dE1: float
    b1: float | None = None
    dE2: float | None = None
    state_correction: StateFunction | None = None


@dataclass(frozen=True)
class PairSandwiches:
    """``S₂ = ⟨k|V₂G₂'V₂|k⟩`` and ``S₁ = ⟨k̄|V₁G₁'V₁|k̄⟩``."""

    s2: float
    s1: float


def pair_block(
    k: BoundState,
    kbar: BoundState,
    v1: Potential,
    v2: Potential,
    spec: QuadratureSpec | None = None,
) -> PairBlock:
    """α, β, Γ, Δ and the gap for a level of each well."""
    spec = spec or QuadratureSpec()
    kf, bf = k.wavefunction, kbar.wavefunction
    return PairBlock(
        alpha=matrix_element(kf, v2, kf, spec),
        beta=matrix_element(bf, v1, bf, spec),
        gamma_el=matrix_element(kf, v2, bf, spec),
        delta_ov=inner_product(kf, bf, spec),
        gap=kbar.energy - k.energy,
        kbar_energy=kbar.energy,
    )


def _branches(gap: float, g: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """``(b, δE⁽¹⁾)`` for the ``+`` and ``-`` roots, free of cancellation."""
    if g == 0.0:
        if gap == 0.0:
            raise ZeroCoupling("Γ = 0 and gap = 0: the degeneracy is not lifted at this order")
        # decoupled limit: one branch is |k⟩ itself, the other |k̄⟩
        return (0.0, 0.0), (math.inf, gap)
    t = gap / (2.0 * g)
    r = math.hypot(t, 1.0)
    if t >= 0.0:
        bp = t + r
        bm = -1.0 / bp
    else:
        bm = t - r
        bp = -1.0 / bm
    return (bp, g * bp), (bm, g * bm)


def leading_mixing(block: PairBlock) -> tuple[PairSolution, PairSolution]:
    """Both leading-order branches ``(plus, minus)``.

    For ``gap = 0`` this gives ``b⁽⁰⁾ = ±1`` and ``δE⁽¹⁾ = ±Γ``. For
    ``|gap| ≫ |Γ|`` the branch with small ``b⁽⁰⁾`` tends to
    ``b⁽⁰⁾ = Γ/(ε - u)``, ``δE⁽¹⁾ = Γ²/(ε - u)``. The splitting is
    ``δE⁽¹⁾(plus) - δE⁽¹⁾(minus) = 2Γ√(t²+1)``, so ``plus`` is the upper
    level only when ``Γ > 0``. A regime warning is issued when
    ``|gap| > 0.5 |u_k̄|``.
    """
    g, gap = block.gamma_el, block.gap
    if math.isfinite(block.kbar_energy) and abs(gap) > REGIME_THRESHOLD * abs(block.kbar_energy):
        warnings.warn(
            f"|gap| = {abs(gap):.3g} exceeds {REGIME_THRESHOLD}·|u| = "
            f"{REGIME_THRESHOLD * abs(block.kbar_energy):.3g}; the two-level theory is outside its regime",
            RegimeWarning,
            stacklevel=2,
        )
    (bp, dp), (bm, dm) = _branches(gap, g)
    return PairSolution("plus", bp, dp), PairSolution("minus", bm, dm)


def pair_first_order_state(
    block: PairBlock,
    b0: float,
    g1p: GreenOperator,
    g2p: GreenOperator,
    v1: Potential,
    v2: Potential,
    k: BoundState,
    kbar: BoundState,
) -> StateFunction:
    """``|δφ⟩⁽¹⁾ = G₂'V₂|k⟩ + b G₁'V₁|k̄⟩``.

    ``g1p`` must exclude ``k`` and ``g2p`` must exclude ``k̄``.
    """
    if k.label not in g1p.excluded_states or kbar.label not in g2p.excluded_states:
        raise ValueError("g1p must exclude k and g2p must exclude k̄")
    first = apply_green(g2p, apply_potential(v2, k.wavefunction))
    if b0 == 0.0:
        return first
    second = apply_green(g1p, apply_potential(v1, kbar.wavefunction))
    return first + b0 * second


def pair_sandwiches(
    k: BoundState,
    kbar: BoundState,
    v1: Potential,
    v2: Potential,
    g1p: GreenOperator,
    g2p: GreenOperator,
) -> PairSandwiches:
    """The two second-order sandwiches."""
    s2 = green_sandwich(k.wavefunction, g2p, v2, k.wavefunction).total
    s1 = green_sandwich(kbar.wavefunction, g1p, v1, kbar.wavefunction).total
    return PairSandwiches(s2, s1)


def pair_second_order(
    block: PairBlock,
    sol: PairSolution,
    sandwiches: PairSandwiches,
) -> PairSolution:
    """``b⁽¹⁾`` and ``δE⁽²⁾`` for one branch.

    At ``gap = 0`` the shift is branch independent:
    ``(α + S₂)/2 + (β + S₁)/2 - ΓΔ``.
    """
    g, gap = block.gamma_el, block.gap
    if g == 0.0:
        raise ZeroCoupling("second order needs Γ ≠ 0")
    t = gap / (2.0 * g)
    sign = 1.0 if sol.branch == "plus" else -1.0
    num = (block.beta - block.alpha) + (sandwiches.s1 - sandwiches.s2)
    b1 = num / (2.0 * g) * (1.0 + sign * t / math.hypot(t, 1.0))
    de2 = g * b1 + block.alpha + sandwiches.s2 - g * block.delta_ov * sol.b0**2
    return replace(sol, b1=b1, dE2=de2)


@dataclass(frozen=True, eq=False)
class PairBranchResult:
    """One branch with its reference level.

    ``swapped`` is true when the branch was expanded around the level of
    well 2 (then ``reference_energy`` is ``u_k̄`` and ``solution.b0`` is
    the amplitude of the well-1 level).
    """

    branch: str
    reference_energy: float
    solution: PairSolution
    swapped: bool = False

    @property
    def energy_order1(self) -> float:
        return self.reference_energy + self.solution.dE1

    @property
    def energy_order2(self) -> float:
        if self.solution.dE2 is None:
            return math.nan
        return self.energy_order1 + self.solution.dE2


def _oriented(k, kbar, s1, s2, v1, v2, spec, order, with_state):
    block = pair_block(k, kbar, v1, v2, spec)
    sols = leading_mixing(block)
    if order < 2 and not with_state:
        return block, sols
    g1p = GreenOperator(s1, k.energy, (k.label,), spec)
    g2p = GreenOperator(s2, k.energy, (kbar.label,), spec)
    if order >= 2:
        sw = pair_sandwiches(k, kbar, v1, v2, g1p, g2p)
        sols = tuple(pair_second_order(block, s, sw) for s in sols)
    if with_state:
        sols = tuple(
            replace(s, state_correction=pair_first_order_state(block, s.b0, g1p, g2p, v1, v2, k, kbar))
            for s in sols
        )
    return block, sols


def pair_solve(
    k: BoundState,
    kbar: BoundState,
    spectrum1: LocalSpectrum,
    spectrum2: LocalSpectrum,
    v1: Potential,
    v2: Potential,
    spec: QuadratureSpec | None = None,
    order: int = 2,
    reorient: bool = True,
    with_state: bool = False,
) -> tuple[PairBranchResult, PairBranchResult]:
    """Both branches of the two-level problem up to ``order``.

    The ansatz singles out ``|k⟩``, so the expansion is only balanced
    for branches with ``|b⁽⁰⁾| ≤ 1``. With ``reorient`` a branch with
    ``|b⁽⁰⁾| > 1`` is recomputed with the roles of the wells exchanged;
    since ``b⁽⁰⁾`` keeps its sign under the exchange the branch label
    carries over. At ``gap = 0`` both branches have ``|b⁽⁰⁾| = 1`` and no
    exchange takes place.
    """
    spec = spec or QuadratureSpec()
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    _, sols = _oriented(k, kbar, spectrum1, spectrum2, v1, v2, spec, order, with_state)
    out = [PairBranchResult(s.branch, k.energy, s) for s in sols]
    if reorient and any(abs(s.b0) > 1.0 + 1e-12 for s in sols):
        _, alt = _oriented(kbar, k, spectrum2, spectrum1, v2, v1, spec, order, with_state)
        by_label = {s.branch: s for s in alt}
        out = [
            r if abs(r.solution.b0) <= 1.0 + 1e-12 else PairBranchResult(r.branch, kbar.energy, by_label[r.branch], True)
            for r in out
        ]
    return out[0], out[1]
