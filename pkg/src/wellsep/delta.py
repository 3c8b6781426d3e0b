"""Closed forms for one and two attractive delta wells.

Conventions: well 1 sits at x = 0 with strength γ₁, well 2 at x = L with
strength γ₂, ``V_i = -γ_i δ(x - c_i)``. Inverse decay lengths are
``b_i = mγ_i/ħ²`` and the isolated levels are ``-ħ²b_i²/2m``. Every
formula below is written in terms of ``b_i`` and the kinetic scale ħ²/m,
which is how general units enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DegenerateStrengths, InvalidStrength, RootBracketingFailed
from .resolvent import DeltaResolvent
from .spectrum import (
    TAIL_TOL,
    BoundState,
    ContinuumFamily,
    LocalSpectrum,
    Potential,
    StateFunction,
    Units,
)

__all__ = [
    "DeltaPairConfig",
    "PairEnergyRoots",
    "KappaFactors",
    "MatrixElementTerms",
    "delta_bound_state",
    "delta_continuum",
    "delta_spectrum",
    "exact_pair_energies",
    "asymptotic_pair_energy",
    "delta_matrix_element_terms",
    "first_order_pair_wavefunction",
    "kappa_factors",
    "equal_strength_block",
    "equal_strength_second_order",
]

DEGENERACY_THRESHOLD = 0.05
_TAIL_LOG = math.log(1.0 / TAIL_TOL)


@dataclass(frozen=True)
class DeltaPairConfig:
    """Two delta wells, the deeper one at the origin.

    If ``gamma1 < gamma2`` the strengths are swapped (the mirror image of
    the original geometry) and ``swapped`` is set. ``gamma2 = 0`` is
    allowed and means a single well.
    """

    gamma1: float
    gamma2: float
    separation_L: float
    units: Units = field(default_factory=Units)
    swapped: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma1) and math.isfinite(self.gamma2)):
            raise InvalidStrength("strengths must be finite")
        if self.gamma1 < self.gamma2:
            g1, g2 = self.gamma2, self.gamma1
            object.__setattr__(self, "gamma1", g1)
            object.__setattr__(self, "gamma2", g2)
            object.__setattr__(self, "swapped", not self.swapped)
        if not self.gamma1 > 0:
            raise InvalidStrength("the deeper well needs a positive strength")
        if self.gamma2 < 0:
            raise InvalidStrength("repulsive spikes have no analytic helpers here")
        if not (self.separation_L > 0 and math.isfinite(self.separation_L)):
            raise ValueError("separation must be positive and finite")

    @property
    def b1(self) -> float:
        return self.units.inverse_length(self.gamma1)

    @property
    def b2(self) -> float:
        return self.units.inverse_length(self.gamma2)

    @property
    def eps1(self) -> float:
        return -0.5 * self.units.scale * self.b1**2

    @property
    def u2(self) -> float:
        return -0.5 * self.units.scale * self.b2**2

    def potentials(self) -> tuple[Potential, Potential]:
        return Potential.delta(self.gamma1, 0.0), Potential.delta(self.gamma2, self.separation_L)

    def is_degenerate(self, threshold: float = DEGENERACY_THRESHOLD) -> bool:
        return (self.gamma1 - self.gamma2) / self.gamma1 < threshold


def _check_gamma(gamma: float, allow_zero: bool = False) -> None:
    if not math.isfinite(gamma) or gamma < 0 or (gamma == 0 and not allow_zero):
        raise InvalidStrength(f"delta strength must be positive, got {gamma}")


def delta_bound_state(
    gamma: float, center: float = 0.0, units: Units | None = None, label: str | None = None
) -> BoundState:
    """Bound state ``√b e^{-b|x-c|}`` with energy ``-mγ²/2ħ²``."""
    _check_gamma(gamma)
    units = units or Units()
    b = units.inverse_length(gamma)
    amp = math.sqrt(b)
    c = float(center)
    reach = _TAIL_LOG / b
    wf = StateFunction(
        lambda x: amp * np.exp(-b * np.abs(np.asarray(x, dtype=float) - c)),
        (c - reach, c + reach),
        (c,),
        label=label or f"delta@{c:g}",
    )
    return BoundState(-0.5 * units.scale * b * b, wf, label or f"delta@{c:g}")


def delta_continuum(
    gamma: float, center: float = 0.0, units: Units | None = None
) -> tuple[ContinuumFamily, ContinuumFamily]:
    """Even (cosine, phase-shifted) and odd (sine) continuum families.

    ``ψ¹_q(x) = cos(q|x-c| + atan(b/q))/√π`` and ``ψ²_q(x) = sin(q(x-c))/√π``.
    ``gamma = 0`` gives the free-particle continuum.
    """
    _check_gamma(gamma, allow_zero=True)
    units = units or Units()
    b = units.inverse_length(gamma)
    c = float(center)
    inv = 1.0 / math.sqrt(math.pi)

    def amp(q):
        return np.full(np.shape(q), inv)

    even = ContinuumFamily(
        "even",
        lambda x: np.abs(x - c),
        amp,
        lambda q: np.arctan2(b, q),
        units,
        phase_constant=0.0 if b == 0 else None,
        kinks=(c,),
        amplitude_constant=inv,
        kink_rate=b if b != 0 else None,
    )
    odd = ContinuumFamily(
        "odd",
        lambda x: x - c,
        amp,
        lambda q: np.full(np.shape(q), -0.5 * math.pi),
        units,
        phase_constant=-0.5 * math.pi,
        amplitude_constant=inv,
    )
    return even, odd


def delta_spectrum(
    gamma: float, center: float = 0.0, units: Units | None = None, label: str | None = None
) -> LocalSpectrum:
    """Complete spectrum of ``p²/2m - γδ(x - c)``."""
    _check_gamma(gamma, allow_zero=True)
    units = units or Units()
    bound = (delta_bound_state(gamma, center, units, label),) if gamma > 0 else ()
    resolvent = DeltaResolvent(units.inverse_length(gamma), float(center), units.scale)
    return LocalSpectrum(
        Potential.delta(gamma, center), units, bound, delta_continuum(gamma, center, units), resolvent
    )


@dataclass(frozen=True)
class PairEnergyRoots:
    """Positive roots of the two-delta bound-state condition.

    ``eta_values`` are in strength units (η with ``E = -mη²/2ħ²``), deepest
    first; ``energies`` are increasing. ``shifts`` hold ``E`` minus the
    isolated level each root continues from (``references``), computed
    without cancellation. ``residuals`` are the dimensionless values of
    the defining polynomial at each root.
    """

    eta_values: tuple[float, ...]
    energies: tuple[float, ...]
    count: int
    shifts: tuple[float, ...]
    references: tuple[float, ...]
    residuals: tuple[float, ...]


def _poly(eta, b1, b2, L):
    # (η-b1)(η-b2) - b1 b2 e^{-2Lη}, written to stay accurate near η=0
    return eta * eta - (b1 + b2) * eta - b1 * b2 * math.expm1(-2.0 * L * eta)


def _polish(eta0, bj, b1, b2, L):
    """Newton in δ = η - b_j; returns δ to full relative precision."""
    d = eta0 - bj
    for _ in range(60):
        e = math.exp(-2.0 * L * (bj + d))
        f = (bj - b1 + d) * (bj - b2 + d) - b1 * b2 * e
        fp = (bj - b1 + d) + (bj - b2 + d) + 2.0 * L * b1 * b2 * e
        step = f / fp
        d -= step
        if abs(step) <= 1e-16 * max(abs(d), 1e-300):
            break
    return d


def exact_pair_energies(cfg: DeltaPairConfig, n_scan: int = 1000) -> PairEnergyRoots:
    """All bound states of the two-delta Hamiltonian.

    Roots of ``(η-γ₁)(η-γ₂) = γ₁γ₂ e^{-2mLη/ħ²}`` are bracketed on a grid
    over ``(0, γ₁+γ₂]``, refined by Brent's method to 1e-8 and Newton-polished to 1e-14.
    The trivial root η = 0 is excluded; a shallow root exists exactly when
    ``2mLγ₁γ₂/ħ² > γ₁+γ₂``.
    """
    b1, b2, L = cfg.b1, cfg.b2, cfg.separation_L
    f = lambda e: _poly(e, b1, b2, L)  # noqa: E731
    top = b1 + b2
    grid = np.linspace(0.0, top, n_scan + 1)[1:]
    vals = [f(g) for g in grid]
    brackets = []
    # the first grid cell may hide a root just above zero
    slope0 = -(b1 + b2) + 2.0 * L * b1 * b2
    if slope0 > 0 and vals[0] < 0:
        lo = grid[0]
        for _ in range(200):
            lo *= 0.5
            if f(lo) > 0:
                break
        else:
            raise RootBracketingFailed("could not isolate the shallow root near zero")
        brackets.append((lo, grid[0]))
    for a, b_, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            brackets.append((a, a))
        elif (fa > 0) != (fb > 0):
            brackets.append((a, b_))
    if vals[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    if not brackets or len(brackets) > 2:
        raise RootBracketingFailed(f"found {len(brackets)} sign changes, expected 1 or 2")
    scale = cfg.units.scale
    etas, shifts, refs, res = [], [], [], []
    for j, (lo, hi) in enumerate(sorted(brackets, reverse=True)):
        eta = lo if lo == hi else optimize.brentq(f, lo, hi, xtol=1e-300, rtol=1e-8)
        # the deep root lies above b1, the shallow one below b2; the bracket
        # tolerance cannot tell them apart once the shift drops below it
        bj = b1 if j == 0 else b2
        d = _polish(eta, bj, b1, b2, L)
        eta = float(bj + d)
        etas.append(eta)
        shifts.append(float(-0.5 * scale * (2.0 * bj * d + d * d)))
        refs.append(-0.5 * scale * bj * bj)
        res.append(float(abs(f(eta)) / (b1 * b1)))
    energies = tuple(r + s for r, s in zip(refs, shifts))
    to_strength = scale  # η [1/length] -> strength units
    return PairEnergyRoots(
        tuple(e * to_strength for e in etas),
        energies,
        len(etas),
        tuple(shifts),
        tuple(refs),
        tuple(res),
    )


def asymptotic_pair_energy(cfg: DeltaPairConfig, threshold: float = DEGENERACY_THRESHOLD) -> float:
    """Large-L energy of the deeper level, ``ε₁{1 + 2γ₂/(γ₁-γ₂) e^{-2mγ₁L/ħ²}}``."""
    if cfg.gamma2 == 0.0:
        return cfg.eps1
    if cfg.is_degenerate(threshold):
        raise DegenerateStrengths(
            f"|γ₁-γ₂|/γ₁ = {(cfg.gamma1 - cfg.gamma2) / cfg.gamma1:.3g} is below {threshold}"
        )
    g1, g2 = cfg.gamma1, cfg.gamma2
    return cfg.eps1 * (1.0 + 2.0 * g2 / (g1 - g2) * math.exp(-2.0 * cfg.b1 * cfg.separation_L))


@dataclass(frozen=True)
class MatrixElementTerms:
    """The three leading-order pieces of the deeper level's shift.

    ``term_i`` is ``⟨1|V̂₂|1⟩``, ``term_ii`` the bound-state part of
    ``⟨1|V̂₂Ĝ₂V̂₂|1⟩`` and ``term_iii`` its continuum part.
    """

    term_i: float
    term_ii: float
    term_iii: float

    @property
    def total(self) -> float:
        return self.term_i + self.term_ii + self.term_iii

    def __iter__(self):
        return iter((self.term_i, self.term_ii, self.term_iii))


def delta_matrix_element_terms(cfg: DeltaPairConfig) -> MatrixElementTerms:
    """Closed forms of the three leading-order terms."""
    g1, g2 = cfg.gamma1, cfg.gamma2
    if g2 > 0 and g1 == g2:
        raise DegenerateStrengths("the bound-state term has a pole at γ₁ = γ₂")
    base = abs(cfg.eps1) * math.exp(-2.0 * cfg.b1 * cfg.separation_L)
    t1 = -2.0 * (g2 / g1) * base
    t2 = -4.0 * g2**3 / (g1 * (g1 * g1 - g2 * g2)) * base
    t3 = -2.0 * g2 * g2 / (g1 * (g1 + g2)) * base
    return MatrixElementTerms(t1, t2, t3)


def first_order_pair_wavefunction(cfg: DeltaPairConfig, x, threshold: float = 0.0):
    """Leading-corrected state ``φ₀ + Ĝ₂V̂₂φ₀`` of the deeper well, pointwise.

    ``√b₁{e^{-b₁|x|} + γ₂/(γ₁-γ₂) e^{-b₁L} e^{-b₁|x-L|}}``.
    """
    g1, g2 = cfg.gamma1, cfg.gamma2
    if g2 > 0 and (g1 - g2) / g1 <= threshold:
        raise DegenerateStrengths("the first-order state has a pole at γ₁ = γ₂")
    b1, L = cfg.b1, cfg.separation_L
    x = np.asarray(x, dtype=float)
    corr = 0.0 if g2 == 0 else g2 / (g1 - g2) * math.exp(-b1 * L)
    out = math.sqrt(b1) * (np.exp(-b1 * np.abs(x)) + corr * np.exp(-b1 * np.abs(x - L)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KappaFactors:
    """Small factors of the second-order state correction.

    ``kappa1 = γ₁γ₂ G₁'(L, 0)``, ``kappa2 = γ₁γ₂ [G₂(0, L)]_cont`` and
    ``kappa2_prime = γ₁γ₂ [G₂²(0, L)]_cont``, where ``[·]_cont`` is the
    continuum part of the spectral sum at the deeper level's energy.
    """

    kappa1: float
    kappa2: float
    kappa2_prime: float


def kappa_factors(cfg: DeltaPairConfig) -> KappaFactors:
    """Closed forms of the three κ factors."""
    g1, g2 = cfg.gamma1, cfg.gamma2
    if g1 == g2:
        raise DegenerateStrengths("κ₂ and κ₂' have a pole at γ₁ = γ₂")
    b1, b2, L = cfg.b1, cfg.b2, cfg.separation_L
    e1, e2 = math.exp(-b1 * L), math.exp(-b2 * L)
    k1 = g2 * (b1 * L - 0.5) * e1
    k2 = g1 * g2 / (g1 - g2) * (2.0 * g2 / (g1 + g2) * e2 - e1)
    k2p = -4.0 * b1 * b2 * b2 * e2 / (b1 * b1 - b2 * b2) ** 2 + b2 * (L + 1.0 / (b1 - b2)) * e1 / (b1 - b2)
    return KappaFactors(k1, k2, k2p)


@dataclass(frozen=True)
class EqualStrengthBlock:
    """Closed-form two-level data for mirror-image wells of equal strength."""

    alpha: float
    gamma_el: float
    delta_ov: float
    sandwich: float


def equal_strength_block(gamma: float, separation: float, units: Units | None = None) -> EqualStrengthBlock:
    """α (= β), Γ, Δ and ``⟨k|V̂₂Ĝ₂'V̂₂|k⟩`` for equal wells."""
    _check_gamma(gamma)
    units = units or Units()
    b = units.inverse_length(gamma)
    L = separation
    return EqualStrengthBlock(
        alpha=-gamma * b * math.exp(-2.0 * b * L),
        gamma_el=-gamma * b * math.exp(-b * L),
        delta_ov=(b * L + 1.0) * math.exp(-b * L),
        sandwich=-0.5 * gamma * b * math.exp(-2.0 * b * L),
    )


def equal_strength_second_order(gamma: float, separation: float, units: Units | None = None) -> float:
    """Second-order shift of both split levels of equal wells.

    ``α + ⟨k|V̂₂Ĝ₂'V̂₂|k⟩ - ΓΔ = (mγ²/2ħ²)(2mγL/ħ² - 1) e^{-2mγL/ħ²}``.
    """
    blk = equal_strength_block(gamma, separation, units)
    return blk.alpha + blk.sandwich - blk.gamma_el * blk.delta_ov
