"""Nondegenerate perturbation theory for a level of one well.

Let ``|k⟩`` be a bound state of ``H₁ = T + V₁`` at ``ε`` with no level of
``H₂ = T + V₂`` nearby. The full Hamiltonian ``H = T + V₁ + V₂`` has a
level ``ε + δE`` with state ``|k⟩ + |δφ⟩`` where, order by order in the
stretching factor ``e^{-√(2m|ε|)L/ħ}``,

    |δφ⟩⁽¹⁾ = G₂V₂|k⟩
    |δφ⟩⁽²⁾ = G₁'V₁G₂V₂|k⟩ - δE⁽¹⁾ G₂²V₂|k⟩
    δE     = ⟨k|V₂|k + δφ⟩ / (1 + ⟨k|δφ⟩)

with ``G₂ = (ε - H₂)⁻¹`` and ``G₁'`` the resolvent of ``H₁`` with ``|k⟩``
removed. The first-order shift omits the denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import DegeneracyDetected
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
    "NondegInput",
    "PerturbationResult",
    "ResidualReport",
    "first_order",
    "second_order",
    "naive_shifts",
    "corrected_state",
    "residual",
    "stretching_factor",
]

GAP_THRESHOLD = 0.1


def _separation(v1: Potential, v2: Potential) -> float:
    return abs(v2.center - v1.center)


def stretching_factor(energy: float, separation: float, units) -> float:
    """``e^{-√(2m|ε|)L/ħ}``, the expansion parameter."""
    return math.exp(-units.decay_rate(energy) * separation)


@dataclass(frozen=True, eq=False)
class NondegInput:
    """A reference level of well 1 and the data of both wells.

    Raises :class:`DegeneracyDetected` when a level of ``spectrum2`` lies
    within ``gap_threshold·|ε|`` of the reference energy.
    """

    reference_state: BoundState
    spectrum1: LocalSpectrum
    spectrum2: LocalSpectrum
    v1: Potential
    v2: Potential
    order: int = 1
    q_spec: QuadratureSpec = field(default_factory=QuadratureSpec)
    gap_threshold: float = GAP_THRESHOLD

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if not any(b is self.reference_state for b in self.spectrum1.bound):
            raise ValueError("reference state must be a bound state of spectrum1")
        eps = self.reference_state.energy
        for b in self.spectrum2.bound:
            if abs(eps - b.energy) < self.gap_threshold * abs(eps):
                raise DegeneracyDetected(
                    f"level {b.label!r} at {b.energy!r} is within {self.gap_threshold}·|ε| of ε = {eps!r}"
                )

    @property
    def energy(self) -> float:
        return self.reference_state.energy

    @property
    def ket(self) -> StateFunction:
        return self.reference_state.wavefunction

    def g2(self) -> GreenOperator:
        return GreenOperator(self.spectrum2, self.energy, (), self.q_spec)

    def g1_prime(self) -> GreenOperator:
        return GreenOperator(self.spectrum1, self.energy, (self.reference_state.label,), self.q_spec)


@dataclass(frozen=True, eq=False)
class PerturbationResult:
    """Energy shift, state correction and diagnostics.

    ``terms`` add up to ``energy_shift``; ``diagnostics`` holds everything
    else (stretching factor, overlaps, norms). ``pieces`` keeps the
    individual state corrections by name.
    """

    order: int
    reference_energy: float
    energy_shift: float
    state_correction: StateFunction
    terms: Mapping[str, float]
    diagnostics: Mapping[str, float]
    pieces: Mapping[str, StateFunction]

    @property
    def corrected_energy(self) -> float:
        return self.reference_energy + self.energy_shift


def first_order(inp: NondegInput) -> PerturbationResult:
    """Leading shift ``⟨k|V₂|k⟩ + ⟨k|V₂G₂V₂|k⟩`` and state ``G₂V₂|k⟩``."""
    k = inp.ket
    g2 = inp.g2()
    direct = matrix_element(k, inp.v2, k, inp.q_spec)
    sw = green_sandwich(k, g2, inp.v2, k)
    u = apply_green(g2, apply_potential(inp.v2, k))
    terms = {"direct": direct, "green_bound": sw.bound, "green_continuum": sw.continuum}
    shift = direct + sw.bound + sw.continuum
    diag = {
        "stretching_factor": stretching_factor(inp.energy, _separation(inp.v1, inp.v2), inp.spectrum1.units),
    }
    return PerturbationResult(
        1,
        inp.energy,
        shift,
        u,
        MappingProxyType(terms),
        MappingProxyType(diag),
        MappingProxyType({"first": u}),
    )


def second_order(inp: NondegInput, first: PerturbationResult) -> PerturbationResult:
    """Second-order state and the shift from the full formula with denominator."""
    if first.order != 1:
        raise ValueError("second_order expects a first-order result")
    k = inp.ket
    spec = inp.q_spec
    u = first.pieces["first"]
    de1 = first.energy_shift
    z = apply_green(inp.g1_prime(), apply_potential(inp.v1, u))
    w = apply_green(inp.g2(), u)
    corr2 = z + (-de1) * w
    total = u + corr2

    direct = first.terms["direct"]
    c_u = matrix_element(k, inp.v2, u, spec)
    c_z = matrix_element(k, inp.v2, z, spec)
    c_w = -de1 * matrix_element(k, inp.v2, w, spec)
    numerator = direct + c_u + c_z + c_w
    ov_u = inner_product(k, u, spec)
    ov_z = inner_product(k, z, spec)
    ov_w = -de1 * inner_product(k, w, spec)
    overlap = ov_u + ov_z + ov_w
    shift = numerator / (1.0 + overlap)
    terms = {
        "direct": direct,
        "first_order_state": c_u,
        "second_order_far_well": c_z,
        "second_order_energy": c_w,
        "normalization": shift - numerator,
    }
    norm_z = math.sqrt(max(inner_product(z, z, spec), 0.0))
    norm_w = abs(de1) * math.sqrt(max(inner_product(w, w, spec), 0.0))
    diag = dict(first.diagnostics)
    diag.update(
        {
            "first_order_shift": de1,
            "overlap_k_dphi": overlap,
            "norm_far_well_piece": norm_z,
            "norm_energy_piece": norm_w,
            "energy_piece_ratio": norm_w / norm_z if norm_z > 0 else math.inf,
        }
    )
    return PerturbationResult(
        2,
        inp.energy,
        shift,
        total,
        MappingProxyType(terms),
        MappingProxyType(diag),
        MappingProxyType({"first": u, "far_well": z, "energy": (-de1) * w, "g2_squared": w}),
    )


def naive_shifts(inp: NondegInput) -> tuple[float, float]:
    """Textbook first and second order shifts in the basis of ``H₁``.

    ``E⁽¹⁾ = ⟨k|V₂|k⟩`` and ``E⁽²⁾ = Σ_{n≠k} |⟨n|V₂|k⟩|²/(ε - ε_n)`` with the
    sum running over all bound and continuum states of ``H₁``. They are
    provided to exhibit the failure of the textbook expansion: ``E⁽²⁾`` is
    of the same order as ``E⁽¹⁾``.
    """
    k = inp.ket
    e1 = matrix_element(k, inp.v2, k, inp.q_spec)
    if inp.v2.strength == 0.0:
        return e1, 0.0
    g1p = inp.g1_prime()
    e2 = green_sandwich(k, g1p, inp.v2, k).total
    return e1, e2


def corrected_state(inp: NondegInput, result: PerturbationResult, normalize: bool = False) -> StateFunction:
    """``|k⟩ + |δφ⟩``, optionally divided by its norm.

    The unnormalized form is the natural one: its overlap with ``|k⟩`` is
    ``1 + ⟨k|δφ⟩``.
    """
    phi = inp.ket + result.state_correction
    if not normalize:
        return phi
    k, d = inp.ket, result.state_correction
    spec = inp.q_spec
    nrm2 = 1.0 + 2.0 * inner_product(k, d, spec) + inner_product(d, d, spec)
    return phi * (1.0 / math.sqrt(nrm2))


@dataclass(frozen=True)
class ResidualReport:
    """``(H - ε - δE)(|k⟩ + |δφ⟩)`` on a uniform grid.

    The residual is assembled from resolvent identities, so no derivative
    is taken numerically. Delta spikes in the potentials leave point
    masses in it; on the grid each is a single-node spike of height
    ``weight/h``. ``l2`` is the discrete L² norm of smooth part plus
    spikes; the two components are also reported.
    """

    l2: float
    smooth_l2: float
    point_masses: tuple[tuple[float, float], ...]
    spacing: float


def residual(
    inp: NondegInput,
    result: PerturbationResult,
    spacing: float = 0.1,
    span: tuple[float, float] | None = None,
) -> ResidualReport:
    """Residual of the corrected eigenpair, measured on a grid.

    With ``u = G₂V₂k``, ``z = G₁'V₁u`` and ``w = G₂u`` the identities
    ``(ε-H₂)u = V₂k``, ``(ε-H₁)z = V₁u - k⟨k|V₁|u⟩`` and ``(ε-H₂)w = u``
    give, for ``E = ε + δE``,

    order 1: ``r = V₁u - δE(k + u)``
    order 2: ``r = k(⟨k|V₁|u⟩ - δE) + (δE⁽¹⁾ - δE)u + V₂z - δE z
    - δE⁽¹⁾V₁w + δE δE⁽¹⁾ w``.
    """
    k = inp.ket
    de = result.energy_shift
    u = result.pieces["first"]
    if result.order == 1:
        parts = [(-de, k), (-de, u), (1.0, apply_potential(inp.v1, u))]
    else:
        z = result.pieces["far_well"]
        w = result.pieces["g2_squared"]
        de1 = result.diagnostics["first_order_shift"]
        kv1u = matrix_element(k, inp.v1, u, inp.q_spec)
        parts = [
            (kv1u - de, k),
            (de1 - de, u),
            (-de, z),
            (de * de1, w),
            (1.0, apply_potential(inp.v2, z)),
            (-de1, apply_potential(inp.v1, w)),
        ]
    if span is None:
        c1, c2 = inp.v1.center, inp.v2.center
        reach = 30.0 / inp.spectrum1.units.decay_rate(inp.energy)
        span = (min(c1, c2) - reach, max(c1, c2) + reach)
    lo, hi = span
    n = max(2, int(round((hi - lo) / spacing)))
    x = np.linspace(lo, hi, n + 1)
    h = x[1] - x[0]
    vals = np.zeros_like(x)
    merged: dict[float, float] = {}
    for a, f in parts:
        if a == 0.0:
            continue
        if f.has_smooth:
            vals += a * f(x)
        for p, wt in f.points:
            merged[p] = merged.get(p, 0.0) + a * wt
    smooth_l2 = math.sqrt(h * float(np.sum(vals**2)))
    for p, wt in merged.items():
        vals[int(np.argmin(np.abs(x - p)))] += wt / h
    l2 = math.sqrt(h * float(np.sum(vals**2)))
    return ResidualReport(l2, smooth_l2, tuple(sorted(merged.items())), h)

