"""Domain types for potentials, states and local spectra.

A :class:`LocalSpectrum` holds the complete eigen-decomposition of one
local Hamiltonian ``H_i = p²/2m + V_i``: an ordered tuple of bound states
and one or more continuum families, each family being a set of real,
delta-normalized standing waves of the form

    ψ_q(x) = A(q) cos(q s(x) + φ(q)),     E(q) = ħ²q²/2m,

where ``s`` is a family-specific coordinate (for example ``|x - c|``).
The product rule

    ψ_q(x) ψ_q(y) = A²/2 [cos q(s-t) + cos 2φ cos q(s+t) - sin 2φ sin q(s+t)]

turns every point-to-point spectral integral into a handful of Fourier
integrals, which is how Green kernels are evaluated without truncation.

:class:`StateFunction` is the common currency of the library. Besides a
smooth part it may carry point masses (``V̂ψ`` for a delta spike is a
point mass) and an optional :class:`Expansion`, i.e. known coordinates in
the eigenbasis of one spectrum. Expansions make nested resolvents and
overlaps with that spectrum's own eigenstates exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidStrength, NonConvergent
from .quadrature import (
    QuadratureSpec,
    adaptive_integral,
    fourier_integral,
    gauss_legendre,
    panel_edges,
)

__all__ = [
    "Units",
    "Potential",
    "SampledProfile",
    "StateFunction",
    "BoundState",
    "ContinuumFamily",
    "LocalSpectrum",
    "Expansion",
    "Source",
    "GridPart",
    "QuadratureSpec",
    "TAIL_TOL",
    "inner_product",
    "matrix_element",
    "apply_potential",
    "check_completeness",
    "continuum_transform",
]

# Relative amplitude below which a state is treated as zero.
TAIL_TOL = 1e-12
_TAIL_LOG = math.log(1.0 / TAIL_TOL)
_CHUNK = 2_000_000


@dataclass(frozen=True)
class Units:
    """Values of ħ and m. Natural units (ħ = m = 1) are the default."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be strictly positive")
        if not (math.isfinite(self.hbar) and math.isfinite(self.mass)):
            raise ValueError("hbar and mass must be finite")

    @property
    def scale(self) -> float:
        """ħ²/m, the energy·length² unit of the kinetic term."""
        return self.hbar**2 / self.mass

    def kinetic(self, q):
        return 0.5 * self.scale * np.square(q)

    def decay_rate(self, energy: float) -> float:
        """Inverse decay length √(2m|E|)/ħ of a state at energy E < 0."""
        return math.sqrt(2.0 * self.mass * abs(energy)) / self.hbar

    def inverse_length(self, strength: float) -> float:
        """mγ/ħ², the inverse decay length of a delta well of strength γ."""
        return self.mass * strength / self.hbar**2


@dataclass(frozen=True)
class SampledProfile:
    """Sampled potential shape on a compact support, relative to its center.

    Values are interpolated with a cubic spline and are zero outside
    ``[x[0], x[-1]]``; the end samples should vanish.
    """

    x: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.x) != len(self.values) or len(self.x) < 4:
            raise ValueError("profile needs at least 4 matching samples")
        if any(b <= a for a, b in zip(self.x[:-1], self.x[1:])):
            raise ValueError("profile abscissae must be strictly increasing")
        object.__setattr__(self, "_spline", CubicSpline(self.x, self.values))

    @property
    def support(self) -> tuple[float, float]:
        return self.x[0], self.x[-1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.x[0]) & (x <= self.x[-1]), self._spline(x), 0.0)


@dataclass(frozen=True)
class Potential:
    """One potential term ``V(x) = -strength * shape(x - center)``.

    ``kind="delta"`` is the spike ``-strength δ(x - center)``; positive
    strength is attractive. ``kind="sampled"`` uses ``profile`` as the shape.
    A zero strength is accepted and represents an absent well.
    """

    kind: str
    strength: float
    center: float = 0.0
    profile: SampledProfile | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("delta", "sampled"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not math.isfinite(self.strength) or not math.isfinite(self.center):
            raise InvalidStrength("strength and center must be finite")
        if self.kind == "sampled" and self.profile is None:
            raise ValueError("sampled potential needs a profile")
        if self.kind == "delta" and self.profile is not None:
            raise ValueError("delta potential takes no profile")

    @classmethod
    def delta(cls, strength: float, center: float = 0.0) -> "Potential":
        return cls("delta", float(strength), float(center))

    @classmethod
    def sampled(cls, strength: float, center: float, x, values) -> "Potential":
        prof = SampledProfile(tuple(map(float, x)), tuple(map(float, values)))
        return cls("sampled", float(strength), float(center), prof)

    @property
    def is_delta(self) -> bool:
        return self.kind == "delta"

    @property
    def support(self) -> tuple[float, float]:
        if self.is_delta:
            return self.center, self.center
        lo, hi = self.profile.support
        return self.center + lo, self.center + hi

    def value(self, x):
        """Pointwise value; only defined for sampled potentials."""
        if self.is_delta:
            raise TypeError("a delta spike has no pointwise value")
        return -self.strength * self.profile(np.asarray(x, dtype=float) - self.center)


@dataclass(frozen=True)
class Source:
    """Continuum part of ``Π_i (ε_i - H)^-1`` applied to a point mass."""

    position: float
    weight: float
    energies: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class GridPart:
    """Continuum coefficients sampled on a fixed momentum grid.

    The function represented is ``Σ_f Σ_i w_i ψ_f(q_i, x) c_f[i]``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    coeffs: tuple[np.ndarray, ...]

    def scaled(self, a: float) -> "GridPart":
        return GridPart(self.nodes, self.weights, tuple(a * c for c in self.coeffs))


@dataclass(frozen=True, eq=False)
class Expansion:
    """Coordinates of a function in the eigenbasis of ``spectrum``."""

    spectrum: "LocalSpectrum"
    bound: tuple[tuple[int, float], ...] = ()
    sources: tuple[Source, ...] = ()
    grids: tuple[GridPart, ...] = ()
    #: sources evaluate through the closed-form resolvent
    closed_form: bool = False

    def scaled(self, a: float) -> "Expansion":
        return Expansion(
            self.spectrum,
            tuple((i, a * c) for i, c in self.bound),
            tuple(Source(s.position, a * s.weight, s.energies) for s in self.sources),
            tuple(g.scaled(a) for g in self.grids),
            self.closed_form,
        )

    def merged(self, other: "Expansion") -> "Expansion":
        coef: dict[int, float] = {}
        for i, c in self.bound + other.bound:
            coef[i] = coef.get(i, 0.0) + c
        return Expansion(
            self.spectrum,
            tuple(sorted(coef.items())),
            self.sources + other.sources,
            self.grids + other.grids,
            (self.closed_form or not self.sources) and (other.closed_form or not other.sources),
        )

    @property
    def is_cheap(self) -> bool:
        return not self.grids and (not self.sources or self.closed_form)

    def bound_coefficient(self, index: int) -> float:
        return sum(c for i, c in self.bound if i == index)


def _merge_support(a, b):
    return (min(a[0], b[0]), max(a[1], b[1]))


@dataclass(frozen=True, eq=False)
class StateFunction:
    """A real function of x, possibly with point masses.

    Parameters
    ----------
    evaluate : callable or None
        Vectorized smooth part. ``None`` for pure point masses.
    support : (float, float)
        Interval outside which the smooth part is below ``TAIL_TOL``
        relative to its peak.
    breakpoints : tuple of float
        Locations of kinks, used as quadrature panel boundaries.
    points : tuple of (position, weight)
        Point masses ``Σ w δ(x - position)``.
    expansion : Expansion or None
        Known eigenbasis coordinates of the whole function.
    frequency : float
        Largest spatial wavenumber present, used to size panels.
    """

    evaluate: Callable[[np.ndarray], np.ndarray] | None
    support: tuple[float, float]
    breakpoints: tuple[float, ...] = ()
    points: tuple[tuple[float, float], ...] = ()
    expansion: Expansion | None = None
    frequency: float = 0.0
    label: str = ""

    def __post_init__(self) -> None:
        lo, hi = self.support
        if not hi >= lo:
            raise ValueError("support must be an ordered interval")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.evaluate is None:
            return np.zeros_like(x)
        return self.evaluate(x)

    @property
    def has_smooth(self) -> bool:
        return self.evaluate is not None

    @classmethod
    def zero(cls) -> "StateFunction":
        return cls(lambda x: np.zeros_like(np.asarray(x, dtype=float)), (0.0, 0.0), label="0")

    @classmethod
    def point_mass(cls, position: float, weight: float) -> "StateFunction":
        return cls(None, (position, position), points=((float(position), float(weight)),))

    def __mul__(self, a: float) -> "StateFunction":
        a = float(a)
        ev = None if self.evaluate is None else (lambda x, f=self.evaluate: a * f(x))
        return StateFunction(
            ev,
            self.support,
            self.breakpoints,
            tuple((p, a * w) for p, w in self.points),
            None if self.expansion is None else self.expansion.scaled(a),
            self.frequency,
        )

    __rmul__ = __mul__

    def __neg__(self) -> "StateFunction":
        return self * -1.0

    def __add__(self, other: "StateFunction") -> "StateFunction":
        if not isinstance(other, StateFunction):
            return NotImplemented
        f, g = self.evaluate, other.evaluate
        if f is None and g is None:
            ev = None
        elif f is None:
            ev = g
        elif g is None:
            ev = f
        else:
            ev = lambda x: f(x) + g(x)  # noqa: E731
        exp = None
        if (
            self.expansion is not None
            and other.expansion is not None
            and self.expansion.spectrum is other.expansion.spectrum
        ):
            exp = self.expansion.merged(other.expansion)
        return StateFunction(
            ev,
            _merge_support(self.support, other.support),
            tuple(sorted(set(self.breakpoints) | set(other.breakpoints))),
            self.points + other.points,
            exp,
            max(self.frequency, other.frequency),
        )

    def __sub__(self, other: "StateFunction") -> "StateFunction":
        return self + (-other)


@dataclass(frozen=True)
class BoundState:
    """Normalized bound eigenstate of a local Hamiltonian."""

    energy: float
    wavefunction: StateFunction
    label: str

    def __post_init__(self) -> None:
        if not self.energy < 0:
            raise ValueError("bound-state energy must lie below the continuum threshold 0")


@dataclass(frozen=True)
class ContinuumFamily:
    """Delta-normalized standing waves ``A(q) cos(q s(x) + φ(q))``.

    Parameters
    ----------
    family_label : str
    argument : callable
        The coordinate ``s(x)``.
    amplitude, phase : callable
        ``A(q)`` and ``φ(q)``, vectorized in q.
    units : Units
    phase_constant, amplitude_constant : float or None
        Set when ``φ`` or ``A`` does not depend on q; this lets kernels
        skip work.
    kinks : tuple of float
        Positions where ``s`` is not smooth.
    kink_rate : float or None
        Set for the family ``cos(q|x - c| + atan(b/q))`` of a delta well
        at ``c = kinks[0]`` to the value ``b``; it enables the analytic
        large-q tail of transforms (see :meth:`LocalSpectrum.tail_sources`).
    """

    family_label: str
    argument: Callable[[np.ndarray], np.ndarray]
    amplitude: Callable[[np.ndarray], np.ndarray]
    phase: Callable[[np.ndarray], np.ndarray]
    units: Units
    phase_constant: float | None = None
    kinks: tuple[float, ...] = ()
    amplitude_constant: float | None = None
    kink_rate: float | None = None

    # short public aliases
    @property
    def asymptotic_amplitude(self):
        return self.amplitude

    @property
    def asymptotic_phase(self):
        return self.phase

    def energy_of(self, q):
        return self.units.kinetic(q)

    def wavefunction_at(self, q, x):
        """``ψ_q(x)`` with numpy broadcasting between ``q`` and ``x``."""
        q = np.asarray(q, dtype=float)
        s = self.argument(np.asarray(x, dtype=float))
        if self.phase_constant == -0.5 * math.pi:
            # exact zeros of the sine class
            return self.amplitude(q) * np.sin(q * s)
        return self.amplitude(q) * np.cos(q * s + self.phase(q))


def _resolvent_weight(units: Units, energies: Sequence[float]):
    energies = tuple(float(e) for e in energies)

    def h(q):
        kin = units.kinetic(q)
        out = 1.0
        for e in energies:
            out = out / (e - kin)
        return out

    return h


@dataclass(frozen=True, eq=False)
class LocalSpectrum:
    """Bound states plus continuum families of one local Hamiltonian."""

    potential: Potential
    units: Units
    bound: tuple[BoundState, ...]
    continuum: tuple[ContinuumFamily, ...]
    resolvent: Callable | None = None

    def __post_init__(self) -> None:
        e = [b.energy for b in self.bound]
        if any(b <= a for a, b in zip(e[:-1], e[1:])):
            raise ValueError("bound energies must be strictly increasing")
        labels = [b.label for b in self.bound]
        if len(set(labels)) != len(labels):
            raise ValueError("bound-state labels must be unique")

    def index_of(self, label: str) -> int:
        for i, b in enumerate(self.bound):
            if b.label == label:
                return i
        raise KeyError(f"no bound state labelled {label!r}")

    def identify(self, f: StateFunction) -> int | None:
        """Index of the bound state whose wavefunction object is ``f``."""
        for i, b in enumerate(self.bound):
            if b.wavefunction is f:
                return i
        return None

    def expansion_of(self, f: StateFunction) -> Expansion | None:
        if f.expansion is not None and f.expansion.spectrum is self:
            return f.expansion
        i = self.identify(f)
        if i is not None:
            return Expansion(self, ((i, 1.0),))
        return None

    @property
    def q_scale(self) -> float:
        """Largest inverse decay length among the bound states (at least 1)."""
        rates = [self.units.decay_rate(b.energy) for b in self.bound]
        return max(rates) if rates else 1.0

    def q_max(self, spec: QuadratureSpec) -> float:
        return spec.resolve_q_max(self.q_scale)

    def kinks(self) -> tuple[float, ...]:
        ks = {self.potential.center} if self.potential.is_delta else set(self.potential.support)
        for fam in self.continuum:
            ks.update(fam.kinks)
        return tuple(sorted(ks))

    # -- point kernels -------------------------------------------------
    def continuum_kernel(
        self,
        x: float,
        y: float,
        energies: Sequence[float],
        spec: QuadratureSpec,
    ) -> tuple[float, ...]:
        """Per-family ``∫ dq ψ_q(x) ψ_q(y) Π_i 1/(ε_i - E(q))``.

        Uses the closed-form ``resolvent`` when present and allowed by
        ``spec.kernel``; otherwise Fourier integrals to infinity (no
        truncation). All ``ε_i`` must be negative so the integrand has no
        pole.
        """
        if any(e >= 0 for e in energies):
            raise ValueError("continuum kernels need negative evaluation energies")
        if self.resolvent is not None and spec.kernel == "auto":
            return tuple(float(v[0]) for v in self.resolvent(x, y, energies))
        half = 0.5 * self.units.scale
        energies = tuple(float(e) for e in energies)

        def h(q):
            out = 1.0
            for e in energies:
                out /= e - half * q * q
            return out

        q0 = self.q_max(spec)
        out = []
        for fam in self.continuum:
            s = float(fam.argument(np.asarray(x, dtype=float)))
            t = float(fam.argument(np.asarray(y, dtype=float)))
            if fam.amplitude_constant is not None:
                c0 = 0.5 * fam.amplitude_constant**2
                a2 = lambda q, c0=c0: c0 * h(q)  # noqa: E731
            else:
                a2 = lambda q, fam=fam: 0.5 * float(fam.amplitude(q)) ** 2 * h(q)  # noqa: E731
            val = fourier_integral(a2, s - t, "cos", spec, q0)
            if fam.phase_constant is not None:
                c2 = math.cos(2.0 * fam.phase_constant)
                s2 = math.sin(2.0 * fam.phase_constant)
                if abs(c2) > 1e-15:
                    val += c2 * fourier_integral(a2, s + t, "cos", spec, q0)
                if abs(s2) > 1e-15:
                    val -= s2 * fourier_integral(a2, s + t, "sin", spec, q0)
            else:
                ph = fam.phase
                cpart = lambda q, a2=a2, ph=ph: a2(q) * math.cos(2.0 * float(ph(q)))  # noqa: E731
                spart = lambda q, a2=a2, ph=ph: a2(q) * math.sin(2.0 * float(ph(q)))  # noqa: E731
                val += fourier_integral(cpart, s + t, "cos", spec, q0)
                val -= fourier_integral(spart, s + t, "sin", spec, q0)
            out.append(val)
        return tuple(out)

    def continuum_kernel_many(self, xs, y: float, energies: Sequence[float], spec: QuadratureSpec) -> np.ndarray:
        """Family-summed continuum kernel at every point of ``xs`` (1-d)."""
        xs = np.asarray(xs, dtype=float).ravel()
        if self.resolvent is not None and spec.kernel == "auto":
            if any(e >= 0 for e in energies):
                raise ValueError("continuum kernels need negative evaluation energies")
            return sum(self.resolvent(xs, y, energies))
        return np.array([sum(self.continuum_kernel(xv, y, energies, spec)) for xv in xs])

    def bound_kernel(self, x, y, energies: Sequence[float], excluded=()) -> float:
        total = 0.0
        for i, b in enumerate(self.bound):
            if i in excluded:
                continue
            w = 1.0
            for e in energies:
                w /= e - b.energy
            total += w * float(b.wavefunction(x)) * float(b.wavefunction(y))
        return total

    # -- momentum grids ------------------------------------------------
    def q_grid(self, extent: float, spec: QuadratureSpec, refine: int = 0):
        """Composite rule on ``[0, q_max]`` able to resolve ``cos(q·extent)``."""
        qmax = self.q_max(spec)
        width = qmax / 16.0
        if spec.oscillation_guard and extent > 0:
            width = min(width, 2.0 * math.pi / extent)
        width /= 2**refine
        edges = panel_edges(0.0, qmax, (), width)
        return gauss_legendre(edges, spec.order)

    def tail_sources(self, f: StateFunction) -> tuple[Source, ...]:
        """Point sources carrying the large-q tail of ``f``'s continuum content.

        Against ``cos(q|x - c| + atan(b/q))`` a smooth ``f`` has coefficients
        that fall off only like ``1/q²``, set by ``g(s) = f(c+s) + f(c-s)``
        near ``s = 0``. Two sources at ``c`` with energies ``(-ħ²b²/2m,)``
        and ``(-ħ²b²/2m,)*2`` reproduce the asymptotic series through
        ``1/q⁴``, so after subtracting their transform the remainder decays
        like ``1/q⁶`` and a truncated momentum grid suffices. The sources
        contribute to no other family (their odd-family weight ``sin 0``
        vanishes).
        """
        out = []
        for fam in self.continuum:
            b = fam.kink_rate
            if not b or not fam.kinks or not f.has_smooth:
                continue
            c = fam.kinks[0]
            lo, hi = f.support
            if not lo < c < hi:
                continue
            hs = 0.005 * min(1.0 / abs(b), (hi - lo) / 10.0)
            sk = hs * np.arange(7)
            g = np.asarray(f(c + sk)) + np.asarray(f(c - sk))
            co = np.polyfit(sk / hs, g, 5)[::-1]
            g0, g1, g2, g3 = co[0], co[1] / hs, 2.0 * co[2] / hs**2, 6.0 * co[3] / hs**3
            # in units ħ = m = 1 the pole sits at -b²/2; rescale for general units
            sc = self.units.scale
            w1 = 0.5 * (b * g0 + g1)
            w2 = 0.25 * (b * g2 + g3 - 2.0 * w1 * b * b)
            e1 = -0.5 * sc * b * b
            # transform of a source is ψ_q(c) Π 1/(e - ħ²q²/2m); match per unit ħ²/m
            if w1 != 0.0:
                out.append(Source(c, float(w1) * sc, (e1,)))
            if w2 != 0.0:
                out.append(Source(c, float(w2) * sc * sc, (e1, e1)))
        return tuple(out)

    def source_transform(self, sources: Sequence[Source], q: np.ndarray) -> tuple[np.ndarray, ...]:
        """Per-family continuum coefficients of a set of sources."""
        q = np.asarray(q, dtype=float)
        out = []
        for fam in self.continuum:
            val = np.zeros(q.shape)
            for src in sources:
                val = val + src.weight * fam.wavefunction_at(q, src.position) * _resolvent_weight(self.units, src.energies)(q)
            out.append(val)
        return tuple(out)

    def extent_of(self, f: StateFunction) -> float:
        """Largest |s(x)| over the support of ``f`` for all families."""
        lo, hi = f.support
        pts = np.array([lo, hi] + [p for p, _ in f.points])
        return float(max(np.max(np.abs(fam.argument(pts))) for fam in self.continuum))


# ---------------------------------------------------------------------------
# Expansion evaluation


def expansion_evaluator(exp: Expansion, spec: QuadratureSpec):
    """Vectorized evaluator of the function an expansion represents."""
    spec_ = exp.spectrum

    def ev(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for i, c in exp.bound:
            out = out + c * spec_.bound[i].wavefunction(x)
        if exp.sources:
            flat = x.ravel()
            acc = np.zeros(flat.shape)
            for src in exp.sources:
                acc += src.weight * spec_.continuum_kernel_many(flat, src.position, src.energies, spec)
            out = out + acc.reshape(x.shape)
        for g in exp.grids:
            out = out + _grid_eval(spec_, g, x)
        return out

    return ev


def _grid_eval(spec_: LocalSpectrum, g: GridPart, x: np.ndarray) -> np.ndarray:
    flat = x.ravel()
    out = np.zeros(flat.shape)
    step = max(1, _CHUNK // max(len(g.nodes), 1))
    for a in range(0, len(flat), step):
        xs = flat[a : a + step]
        for fam, c in zip(spec_.continuum, g.coeffs):
            psi = fam.wavefunction_at(g.nodes[None, :], xs[:, None])
            out[a : a + step] += psi @ (g.weights * c)
    return out.reshape(x.shape)


# ---------------------------------------------------------------------------
# Inner products


def _x_edges(lo, hi, breakpoints, frequency):
    width = (hi - lo) / 8.0 if hi > lo else 1.0
    if frequency > 0:
        width = min(width, 2.0 * math.pi / frequency)
    return panel_edges(lo, hi, breakpoints, width)


def _quadrature_overlap(f: StateFunction, g: StateFunction, spec: QuadratureSpec) -> float:
    lo = max(f.support[0], g.support[0])
    hi = min(f.support[1], g.support[1])
    if not hi > lo:
        return 0.0
    edges = _x_edges(lo, hi, f.breakpoints + g.breakpoints, max(f.frequency, g.frequency))
    return float(adaptive_integral(lambda x: f(x) * g(x), edges, spec))


def continuum_transform(
    spectrum: LocalSpectrum,
    f: StateFunction,
    q: np.ndarray,
    spec: QuadratureSpec,
) -> tuple[np.ndarray, ...]:
    """Per-family ``⟨q|f⟩`` at the momenta ``q`` (point masses included)."""
    q = np.asarray(q, dtype=float)
    out = []
    lo, hi = f.support
    for fam in spectrum.continuum:
        val = np.zeros(q.shape)
        for p, w in f.points:
            val = val + w * fam.wavefunction_at(q, p)
        if f.has_smooth and hi > lo:
            qmax = float(np.max(q)) if q.size else 0.0
            edges = _x_edges(lo, hi, f.breakpoints + fam.kinks, max(qmax, f.frequency))
            n_q = len(q)
            step = 64
            parts = []
            for a in range(0, n_q, step):
                qs = q[a : a + step]

                def integrand(x, qs=qs, fam=fam):
                    return f(x)[:, None] * fam.wavefunction_at(qs[None, :], x[:, None])

                parts.append(np.atleast_1d(adaptive_integral(integrand, edges, spec)))
            val = val + np.concatenate(parts)
        out.append(val)
    return tuple(out)


def _spectral_overlap(a: Expansion, b: Expansion, spec: QuadratureSpec) -> float | None:
    sp = a.spectrum
    total = 0.0
    cb = dict(b.bound)
    for i, c in a.bound:
        total += c * cb.get(i, 0.0)
    for s in a.sources:
        for t in b.sources:
            total += s.weight * t.weight * sum(
                sp.continuum_kernel(s.position, t.position, s.energies + t.energies, spec)
            )
    for s, other in ((s, b) for s in a.sources):
        for g in other.grids:
            total += _source_grid(sp, s, g)
    for t in b.sources:
        for g in a.grids:
            total += _source_grid(sp, t, g)
    for ga in a.grids:
        for gb in b.grids:
            if ga.nodes.shape != gb.nodes.shape or not np.array_equal(ga.nodes, gb.nodes):
                return None
            for ca, cb_ in zip(ga.coeffs, gb.coeffs):
                total += float(np.sum(ga.weights * ca * cb_))
    return total


def _source_grid(sp: LocalSpectrum, s: Source, g: GridPart) -> float:
    h = _resolvent_weight(sp.units, s.energies)(g.nodes)
    total = 0.0
    for fam, c in zip(sp.continuum, g.coeffs):
        total += float(np.sum(g.weights * fam.wavefunction_at(g.nodes, s.position) * h * c))
    return s.weight * total


def _hybrid_overlap(exp: Expansion, g: StateFunction, spec: QuadratureSpec, refine: int = 0) -> float:
    """Overlap of an expanded function with a cheap smooth function."""
    sp = exp.spectrum
    total = 0.0
    for i, c in exp.bound:
        total += c * _quadrature_overlap(sp.bound[i].wavefunction, g, spec)
    if exp.sources or exp.grids:
        extent = sp.extent_of(g)
        for s in exp.sources:
            extent = max(extent, extent + abs(s.position - sp.potential.center))
        q, w = sp.q_grid(extent, spec, refine)
        gt = continuum_transform(sp, g, q, spec)
        for s in exp.sources:
            h = _resolvent_weight(sp.units, s.energies)(q)
            for fam, G in zip(sp.continuum, gt):
                total += s.weight * float(np.sum(w * G * h * fam.wavefunction_at(q, s.position)))
        for grid in exp.grids:
            gg = continuum_transform(sp, g, grid.nodes, spec)
            for G, c in zip(gg, grid.coeffs):
                total += float(np.sum(grid.weights * G * c))
    return total


def inner_product(
    f: StateFunction,
    g: StateFunction,
    spec: QuadratureSpec | None = None,
    method: str = "auto",
) -> float:
    """``∫ f(x) g(x) dx`` including point masses.

    Parameters
    ----------
    method : {"auto", "quadrature", "spectral"}
        ``"auto"`` uses eigenbasis coordinates when both functions expand
        in the same spectrum, a momentum-space sum when one of them is an
        expensive expansion and the other is cheap, and direct x-space
        quadrature otherwise. ``"quadrature"`` forces x-space quadrature.
    """
    spec = spec or QuadratureSpec()
    total = 0.0
    for p, w in f.points:
        if any(p == pg for pg, _ in g.points):
            raise ValueError("product of coincident point masses is undefined")
        if g.has_smooth:
            total += w * float(g(p))
    for p, w in g.points:
        if f.has_smooth:
            total += w * float(f(p))
    if not (f.has_smooth and g.has_smooth):
        return total
    if method == "quadrature":
        return total + _quadrature_overlap(f, g, spec)
    # normalize argument order so the result is symmetric
    ef, eg = f.expansion, g.expansion
    if ef is not None and eg is not None and ef.spectrum is eg.spectrum:
        if not (f.points or g.points):
            val = _spectral_overlap(ef, eg, spec)
            if val is not None:
                return total + val
    for a, b in ((f, g), (g, f)):
        ea = a.expansion
        if ea is None or ea.is_cheap or a.points:
            continue
        eb = ea.spectrum.expansion_of(b)
        if eb is not None and not b.points:
            val = _spectral_overlap(ea, eb, spec)
            if val is not None:
                return total + val
        if b.expansion is None or b.expansion.is_cheap:
            return total + _hybrid_overlap(ea, b, spec)
    if method == "spectral":
        raise ValueError("no spectral route for these functions")
    return total + _quadrature_overlap(f, g, spec)


def apply_potential(v: Potential, f: StateFunction) -> StateFunction:
    """The function ``V̂ f``; a point mass for a delta spike."""
    if v.is_delta:
        return StateFunction.point_mass(v.center, -v.strength * float(f(v.center)))
    lo, hi = v.support
    return StateFunction(
        lambda x: v.value(x) * f(x),
        (max(lo, f.support[0]), min(hi, f.support[1])) if hi > f.support[0] and lo < f.support[1] else (lo, lo),
        tuple(sorted(set(f.breakpoints) | {lo, hi})),
        frequency=f.frequency,
    )


def matrix_element(
    bra: StateFunction,
    v: Potential,
    ket: StateFunction,
    spec: QuadratureSpec | None = None,
) -> float:
    """``⟨bra|V̂|ket⟩``; exact point evaluation for delta spikes."""
    if v.is_delta:
        return -v.strength * (float(bra(v.center)) * float(ket(v.center)))
    spec = spec or QuadratureSpec()
    lo = max(v.support[0], bra.support[0], ket.support[0])
    hi = min(v.support[1], bra.support[1], ket.support[1])
    if not hi > lo:
        return 0.0
    edges = _x_edges(lo, hi, bra.breakpoints + ket.breakpoints + v.support, max(bra.frequency, ket.frequency))
    return float(adaptive_integral(lambda x: v.value(x) * (bra(x) * ket(x)), edges, spec))


def check_completeness(
    spectrum: LocalSpectrum,
    test_fn: StateFunction,
    q_spec: QuadratureSpec | None = None,
) -> float:
    """L² norm of ``f - Σ_n |n⟩⟨n|f⟩ - Σ_families ∫_0^{q_max} dq |q⟩⟨q|f⟩``.

    The momentum integral is truncated at ``q_spec``'s ``q_max``, so the
    residual certifies both the spectrum object and the cutoff. The slow
    ``1/q²`` tail that a delta well's kink imprints on smooth functions is
    summed to infinity through :meth:`LocalSpectrum.tail_sources`; the
    truncation then only affects a remainder decaying like ``1/q⁶``.
    """
    spec = q_spec or QuadratureSpec()
    if test_fn.points:
        raise ValueError("completeness is checked on functions without point masses")
    lo, hi = test_fn.support
    coef = [inner_product(b.wavefunction, test_fn, spec, method="quadrature") for b in spectrum.bound]
    q, w = spectrum.q_grid(spectrum.extent_of(test_fn), spec)
    ft = continuum_transform(spectrum, test_fn, q, spec)
    tails = spectrum.tail_sources(test_fn)
    tail_eval = None
    if tails:
        ft = tuple(F - T for F, T in zip(ft, spectrum.source_transform(tails, q)))
        tail_eval = expansion_evaluator(Expansion(spectrum, (), tails), spec)

    def resid(x):
        r = test_fn(x)
        if tail_eval is not None:
            r = r - tail_eval(x)
        for c, b in zip(coef, spectrum.bound):
            r = r - c * b.wavefunction(x)
        for fam, F in zip(spectrum.continuum, ft):
            r = r - fam.wavefunction_at(q[None, :], x[:, None]) @ (w * F)
        return r * r

    edges = _x_edges(lo, hi, test_fn.breakpoints + spectrum.kinks(), test_fn.frequency)
    loose = QuadratureSpec(abs_tol=spec.abs_tol**2, rel_tol=1e-3, max_panels=spec.max_panels)
    try:
        val = adaptive_integral(resid, edges, loose)
    except NonConvergent:
        raise
    return math.sqrt(max(float(val), 0.0))
