"""Quadrature engine.

Two rules cover everything the library integrates:

* composite Gauss-Legendre panels on finite intervals, refined by global
  panel doubling until two successive sums agree, and
* QUADPACK Fourier integrals (QAWO on finite pieces, QAWF on the final
  semi-infinite piece, both reached through :func:`scipy.integrate.quad`)
  for momentum integrals carrying a ``cos(q r)`` or ``sin(q r)`` factor.

All functions are reentrant: no state is kept between calls.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import integrate

from .errors import NonConvergent

__all__ = [
    "QuadratureSpec",
    "panel_edges",
    "gauss_legendre",
    "adaptive_integral",
    "fourier_integral",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budgets for every numerical integral.

    Parameters
    ----------
    abs_tol, rel_tol : float
        Absolute and relative targets. A sum is accepted once the change
        under panel doubling is below ``max(abs_tol, rel_tol*|value|)``.
    q_max : float or None
        Truncation of momentum integrals evaluated on panels. ``None`` means
        ``q_max_factor`` times the largest inverse decay length of the
        spectrum at hand. Point-to-point Green kernels never truncate; they
        run QAWF to infinity.
    panel_rule : str
        ``"gauss-legendre-<n>"``.
    oscillation_guard : bool
        Cap panel widths so that every oscillation period of the integrand
        is covered by at least four panels' worth of nodes.
    max_panels : int
        Panel budget; exceeding it raises :class:`NonConvergent`.
    q_max_factor : float
        Multiplier used when ``q_max`` is ``None``.
    kernel : str
        ``"auto"`` uses a spectrum's closed-form continuum resolvent when it
        has one; ``"quadrature"`` forces the Fourier integrals.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    q_max: float | None = None
    panel_rule: str = "gauss-legendre-16"
    oscillation_guard: bool = True
    max_panels: int = 40000
    q_max_factor: float = 40.0
    kernel: str = "auto"

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.q_max is not None and not self.q_max > 0:
            raise ValueError("q_max must be positive")
        if self.max_panels < 1:
            raise ValueError("max_panels must be at least 1")
        if self.kernel not in ("auto", "quadrature"):
            raise ValueError("kernel must be 'auto' or 'quadrature'")
        self.order  # validates panel_rule

    @property
    def order(self) -> int:
        prefix = "gauss-legendre-"
        if not self.panel_rule.startswith(prefix):
            raise ValueError(f"unknown panel rule {self.panel_rule!r}")
        n = int(self.panel_rule[len(prefix):])
        if not 2 <= n <= 128:
            raise ValueError("Gauss-Legendre order must lie in [2, 128]")
        return n

    def resolve_q_max(self, inverse_length: float) -> float:
        """Momentum cutoff for a spectrum whose largest decay rate is given."""
        if self.q_max is not None:
            return float(self.q_max)
        return self.q_max_factor * float(inverse_length)


@lru_cache(maxsize=16)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_edges(
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    max_width: float | None = None,
) -> np.ndarray:
    """Panel boundaries on ``[a, b]`` that include every interior breakpoint."""
    pts = sorted({float(a), float(b), *(float(p) for p in breakpoints if a < p < b)})
    pieces = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        n = 1 if max_width is None else max(1, math.ceil((hi - lo) / max_width))
        pieces.append(np.linspace(lo, hi, n + 1)[:-1])
    pieces.append(np.array([pts[-1]]))
    return np.concatenate(pieces)


def gauss_legendre(edges: np.ndarray, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite rule on the given panels."""
    x, w = _leggauss(order)
    lo = edges[:-1, None]
    half = 0.5 * (edges[1:, None] - lo)
    return (lo + half * (1.0 + x)).ravel(), (half * w).ravel()


def _refine(edges: np.ndarray) -> np.ndarray:
    mid = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mid
    return out


def adaptive_integral(
    func: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    spec: QuadratureSpec,
) -> np.ndarray | float:
    """Integrate a vectorized function over the panels in ``edges``.

    ``func`` maps an array of nodes of shape ``(n,)`` to values of shape
    ``(n,)`` or ``(n, m)``; vector-valued integrands are refined together
    and accepted on their largest component.
    """
    order = spec.order
    edges = np.asarray(edges, dtype=float)
    nodes, weights = gauss_legendre(edges, order)
    prev = np.tensordot(weights, np.asarray(func(nodes)), axes=(0, 0))
    while True:
        edges = _refine(edges)
        if len(edges) - 1 > spec.max_panels:
            raise NonConvergent(
                f"panel budget {spec.max_panels} exhausted before reaching tolerance"
            )
        nodes, weights = gauss_legendre(edges, order)
        cur = np.tensordot(weights, np.asarray(func(nodes)), axes=(0, 0))
        err = np.max(np.abs(cur - prev))
        if err <= max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(cur)))):
            return cur if np.ndim(cur) else float(cur)
        prev = cur


def _quad(func, a, b, spec, **kw) -> float:
    # QAWF extrapolation can stall when asked for far more than it needs; retry looser
    for eps in (spec.abs_tol * 1e-3, spec.abs_tol):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, err = integrate.quad(func, a, b, epsabs=eps, **kw)[:2]
        if not caught or err <= max(spec.abs_tol, spec.rel_tol * abs(val)):
            return val
    raise NonConvergent(f"Fourier integral on [{a}, {b}] stalled: {caught[0].message}")


_TINY_R = 1e-150


def fourier_integral(
    g: Callable[[float], float],
    r: float,
    kind: str,
    spec: QuadratureSpec,
    q0: float = 40.0,
) -> float:
    """Return ``∫_0^∞ g(q) w(q r) dq`` with ``w`` = cos or sin.

    ``g`` must be smooth and decay at least like ``1/q`` (sine) or
    ``1/q**2`` (cosine). The ray is split as ``[0, q0]``, geometric pieces
    up to one oscillation period ``2π/|r|`` and a QAWF tail, which keeps
    the result accurate to rounding level for ``|r|`` anywhere from 0 to
    hundreds of decay lengths.
    """
    if kind not in ("cos", "sin"):
        raise ValueError("kind must be 'cos' or 'sin'")
    ra = abs(float(r))
    if ra == 0.0 and kind == "sin":
        return 0.0
    if ra < _TINY_R:
        # the result is flat in r down here; the cosine case is its r = 0 value and
        # the sine case keeps its one-sided limit, which a slow 1/q decay makes nonzero
        if kind == "cos":
            return _quad(g, 0.0, np.inf, spec, epsrel=spec.rel_tol * 1e-3, limit=400)
        ra = _TINY_R
    q_switch = max(q0, 2.0 * math.pi / ra)
    edges = [0.0, q0]
    while edges[-1] < q_switch:
        edges.append(min(2.0 * edges[-1], q_switch))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += _quad(g, a, b, spec, weight=kind, wvar=ra, epsrel=spec.rel_tol * 1e-3, limit=400)
    total += _quad(g, q_switch, np.inf, spec, weight=kind, wvar=ra, limlst=200, limit=400)
    if kind == "sin" and r < 0:
        total = -total
    return total
