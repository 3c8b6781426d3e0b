"""Finite-difference ground truth for the full two-well Hamiltonian.

The Hamiltonian ``-ħ²/2m d²/dx² + V(x)`` is discretized with second-order
central differences on a uniform grid with Dirichlet walls. A delta spike
``-γδ(x - c)`` becomes a single-site potential ``-γ/h`` at the node
closest to ``c``. The matrix is symmetric tridiagonal, so the lowest
eigenpairs come from LAPACK's tridiagonal solver (bisection plus inverse
iteration) without any dense work.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ConvergenceFailure, GridMismatch, RegimeWarning
from .spectrum import Potential, Units

__all__ = [
    "GridSpec",
    "OracleResult",
    "RichardsonEstimate",
    "grid_diagonalize",
    "richardson",
    "aligned_grid",
    "refined",
    "extrapolated_levels",
]

MIN_POINTS = 64
MARGIN_DECAY_LENGTHS = 8.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform box ``[x_min, x_max]`` split into ``n_points`` intervals.

    The ``n_points - 1`` interior nodes carry the unknowns.
    """

    x_min: float
    x_max: float
    n_points: int
    boundary: str = "Dirichlet"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise ValueError("grid needs finite x_max > x_min")
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise ValueError(f"n_points must be an integer ≥ {MIN_POINTS}")
        if self.boundary != "Dirichlet":
            raise ValueError("only Dirichlet boundaries are supported")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        """Interior nodes."""
        return self.x_min + self.spacing * np.arange(1, self.n_points)


@dataclass(frozen=True)
class RichardsonEstimate:
    """``h²``-extrapolated levels and the error bars ``|E_h - E_{h/2}|/3``."""

    values: np.ndarray
    errors: np.ndarray


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Lowest eigenpairs on one grid.

    Eigenvectors are columns sampled on ``grid.nodes`` and normalized so
    that ``h Σ v² = 1`` (trapezoidal weight with zero walls).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    grid: GridSpec
    richardson_estimate: RichardsonEstimate | None = None


def _check_margin(potentials: Sequence[Potential], units: Units, grid: GridSpec) -> None:
    live = [p for p in potentials if p.strength > 0]
    if not live:
        return
    # decay length of the most weakly bound delta level sets the scale
    rates = [units.inverse_length(p.strength) for p in live if p.is_delta]
    if not rates:
        return
    length = 1.0 / min(rates)
    lo = min(p.support[0] for p in live)
    hi = max(p.support[1] for p in live)
    margin = min(lo - grid.x_min, grid.x_max - hi)
    if margin < MARGIN_DECAY_LENGTHS * length:
        warnings.warn(
            f"box margin {margin:.3g} is below {MARGIN_DECAY_LENGTHS:g} decay lengths ({length:.3g})",
            RegimeWarning,
            stacklevel=3,
        )


def grid_diagonalize(
    potentials: Sequence[Potential],
    units: Units,
    grid: GridSpec,
    n_eigs: int = 1,
) -> OracleResult:
    """Lowest ``n_eigs`` eigenpairs of the discretized Hamiltonian."""
    n_int = grid.n_points - 1
    if not 1 <= n_eigs <= n_int:
        raise ValueError("n_eigs out of range")
    _check_margin(potentials, units, grid)
    h = grid.spacing
    x = grid.nodes
    t = units.scale / h**2
    diag = np.full(n_int, t)
    for p in potentials:
        if p.strength == 0.0:
            continue
        if p.is_delta:
            i = int(round((p.center - grid.x_min) / h)) - 1
            if 0 <= i < n_int:
                diag[i] -= p.strength / h
        else:
            diag += p.value(x)
    off = np.full(n_int - 1, -0.5 * t)
    try:
        w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_eigs - 1))
    except (LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"tridiagonal eigensolver failed: {exc}") from exc
    v = v / np.sqrt(h * np.sum(v**2, axis=0))
    # sign convention: largest component positive
    idx = np.argmax(np.abs(v), axis=0)
    v = v * np.sign(v[idx, np.arange(v.shape[1])])
    return OracleResult(np.asarray(w), v, grid)


def richardson(coarse: OracleResult, fine: OracleResult) -> RichardsonEstimate:
    """Combine results at ``h`` and ``h/2`` on the same box."""
    gc, gf = coarse.grid, fine.grid
    if gc.x_min != gf.x_min or gc.x_max != gf.x_max or gf.n_points != 2 * gc.n_points:
        raise GridMismatch("Richardson needs the same box with n_points doubled")
    m = min(len(coarse.eigenvalues), len(fine.eigenvalues))
    ec, ef = coarse.eigenvalues[:m], fine.eigenvalues[:m]
    return RichardsonEstimate((4.0 * ef - ec) / 3.0, np.abs(ec - ef) / 3.0)


def refined(grid: GridSpec) -> GridSpec:
    """The same box with the spacing halved."""
    return GridSpec(grid.x_min, grid.x_max, 2 * grid.n_points, grid.boundary)


def aligned_grid(
    potentials: Sequence[Potential],
    units: Units,
    spacing: float,
    margin: float | None = None,
) -> GridSpec:
    """A box whose nodes hit every delta center, for this and all halved spacings.

    The spacing is shrunk to divide the center separations (centers are
    assumed commensurate, which is always true for two of them). The
    default margin is 30 decay lengths of the weakest delta level.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    live = [p for p in potentials if p.strength > 0]
    centers = sorted({p.center for p in potentials})
    if margin is None:
        rates = [units.inverse_length(p.strength) for p in live if p.is_delta]
        margin = 30.0 / min(rates) if rates else 10.0
    if len(centers) >= 2:
        span = centers[-1] - centers[0]
        m = max(1, int(round(span / spacing)))
        h = span / m
    else:
        span, m, h = 0.0, 0, spacing
    if not centers:
        centers = [0.0]
    a = max(1, math.ceil(margin / h))
    n = m + 2 * a
    if n < MIN_POINTS:
        scale = math.ceil(MIN_POINTS / n)
        h /= scale
        a *= scale
        n = m * scale + 2 * a
    return GridSpec(centers[0] - a * h, centers[-1] + a * h, n)


def extrapolated_levels(
    potentials: Sequence[Potential],
    units: Units,
    grid: GridSpec,
    n_eigs: int = 1,
) -> OracleResult:
    """Solve on ``grid`` and its refinement; return the fine result with the estimate."""
    coarse = grid_diagonalize(potentials, units, grid, n_eigs)
    fine = grid_diagonalize(potentials, units, refined(grid), n_eigs)
    est = richardson(coarse, fine)
    return OracleResult(fine.eigenvalues, fine.eigenvectors, fine.grid, est)
