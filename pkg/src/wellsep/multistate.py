"""Exactly degenerate multi-level theory.

Well 1 carries ``N₁`` levels ``|k_μ⟩`` and well 2 carries ``N₂`` levels
``|k̄_ν⟩``, all at one energy. At leading order the mixing problem is the
eigenproblem of the block matrix ``[[0, Γ], [Γᵀ, 0]]`` whose spectrum is
``±λ_I`` (the singular values of ``Γ``) plus ``N₁ - N₂`` zeros. It is
solved here through the SVD of ``Γ``, which yields the pairing by
construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import NotDegenerate, ShapeMismatch, UnresolvedDegeneracy
from .greens import GreenOperator, green_sandwich
from .spectrum import BoundState, Potential, QuadratureSpec, inner_product, matrix_element

__all__ = [
    "MultiBlock",
    "PairedMode",
    "KernelMode",
    "MOSolution",
    "build_blocks",
    "mo_eigensolve",
    "sandwich_matrix",
    "multi_second_order",
    "kernel_second_order",
    "block_matrix",
    "mode_norms",
]

DEGENERACY_TOL = 1e-9
GAMMA_CONSISTENCY_TOL = 1e-8
ZERO_SINGULAR = 1e-10


@dataclass(frozen=True, eq=False)
class MultiBlock:
    """Block matrices of the degenerate problem (``n1 ≥ n2``).

    ``gamma_alt`` holds ``⟨k_μ|V₁|k̄_ν⟩`` when it was computed; for exact
    degeneracy it equals ``gamma_mat``.
    """

    alpha_mat: np.ndarray
    beta_mat: np.ndarray
    gamma_mat: np.ndarray
    delta_mat: np.ndarray
    gamma_alt: np.ndarray | None = None
    swapped: bool = False

    def __post_init__(self) -> None:
        a, b, g, d = (np.atleast_2d(np.asarray(m, dtype=float)) for m in
                      (self.alpha_mat, self.beta_mat, self.gamma_mat, self.delta_mat))
        n1, n2 = g.shape
        if a.shape != (n1, n1) or b.shape != (n2, n2) or d.shape != (n1, n2):
            raise ShapeMismatch(
                f"inconsistent block shapes α{a.shape} β{b.shape} Γ{g.shape} Δ{d.shape}"
            )
        if n1 < n2:
            raise ShapeMismatch("n1 must be at least n2; exchange the wells")
        for name, m in (("alpha_mat", a), ("beta_mat", b), ("gamma_mat", g), ("delta_mat", d)):
            object.__setattr__(self, name, m)

    @property
    def n1(self) -> int:
        return self.gamma_mat.shape[0]

    @property
    def n2(self) -> int:
        return self.gamma_mat.shape[1]


@dataclass(frozen=True)
class PairedMode:
    """``±λ`` pair with unit vectors ``u`` (well 1) and ``v`` (well 2).

    ``dE2`` holds the branch-independent second-order shift once it is
    known; ``multiplicity`` counts modes sharing this ``λ``.
    """

    lam: float
    u: np.ndarray
    v: np.ndarray
    dE2: float | None = None
    multiplicity: int = 1

    @property
    def dE1(self) -> tuple[float, float]:
        return self.lam, -self.lam


@dataclass(frozen=True)
class KernelMode:
    """Combination of well-1 levels left unshifted at first order."""

    U: np.ndarray
    dE2: float | None = None
    non_unique: bool = False

    @property
    def dE1(self) -> float:
        return 0.0


@dataclass(frozen=True)
class MOSolution:
    """Paired and kernel modes of the degenerate problem.

    ``unresolved`` is set when accidental zero singular values make the
    kernel larger than ``n1 - n2``.
    """

    paired_modes: tuple[PairedMode, ...]
    kernel_modes: tuple[KernelMode, ...]
    unresolved: bool = False
    flags: tuple[str, ...] = field(default=())
    size: int = 0

    def first_order_shifts(self) -> np.ndarray:
        """All ``n1 + n2`` first-order shifts, sorted."""
        vals = [s for m in self.paired_modes for s in m.dE1]
        vals += [0.0] * (max(self.size, len(vals) + len(self.kernel_modes)) - len(vals))
        return np.sort(np.array(vals))


def block_matrix(gamma: np.ndarray) -> np.ndarray:
    """``[[0, Γ], [Γᵀ, 0]]``."""
    g = np.atleast_2d(np.asarray(gamma, dtype=float))
    n1, n2 = g.shape
    m = np.zeros((n1 + n2, n1 + n2))
    m[:n1, n1:] = g
    m[n1:, :n1] = g.T
    return m


def build_blocks(
    states1: Sequence[BoundState],
    states2: Sequence[BoundState],
    v1: Potential,
    v2: Potential,
    spec: QuadratureSpec | None = None,
    check_gamma: bool = True,
) -> MultiBlock:
    """Matrix elements between the degenerate levels of the two wells.

    When well 2 has more levels the wells are exchanged and the block is
    marked ``swapped``.
    """
    spec = spec or QuadratureSpec()
    states1, states2 = list(states1), list(states2)
    if not states1 or not states2:
        raise ValueError("both wells need at least one degenerate level")
    energies = [s.energy for s in states1 + states2]
    e0 = energies[0]
    if max(abs(e - e0) for e in energies) > DEGENERACY_TOL * max(1.0, abs(e0)):
        raise NotDegenerate(f"levels are not degenerate: energies {energies}")
    swapped = len(states1) < len(states2)
    if swapped:
        states1, states2, v1, v2 = states2, states1, v2, v1
    f1 = [s.wavefunction for s in states1]
    f2 = [s.wavefunction for s in states2]
    n1, n2 = len(f1), len(f2)
    alpha = np.empty((n1, n1))
    beta = np.empty((n2, n2))
    gamma = np.empty((n1, n2))
    gamma_alt = np.empty((n1, n2)) if check_gamma else None
    delta = np.empty((n1, n2))
    for i in range(n1):
        for j in range(i, n1):
            alpha[i, j] = alpha[j, i] = matrix_element(f1[i], v2, f1[j], spec)
        for j in range(n2):
            gamma[i, j] = matrix_element(f1[i], v2, f2[j], spec)
            delta[i, j] = inner_product(f1[i], f2[j], spec)
            if check_gamma:
                gamma_alt[i, j] = matrix_element(f1[i], v1, f2[j], spec)
    for i in range(n2):
        for j in range(i, n2):
            beta[i, j] = beta[j, i] = matrix_element(f2[i], v1, f2[j], spec)
    if check_gamma:
        scale = max(1.0, float(np.max(np.abs(gamma))))
        dev = float(np.max(np.abs(gamma - gamma_alt)))
        if dev > GAMMA_CONSISTENCY_TOL * scale:
            warnings.warn(f"Γ via V₁ and via V₂ differ by {dev:.3g}", UnresolvedDegeneracy, stacklevel=2)
    return MultiBlock(alpha, beta, gamma, delta, gamma_alt, swapped)


def _group(values: np.ndarray, rtol: float) -> list[int]:
    """Multiplicity of each entry among (sorted, descending) values."""
    scale = max(float(np.max(np.abs(values))) if values.size else 0.0, 1e-300)
    mult = []
    for x in values:
        mult.append(int(np.sum(np.abs(values - x) <= rtol * scale)))
    return mult


def mo_eigensolve(block: MultiBlock | np.ndarray) -> MOSolution:
    """Leading-order modes from the SVD of ``Γ``.

    Accepts a :class:`MultiBlock` or a bare ``Γ`` (``n1 × n2``, ``n1 ≥ n2``).
    Singular values below ``1e-10·max λ`` mean the kernel is larger than
    ``n1 - n2``; this is reported through :class:`UnresolvedDegeneracy`
    and the ``unresolved`` flag and the extra directions are returned as
    kernel modes.
    """
    g = block.gamma_mat if isinstance(block, MultiBlock) else np.atleast_2d(np.asarray(block, dtype=float))
    n1, n2 = g.shape
    if n1 < n2:
        raise ShapeMismatch("Γ must have at least as many rows as columns")
    uu, sv, vt = np.linalg.svd(g, full_matrices=True)
    smax = float(sv[0]) if sv.size else 0.0
    live = sv > ZERO_SINGULAR * smax if smax > 0 else np.zeros_like(sv, dtype=bool)
    mult = _group(sv, 1e-10)
    # fix the SVD sign freedom: largest component of each u positive
    for i in range(n2):
        j = int(np.argmax(np.abs(uu[:, i])))
        if uu[j, i] < 0:
            uu[:, i] *= -1.0
            vt[i, :] *= -1.0
    paired = tuple(
        PairedMode(float(sv[i]), uu[:, i].copy(), vt[i, :].copy(), multiplicity=mult[i])
        for i in range(n2)
        if live[i]
    )
    dead = [i for i in range(n2) if not live[i]]
    kernel_cols = dead + list(range(n2, n1))
    kernel = tuple(KernelMode(uu[:, j].copy()) for j in kernel_cols)
    flags = []
    unresolved = bool(dead)
    if unresolved:
        warnings.warn(
            f"{len(dead)} accidental zero singular value(s) of Γ; degeneracy not lifted at first order",
            UnresolvedDegeneracy,
            stacklevel=2,
        )
        flags.append("accidental_zero_singular_values")
    if any(m > 1 for m in mult):
        flags.append("repeated_singular_values")
    return MOSolution(paired, kernel, unresolved, tuple(flags), n1 + n2)


def sandwich_matrix(states: Sequence[BoundState], green: GreenOperator, v: Potential) -> np.ndarray:
    """``⟨k_μ|V G' V|k_ν⟩`` over a set of levels (symmetric)."""
    f = [s.wavefunction for s in states]
    n = len(f)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = green_sandwich(f[i], green, v, f[j]).total
    return out


def multi_second_order(
    block: MultiBlock,
    sol: MOSolution,
    s2: np.ndarray,
    s1: np.ndarray,
) -> MOSolution:
    """Second-order shifts of the paired modes for ``n1 = n2``.

    ``s2`` is ``⟨k_μ|V₂G₂'V₂|k_ν⟩`` and ``s1`` is ``⟨k̄_μ|V₁G₁'V₁|k̄_ν⟩``
    (see :func:`sandwich_matrix`). Per mode

        δE⁽²⁾ = ½[u(α + S₂)u + v(β + S₁)v] - (λ/2)(uΔv + vΔᵀu),

    which is the same for the ``+λ`` and ``-λ`` members.
    """
    if block.n1 != block.n2:
        raise ShapeMismatch("paired second order requires n1 = n2")
    s2 = np.atleast_2d(np.asarray(s2, dtype=float))
    s1 = np.atleast_2d(np.asarray(s1, dtype=float))
    if s2.shape != block.alpha_mat.shape or s1.shape != block.beta_mat.shape:
        raise ShapeMismatch("sandwich matrices do not match the block")
    a = block.alpha_mat + s2
    b = block.beta_mat + s1
    d = block.delta_mat
    modes = []
    for m in sol.paired_modes:
        sym = 0.5 * (m.u @ a @ m.u + m.v @ b @ m.v)
        cross = 0.5 * m.lam * (m.u @ d @ m.v + m.v @ d.T @ m.u)
        modes.append(replace(m, dE2=float(sym - cross)))
    return replace(sol, paired_modes=tuple(modes))


def kernel_second_order(
    block: MultiBlock,
    sol: MOSolution,
    s2: np.ndarray,
    rtol: float = 1e-10,
) -> MOSolution:
    """Lift the kernel degeneracy with ``α + S₂`` projected on the kernel.

    Returns kernel modes carrying their ``δE⁽²⁾`` and the vectors that
    diagonalize the projected matrix. When eigenvalues coincide (to
    ``rtol`` of the largest) the affected modes are flagged
    ``non_unique``: any orthonormal basis of their span is valid.
    """
    if block.n1 <= block.n2:
        raise ShapeMismatch("kernel modes need n1 > n2")
    s2 = np.atleast_2d(np.asarray(s2, dtype=float))
    if s2.shape != block.alpha_mat.shape:
        raise ShapeMismatch("S₂ does not match α")
    if not sol.kernel_modes:
        return sol
    basis = np.column_stack([m.U for m in sol.kernel_modes])
    eff = basis.T @ (block.alpha_mat + s2) @ basis
    eff = 0.5 * (eff + eff.T)
    w, vecs = np.linalg.eigh(eff)
    scale = max(float(np.max(np.abs(w))), 1e-300)
    modes = []
    for j in range(len(w)):
        same = np.abs(w - w[j]) <= rtol * scale
        modes.append(KernelMode(basis @ vecs[:, j], float(w[j]), bool(np.sum(same) > 1)))
    flags = sol.flags
    if any(m.non_unique for m in modes):
        flags = flags + ("kernel_degeneracy_unlifted",)
    return replace(sol, kernel_modes=tuple(modes), flags=flags)


def mode_norms(sol: MOSolution) -> list[tuple[float, float]]:
    """``(‖u‖, ‖v‖)`` per paired mode."""
    return [(math.fsum(m.u**2) ** 0.5, math.fsum(m.v**2) ** 0.5) for m in sol.paired_modes]
