"""Perturbation theory for bound states of two well-separated potentials."""

from .errors import *  # noqa: F401,F403
from .quadrature import QuadratureSpec
from .spectrum import (
    BoundState,
    ContinuumFamily,
    LocalSpectrum,
    Potential,
    StateFunction,
    Units,
    apply_potential,
    check_completeness,
    inner_product,
    matrix_element,
)
from .delta import (
    DeltaPairConfig,
    KappaFactors,
    PairEnergyRoots,
    asymptotic_pair_energy,
    delta_bound_state,
    delta_continuum,
    delta_matrix_element_terms,
    delta_spectrum,
    exact_pair_energies,
    first_order_pair_wavefunction,
    kappa_factors,
)
from .greens import GreenOperator, apply_green, green_kernel, green_sandwich
from .nondegenerate import (
    NondegInput,
    PerturbationResult,
    corrected_state,
    first_order,
    naive_shifts,
    residual,
    second_order,
)
from .degenerate import (
    PairBlock,
    PairSolution,
    leading_mixing,
    pair_block,
    pair_first_order_state,
    pair_sandwiches,
    pair_second_order,
    pair_solve,
)
from .multistate import (
    MOSolution,
    MultiBlock,
    build_blocks,
    kernel_second_order,
    mo_eigensolve,
    multi_second_order,
)
from .oracle import GridSpec, OracleResult, grid_diagonalize, richardson

__version__ = "0.1.0"
