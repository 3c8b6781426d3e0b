"""Finite-difference oracle against the exact double-delta root."""

from wellsep import DeltaPairConfig, Potential, Units, exact_pair_energies
from wellsep.oracle import aligned_grid, extrapolated_levels

units = Units()
for g1, g2, L in ((2.0, 1.0, 3.0), (1.0, 1.0, 5.0), (3.0, 0.5, 2.0)):
    pots = [Potential.delta(g1, 0.0), Potential.delta(g2, L)]
    res = extrapolated_levels(pots, units, aligned_grid(pots, units, 0.01))
    est = res.richardson_estimate
    root = exact_pair_energies(DeltaPairConfig(g1, g2, L)).energies[0]
    print(f"g1={g1} g2={g2} L={L}: oracle {est.values[0]:.10f} +/- {est.errors[0]:.1e}, exact {root:.10f}")
