"""Shift of the deeper level of an unequal delta pair versus separation.

Prints the first- and second-order shifts, the exact shift and the naive
Rayleigh-Schrodinger value, showing that the naive series does not improve
with separation while the well-separated expansion does.
"""

import numpy as np

from wellsep import DeltaPairConfig, NondegInput, delta_spectrum, exact_pair_energies
from wellsep import first_order, naive_shifts, second_order

G1, G2 = 2.0, 1.0

print(f"{'L':>4} {'exact':>14} {'order 1':>14} {'order 2':>14} {'rel err 1':>10} {'rel err 2':>10} {'naive E2/E1':>11}")
for L in np.arange(2.0, 6.5, 0.5):
    s1 = delta_spectrum(G1, 0.0, label="k")
    s2 = delta_spectrum(G2, L, label="kbar")
    inp = NondegInput(s1.bound[0], s1, s2, s1.potential, s2.potential, 2)
    r1 = first_order(inp)
    r2 = second_order(inp, r1)
    exact = exact_pair_energies(DeltaPairConfig(G1, G2, L)).shifts[0]
    n1, n2 = naive_shifts(inp)
    e1 = r1.energy_shift
    e2 = r2.energy_shift  # full shift through second order
    print(f"{L:4.1f} {exact:14.6e} {e1:14.6e} {e2:14.6e} {abs(e1/exact-1):10.2e} {abs(e2/exact-1):10.2e} {n2/n1:11.4f}")
