"""Tunnel splitting of two equal delta wells, order 1 and order 2 against exact."""

import numpy as np

from wellsep import DeltaPairConfig, delta_spectrum, exact_pair_energies, pair_solve

G = 1.0
print(f"{'L':>4} {'branch':>6} {'exact':>16} {'err order 1':>12} {'err order 2':>12}")
for L in (3.0, 4.0, 5.0, 6.0, 8.0):
    s1 = delta_spectrum(G, 0.0, label="k")
    s2 = delta_spectrum(G, L, label="kbar")
    roots = exact_pair_energies(DeltaPairConfig(G, G, L)).energies
    for br in pair_solve(s1.bound[0], s2.bound[0], s1, s2, s1.potential, s2.potential):
        ref = roots[int(np.argmin([abs(br.energy_order2 - r) for r in roots]))]
        print(f"{L:4.1f} {br.branch:>6} {ref:16.10f} {abs(br.energy_order1-ref):12.3e} {abs(br.energy_order2-ref):12.3e}")
