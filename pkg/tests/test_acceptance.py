"""Acceptance suite: one PASS/FAIL line per criterion, tolerances as pinned.

Every criterion collects named sub-checks. The line lists each failing
sub-check with the measured value so that a failure is self-explaining.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np

from conftest import ACCEPTANCE, QUAD, gaussian, pair_input, resolvent_residual
from wellsep import (
    DeltaPairConfig,
    GreenOperator,
    Potential,
    Units,
    apply_green,
    apply_potential,
    check_completeness,
    delta_bound_state,
    delta_matrix_element_terms,
    delta_spectrum,
    exact_pair_energies,
    first_order,
    first_order_pair_wavefunction,
    green_kernel,
    green_sandwich,
    inner_product,
    kappa_factors,
    matrix_element,
    mo_eigensolve,
    naive_shifts,
    pair_solve,
    second_order,
    asymptotic_pair_energy,
    build_blocks,
    multi_second_order,
)
from wellsep.multistate import block_matrix, mode_norms, sandwich_matrix
from wellsep.oracle import GridSpec, aligned_grid, extrapolated_levels, grid_diagonalize


class Checks:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.items = []

    def add(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))

    def report(self):
        ok = all(flag for _, flag, _ in self.items)
        bad = [f"{n} ({d})" if d else n for n, flag, d in self.items if not flag]
        line = f"criterion {self.number} [{self.title}]: {'PASS' if ok else 'FAIL'}"
        if bad:
            line += " | failing: " + "; ".join(bad)
        ACCEPTANCE[self.number] = line
        print(line)
        assert ok, line


# 1 -------------------------------------------------------------------------

def test_criterion_1_exact_vs_first_order():
    c = Checks(1, "double delta exact vs first order")
    t0 = time.perf_counter()
    Ls = [2.0, 3.0, 4.0, 5.0, 6.0]
    rel = []
    for L in Ls:
        r = first_order(pair_input(L=L, order=1))
        cfg = DeltaPairConfig(2.0, 1.0, L)
        ex = exact_pair_energies(cfg).shifts[0]
        rel.append(abs(r.energy_shift - ex) / abs(ex))
        if L == 3.0:
            c.add("exact shift ~ -2.458e-5", abs(ex / -2.458e-5 - 1) < 5e-4, f"{ex:.6e}")
            terms = delta_matrix_element_terms(cfg).total
            c.add("first order is the term sum", abs(r.energy_shift - terms) <= 1e-10 * abs(terms))
    c.add("L=3 within 0.1%", rel[1] <= 1e-3, f"{rel[1]:.3e}")
    c.add("L=2 within 2%", rel[0] <= 2e-2, f"{rel[0]:.3e}")
    c.add("monotone in L", all(a > b for a, b in zip(rel, rel[1:])))
    slope = np.polyfit(Ls, np.log(rel), 1)[0]
    c.add("rate e^{-2 b1 L} within 10%", abs(slope / -4.0 - 1) <= 0.1, f"slope {slope:.3f}")
    dt = time.perf_counter() - t0
    c.add("runtime < 1 s", dt < 1.0, f"{dt:.2f} s")
    c.report()


# 2 -------------------------------------------------------------------------

CONFIGS_2 = [
    (2.0, 1.0, 3.0, Units()),
    (2.0, 1.0, 2.0, Units()),
    (3.0, 1.0, 2.5, Units()),
    (1.5, 0.5, 4.0, Units()),
    (2.0, 1.0, 3.0, Units(hbar=1.3, mass=0.8)),
]


def test_criterion_2_closed_forms_by_quadrature():
    c = Checks(2, "matrix-element closed forms")
    t0 = time.perf_counter()
    for g1, g2, L, u in CONFIGS_2:
        cfg = DeltaPairConfig(g1, g2, L, u)
        t = delta_matrix_element_terms(cfg)
        s1 = delta_spectrum(g1, 0.0, u, "k")
        s2 = delta_spectrum(g2, L, u, "kbar")
        k = s1.bound[0]
        tag = f"g1={g1} g2={g2} L={L} hbar={u.hbar}"
        direct = matrix_element(k.wavefunction, s2.potential, k.wavefunction, QUAD)
        sw = green_sandwich(k.wavefunction, GreenOperator(s2, k.energy, (), QUAD), s2.potential, k.wavefunction)
        even, odd = sw.per_family
        c.add(f"term i {tag}", abs(direct / t.term_i - 1) <= 1e-6, f"{direct:.9e}")
        c.add(f"bound term {tag}", abs(sw.bound / t.term_ii - 1) <= 1e-6, f"{sw.bound:.9e}")
        c.add(f"even continuum {tag}", abs(even / t.term_iii - 1) <= 1e-6, f"{even:.9e}")
        c.add(f"odd continuum {tag}", abs(odd) <= 1e-6 * abs(t.term_iii), f"{odd:.3e}")
        # energies, not shifts: subtracting eps1 from the asymptotic form cancels digits
        asym = asymptotic_pair_energy(cfg)
        c.add(f"eps1 + sum = asymptotic {tag}", abs((cfg.eps1 + t.total) / asym - 1) <= 1e-12)
    dt = time.perf_counter() - t0
    c.add("runtime < 10 s", dt < 10.0, f"{dt:.2f} s")
    c.report()


# 3 -------------------------------------------------------------------------

def test_criterion_3_first_order_wavefunction():
    c = Checks(3, "first-order wavefunction")
    L = 3.0
    cfg = DeltaPairConfig(2.0, 1.0, L)
    s1 = delta_spectrum(2.0, 0.0, label="k")
    s2 = delta_spectrum(1.0, L, label="kbar")
    k = s1.bound[0]
    u = apply_green(GreenOperator(s2, k.energy, (), QUAD), apply_potential(s2.potential, k.wavefunction))
    x = np.linspace(-5.0, L + 5.0, 261)
    err = float(np.max(np.abs(k.wavefunction(x) + u(x) - first_order_pair_wavefunction(cfg, x))))
    c.add("pointwise on [-5, L+5] to 1e-6", err <= 1e-6, f"{err:.2e}")
    c.report()


# 4 -------------------------------------------------------------------------

def test_criterion_4_degenerate_splitting():
    c = Checks(4, "degenerate splitting and second order")
    g, L = 1.0, 5.0
    s1 = delta_spectrum(g, 0.0, label="k")
    s2 = delta_spectrum(g, L, label="kbar")
    k, kb = s1.bound[0], s2.bound[0]
    plus, minus = pair_solve(k, kb, s1, s2, s1.potential, s2.potential)
    roots = exact_pair_energies(DeltaPairConfig(g, g, L))
    err = lambda e: min(abs(e - r) for r in roots.energies)  # noqa: E731
    scale = math.exp(-2 * g * L)
    for br in (plus, minus):
        e1 = err(br.energy_order1)
        e2 = err(br.energy_order2)
        c.add(f"first-order splitting O(e^-2gL) {br.branch}", e1 <= 10 * scale, f"{e1:.3e}")
        c.add(f"second order 10x better {br.branch}", 10 * e2 <= e1, f"{e1:.3e} -> {e2:.3e}")
    d = abs(plus.solution.dE2 - minus.solution.dE2)
    c.add("branch-independent dE2 to 1e-10", d < 1e-10, f"{d:.1e}")
    c.add(
        "dE2 equals the reference value -2.49700e-4",
        abs(plus.solution.dE2 / -2.49700e-4 - 1) < 1e-5,
        f"computed {plus.solution.dE2:.5e}",
    )
    c.report()


# 5 -------------------------------------------------------------------------

def test_criterion_5_kappa_factors():
    c = Checks(5, "kappa factors")
    for L in (2.0, 3.0):
        cfg = DeltaPairConfig(2.0, 1.0, L)
        ref = kappa_factors(cfg)
        s1 = delta_spectrum(2.0, 0.0, label="k")
        s2 = delta_spectrum(1.0, L, label="kbar")
        eps = s1.bound[0].energy
        g1p = GreenOperator(s1, eps, ("k",), QUAD)
        g2 = GreenOperator(s2, eps, (), QUAD)
        w = 2.0 * 1.0
        vals = {
            "kappa1": w * green_kernel(g1p, L, 0.0).total,
            "kappa2": w * green_kernel(g2, 0.0, L).continuum_total,
            "kappa2'": w * green_kernel(g2, 0.0, L, power=2).continuum_total,
        }
        for (name, q), closed in zip(vals.items(), (ref.kappa1, ref.kappa2, ref.kappa2_prime)):
            c.add(f"{name} L={L}", abs(q / closed - 1) <= 1e-6, f"{q:.9e} vs {closed:.9e}")
    inp = pair_input(L=3.0)
    r2 = second_order(inp, first_order(inp))
    ratio = r2.diagnostics["energy_piece_ratio"]
    c.add("energy piece negligible at L=3", ratio < 0.05, f"{ratio:.4f}")
    c.report()


# 6 -------------------------------------------------------------------------

def test_criterion_6_naive_failure():
    c = Checks(6, "naive perturbation failure")
    Ls = np.array([3.0, 4.0, 5.0, 6.0])
    e = np.array([naive_shifts(pair_input(L=L, order=1)) for L in Ls])
    ratio = e[:, 1] / e[:, 0]
    spread = float(np.max(ratio) / np.min(ratio))
    c.add("E2/E1 within a factor 2", np.all(ratio > 0) and spread <= 2.0, f"spread {spread:.3f}")
    slope = np.polyfit(Ls, np.log(np.abs(e[:, 0])), 1)[0]
    c.add("E1 decays at e^{-2 b1 L} within 10%", abs(slope / -4.0 - 1) <= 0.1, f"slope {slope:.3f}")
    c.report()


# 7 -------------------------------------------------------------------------

def test_criterion_7_multi_block():
    c = Checks(7, "multi-degenerate block solver")
    rng = np.random.default_rng(7)
    worst_sym = worst_norm = worst_kernel = 0.0
    zeros_ok = True
    for _ in range(50):
        n1, n2 = sorted(rng.integers(1, 6, size=2), reverse=True)
        g = rng.normal(size=(n1, n2))
        sol = mo_eigensolve(g)
        dense = np.sort(np.linalg.eigvalsh(block_matrix(g)))
        worst_sym = max(worst_sym, float(np.max(np.abs(dense + dense[::-1]))))
        zeros_ok &= int(np.sum(np.abs(dense) < 1e-10)) == n1 - n2
        zeros_ok &= len(sol.kernel_modes) == n1 - n2
        worst_sym = max(worst_sym, float(np.max(np.abs(sol.first_order_shifts() - dense))))
        for nu, nv in mode_norms(sol):
            worst_norm = max(worst_norm, abs(nu - nv))
        for m in sol.kernel_modes:
            worst_kernel = max(worst_kernel, float(np.max(np.abs(g.T @ m.U))))
    c.add("spectrum symmetric to 1e-10", worst_sym < 1e-10, f"{worst_sym:.1e}")
    c.add("exactly n1-n2 zeros", zeros_ok)
    c.add("|u| = |v| to 1e-10", worst_norm < 1e-10, f"{worst_norm:.1e}")
    c.add("kernel annihilated to 1e-10", worst_kernel < 1e-10, f"{worst_kernel:.1e}")

    s1 = delta_spectrum(1.0, 0.0, label="k")
    s2 = delta_spectrum(1.0, 5.0, label="kbar")
    k, kb = s1.bound[0], s2.bound[0]
    block = build_blocks([k], [kb], s1.potential, s2.potential)
    g1p = GreenOperator(s1, k.energy, ("k",))
    g2p = GreenOperator(s2, k.energy, ("kbar",))
    sol = multi_second_order(
        block, mo_eigensolve(block), sandwich_matrix([k], g2p, s2.potential), sandwich_matrix([kb], g1p, s1.potential)
    )
    plus, minus = pair_solve(k, kb, s1, s2, s1.potential, s2.potential)
    (m,) = sol.paired_modes
    d1 = float(np.max(np.abs(np.sort(m.dE1) - np.sort([plus.solution.dE1, minus.solution.dE1]))))
    d2 = max(abs(m.dE2 - plus.solution.dE2), abs(m.dE2 - minus.solution.dE2))
    c.add("N=1 dE1 equals pair to 1e-10", d1 < 1e-10, f"{d1:.1e}")
    c.add("N=1 dE2 equals pair to 1e-10", d2 < 1e-10, f"{d2:.1e}")
    c.report()


# 8 -------------------------------------------------------------------------

def test_criterion_8_oracle():
    c = Checks(8, "oracle equivalence")
    t0 = time.perf_counter()
    units = Units()
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(10):
        g1, g2 = rng.uniform(0.5, 3.0, size=2)
        L = rng.uniform(2.0, 6.0)
        pots = [Potential.delta(g1, 0.0), Potential.delta(g2, L)]
        root = exact_pair_energies(DeltaPairConfig(g1, g2, L)).energies[0]
        est = extrapolated_levels(pots, units, aligned_grid(pots, units, 0.01)).richardson_estimate.values[0]
        worst = max(worst, abs(est - root) / max(1e-6, 1e-4 * abs(root)))
    c.add("10 random pairs within max(1e-6, 1e-4|E|)", worst <= 1.0, f"worst {worst:.3f} of tolerance")
    ref = 0.5 * math.pi**2
    errs = [grid_diagonalize([], units, GridSpec(0.0, 1.0, n)).eigenvalues[0] - ref for n in (64, 128, 256)]
    rates = [a / b for a, b in zip(errs, errs[1:])]
    c.add("box converges at h^2", all(abs(r / 4 - 1) < 0.01 for r in rates), ", ".join(f"{r:.4f}" for r in rates))
    dt = time.perf_counter() - t0
    c.add("runtime < 60 s", dt < 60.0, f"{dt:.2f} s")
    c.report()


# 9 -------------------------------------------------------------------------

def test_criterion_9_properties(tmp_path):
    c = Checks(9, "property suites")
    sp = delta_spectrum(1.0, 0.0)
    for center, width in ((0.0, 0.7), (1.0, 0.7), (-0.5, 0.4)):
        r = check_completeness(sp, gaussian(center, width))
        c.add(f"completeness bump at {center}", r < 1e-6, f"{r:.1e}")
    for excl in ((), ("a",)):
        g = GreenOperator(delta_spectrum(1.0, 0.0, label="a"), -2.0, excl)
        r = resolvent_residual(g, gaussian(0.5, 0.6))
        c.add(f"resolvent identity excluded={excl}", r < 1e-6, f"{r:.1e}")
    worst = 0.0
    for gam in (0.3, 1.0, 2.0, 5.0):
        for u in (Units(), Units(hbar=1.3, mass=0.8)):
            f = delta_bound_state(gam, 0.7, u).wavefunction
            worst = max(worst, abs(inner_product(f, f, method="quadrature") - 1.0))
    c.add("bound states normalized to 1e-8", worst < 1e-8, f"{worst:.1e}")
    cfg = {
        "potentials": [{"kind": "delta", "strength": 2.0}, {"kind": "delta", "strength": 1.0, "center": 3.0}],
        "method": "nondegenerate",
        "order": 2,
        "sweep": {"parameter": "separation", "from": 2.0, "to": 4.0, "steps": 3},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "wellsep.cli", "run", "--config", str(path), "--format", "json", "--output", str(out)],
            capture_output=True,
        )
        outs.append(out.read_bytes() if proc.returncode == 0 else None)
    c.add("CLI JSON byte-identical", outs[0] is not None and outs[0] == outs[1])
    c.report()
