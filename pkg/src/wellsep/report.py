"""Experiment configs, orchestration and table output for the CLI.

A config names two potentials, a method and optionally a sweep over the
separation or the second strength. :func:`run` evaluates every sweep
point (in worker processes when allowed) and returns one
:class:`ReportRow` per point and branch, in sweep order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping, Sequence

import numpy as np

from .degenerate import pair_solve
from .delta import DeltaPairConfig, delta_spectrum, exact_pair_energies
from .errors import ComputeError, ConfigInvalid, WellsepError
from .multistate import build_blocks, mo_eigensolve, multi_second_order, sandwich_matrix
from .nondegenerate import NondegInput, first_order, naive_shifts, second_order, stretching_factor
from .oracle import GridSpec, aligned_grid, extrapolated_levels
from .quadrature import QuadratureSpec
from .spectrum import Potential, Units

__all__ = [
    "ROW_FIELDS",
    "METHODS",
    "ReportRow",
    "SweepSpec",
    "OutputSpec",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "run",
    "run_timed",
    "emit",
    "format_float",
    "dumps_rows",
    "resolve_method",
]

ROW_FIELDS = (
    "parameters",
    "method",
    "branch",
    "energy",
    "shift_order1",
    "shift_order2",
    "exact_energy",
    "abs_error",
    "stretching_factor",
    "wall_time",
)
METHODS = ("auto", "nondegenerate", "degenerate_pair", "degenerate_multi", "exact", "oracle", "naive")
SWEEP_PARAMETERS = ("separation", "gamma2")
GAP_RULE = 0.1
ORACLE_SPACING = 0.01


@dataclass(frozen=True)
class ReportRow:
    """One output line. ``abs_error`` is set exactly when ``exact_energy`` is."""

    parameters: Mapping[str, float]
    method: str
    branch: str | None
    energy: float
    shift_order1: float | None = None
    shift_order2: float | None = None
    exact_energy: float | None = None
    abs_error: float | None = None
    stretching_factor: float | None = None
    wall_time: float | None = None

    def as_dict(self) -> dict[str, Any]:
        d = {f: getattr(self, f) for f in ROW_FIELDS}
        d["parameters"] = dict(self.parameters)
        return d


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    steps: int

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (see :func:`parse_config`)."""

    potentials: tuple[Potential, Potential]
    units: Units = field(default_factory=Units)
    method: str = "auto"
    order: int = 1
    sweep: SweepSpec | None = None
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    grid: GridSpec | None = None
    output: OutputSpec = field(default_factory=OutputSpec)

    def points(self) -> list[tuple[Potential, Potential]]:
        """Potential pairs for every sweep point, in order."""
        p1, p2 = self.potentials
        if self.sweep is None:
            return [(p1, p2)]
        out = []
        for v in self.sweep.values():
            if self.sweep.parameter == "separation":
                out.append((p1, replace(p2, center=p1.center + v)))
            else:
                out.append((p1, replace(p2, strength=v)))
        return out


# ----------------------------------------------------------------------
# config parsing


def _keys(obj: Any, where: str, allowed: Sequence[str], required: Sequence[str] = ()) -> dict:
    if not isinstance(obj, dict):
        raise ConfigInvalid(f"{where}: expected an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigInvalid(f"{where}: unknown key(s) {', '.join(extra)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigInvalid(f"{where}: missing key(s) {', '.join(missing)}")
    return obj


def _num(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigInvalid(f"{where}: expected a finite number")
    return float(v)


def _int(v: Any, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigInvalid(f"{where}: expected an integer")
    return v


def _potential(obj: Any, where: str) -> Potential:
    kind = obj.get("kind", "delta") if isinstance(obj, dict) else None
    if kind == "delta":
        _keys(obj, where, ("kind", "strength", "center"), ("strength",))
        return Potential.delta(_num(obj["strength"], f"{where}.strength"), _num(obj.get("center", 0.0), f"{where}.center"))
    if kind == "sampled":
        _keys(obj, where, ("kind", "strength", "center", "x", "values"), ("strength", "x", "values"))
        try:
            return Potential.sampled(
                _num(obj["strength"], f"{where}.strength"),
                _num(obj.get("center", 0.0), f"{where}.center"),
                [_num(x, f"{where}.x") for x in obj["x"]],
                [_num(x, f"{where}.values") for x in obj["values"]],
            )
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"{where}: {exc}") from exc
    raise ConfigInvalid(f"{where}.kind: expected 'delta' or 'sampled'")


def parse_config(obj: Any) -> ExperimentConfig:
    """Validate a decoded JSON config; unknown keys are rejected."""
    top = _keys(
        obj,
        "config",
        ("units", "potentials", "method", "order", "sweep", "quadrature", "grid", "output"),
        ("potentials",),
    )
    try:
        u = _keys(top.get("units", {}), "units", ("hbar", "mass"))
        units = Units(_num(u.get("hbar", 1.0), "units.hbar"), _num(u.get("mass", 1.0), "units.mass"))
    except ValueError as exc:
        raise ConfigInvalid(f"units: {exc}") from exc
    pots = top["potentials"]
    if not isinstance(pots, list) or len(pots) != 2:
        raise ConfigInvalid("potentials: exactly two entries are required")
    try:
        potentials = tuple(_potential(p, f"potentials[{i}]") for i, p in enumerate(pots))
    except WellsepError as exc:
        raise ConfigInvalid(str(exc)) from exc
    method = top.get("method", "auto")
    if method not in METHODS:
        raise ConfigInvalid(f"method: expected one of {', '.join(METHODS)}")
    order = _int(top.get("order", 1), "order")
    if order not in (1, 2):
        raise ConfigInvalid("order: expected 1 or 2")
    sweep = None
    if top.get("sweep") is not None:
        s = _keys(top["sweep"], "sweep", ("parameter", "from", "to", "steps"), ("parameter", "from", "to", "steps"))
        if s["parameter"] not in SWEEP_PARAMETERS:
            raise ConfigInvalid("sweep.parameter: expected 'separation' or 'gamma2'")
        start, stop = _num(s["from"], "sweep.from"), _num(s["to"], "sweep.to")
        steps = _int(s["steps"], "sweep.steps")
        if steps < 1:
            raise ConfigInvalid("sweep.steps: must be at least 1")
        if not start > 0 or stop < start or (steps > 1 and stop == start):
            raise ConfigInvalid("sweep: range must be positive and increasing")
        sweep = SweepSpec(s["parameter"], start, stop, steps)
    qfields = [f.name for f in fields(QuadratureSpec)]
    q = _keys(top.get("quadrature", {}), "quadrature", qfields)
    try:
        quad = QuadratureSpec(**q)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"quadrature: {exc}") from exc
    grid = None
    if top.get("grid") is not None:
        g = _keys(top["grid"], "grid", ("x_min", "x_max", "n_points", "boundary"), ("x_min", "x_max", "n_points"))
        try:
            grid = GridSpec(
                _num(g["x_min"], "grid.x_min"),
                _num(g["x_max"], "grid.x_max"),
                _int(g["n_points"], "grid.n_points"),
                g.get("boundary", "Dirichlet"),
            )
        except ValueError as exc:
            raise ConfigInvalid(f"grid: {exc}") from exc
    o = _keys(top.get("output", {}), "output", ("format", "path"))
    fmt = o.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigInvalid("output.format: expected 'csv' or 'json'")
    path = o.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigInvalid("output.path: expected a string")
    cfg = ExperimentConfig(potentials, units, method, order, sweep, quad, grid, OutputSpec(fmt, path))
    if method != "oracle" and any(not p.is_delta for p in potentials):
        raise ConfigInvalid(f"method {method!r} needs delta potentials; sampled wells are oracle-only")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path!r} is not valid JSON: {exc}") from exc
    return parse_config(obj)


# ----------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class _Pair:
    """The two deltas of one sweep point, deeper well first."""

    deep: Potential
    shallow: Potential
    units: Units

    @classmethod
    def of(cls, p1: Potential, p2: Potential, units: Units) -> "_Pair":
        if p2.strength > p1.strength:
            p1, p2 = p2, p1
        return cls(p1, p2, units)

    @property
    def separation(self) -> float:
        return abs(self.shallow.center - self.deep.center)

    def model(self) -> DeltaPairConfig:
        return DeltaPairConfig(self.deep.strength, self.shallow.strength, self.separation, self.units)

    def levels(self) -> tuple[float, float]:
        u = self.units
        eps = -0.5 * u.scale * u.inverse_length(self.deep.strength) ** 2
        if self.shallow.strength <= 0:
            return eps, math.nan
        return eps, -0.5 * u.scale * u.inverse_length(self.shallow.strength) ** 2

    def gap_degenerate(self) -> bool:
        eps, uu = self.levels()
        return math.isfinite(uu) and abs(eps - uu) < GAP_RULE * abs(eps)

    def spectra(self):
        s1 = delta_spectrum(self.deep.strength, self.deep.center, self.units, "k")
        s2 = delta_spectrum(self.shallow.strength, self.shallow.center, self.units, "kbar")
        return s1, s2


def resolve_method(method: str, p1: Potential, p2: Potential, units: Units) -> str:
    """Apply the gap rule ``|ε - u| < 0.1|ε|`` for ``auto``."""
    if method != "auto":
        return method
    return "degenerate_pair" if _Pair.of(p1, p2, units).gap_degenerate() else "nondegenerate"


def _params(p1: Potential, p2: Potential) -> dict[str, float]:
    return {
        "gamma1": p1.strength,
        "gamma2": p2.strength,
        "separation": abs(p2.center - p1.center),
    }


def _exact(pair: _Pair):
    try:
        return exact_pair_energies(pair.model())
    except WellsepError:
        return None


def _nearest(roots, energy: float) -> tuple[float | None, float | None]:
    if roots is None:
        return None, None
    j = int(np.argmin([abs(e - energy) for e in roots.energies]))
    return roots.energies[j], roots.shifts[j]


def _with_exact(row: ReportRow, roots, reference: float | None = None) -> ReportRow:
    ex, ex_shift = _nearest(roots, row.energy)
    if ex is None:
        return row
    if reference is not None and math.isclose(roots.references[roots.energies.index(ex)], reference, rel_tol=1e-14):
        # compare shifts to avoid cancellation against the reference level
        shift = (row.shift_order1 or 0.0) + (row.shift_order2 or 0.0)
        err = abs(shift - ex_shift)
    else:
        err = abs(row.energy - ex)
    return replace(row, exact_energy=ex, abs_error=err)


def _eval_point(cfg: ExperimentConfig, p1: Potential, p2: Potential) -> list[ReportRow]:
    method = resolve_method(cfg.method, p1, p2, cfg.units)
    params = _params(p1, p2)
    if method == "oracle":
        return _eval_oracle(cfg, p1, p2, params)
    pair = _Pair.of(p1, p2, cfg.units)
    spec = cfg.quadrature
    roots = _exact(pair)
    eps, _ = pair.levels()
    sf = stretching_factor(eps, pair.separation, cfg.units)

    if method == "exact":
        if roots is None:
            raise ComputeError("delta: no bound state found")
        labels = ("lower", "upper") if pair.gap_degenerate() and roots.count == 2 else (None,)
        return [
            ReportRow(params, method, lab, e, exact_energy=e, abs_error=0.0, stretching_factor=sf)
            for lab, e in zip(labels, roots.energies)
        ]

    s1, s2 = pair.spectra()
    k = s1.bound[0]
    if method in ("nondegenerate", "naive"):
        inp = NondegInput(
            k, s1, s2, pair.deep, pair.shallow, cfg.order, spec,
            gap_threshold=GAP_RULE if method == "nondegenerate" else 0.0,
        )
        if method == "naive":
            e1, e2 = naive_shifts(inp)
            e2v = e2 if cfg.order == 2 else None
            row = ReportRow(params, method, None, eps + e1 + (e2v or 0.0), e1, e2v, stretching_factor=sf)
            return [_with_exact(row, roots, eps)]
        r1 = first_order(inp)
        if cfg.order == 1:
            row = ReportRow(params, method, None, r1.corrected_energy, r1.energy_shift, stretching_factor=sf)
        else:
            r2 = second_order(inp, r1)
            row = ReportRow(
                params, method, None, r2.corrected_energy, r1.energy_shift,
                r2.energy_shift - r1.energy_shift, stretching_factor=sf,
            )
        return [_with_exact(row, roots, eps)]

    if not s2.bound:
        raise ComputeError("degenerate methods need a bound level in both wells")
    kbar = s2.bound[0]
    if method == "degenerate_pair":
        rows = []
        for br in pair_solve(k, kbar, s1, s2, pair.deep, pair.shallow, spec, order=cfg.order):
            sol = br.solution
            energy = br.energy_order2 if cfg.order == 2 else br.energy_order1
            row = ReportRow(
                params, method, br.branch, energy, sol.dE1,
                sol.dE2 if cfg.order == 2 else None,
                stretching_factor=stretching_factor(br.reference_energy, pair.separation, cfg.units),
            )
            rows.append(_with_exact(row, roots))
        return rows

    if method == "degenerate_multi":
        from .greens import GreenOperator

        block = build_blocks([k], [kbar], pair.deep, pair.shallow, spec)
        sol = mo_eigensolve(block)
        if cfg.order == 2:
            g1p = GreenOperator(s1, k.energy, ("k",), spec)
            g2p = GreenOperator(s2, k.energy, ("kbar",), spec)
            sol = multi_second_order(
                block, sol,
                sandwich_matrix([k], g2p, pair.shallow),
                sandwich_matrix([kbar], g1p, pair.deep),
            )
        rows = []
        for m in sol.paired_modes:
            for lab, d1 in zip(("plus", "minus"), m.dE1):
                e = k.energy + d1 + (m.dE2 if cfg.order == 2 else 0.0)
                row = ReportRow(params, method, lab, e, d1, m.dE2 if cfg.order == 2 else None, stretching_factor=sf)
                rows.append(_with_exact(row, roots))
        for j, m in enumerate(sol.kernel_modes):
            e = k.energy + (m.dE2 or 0.0)
            rows.append(_with_exact(ReportRow(params, method, f"kernel{j}", e, 0.0, m.dE2, stretching_factor=sf), roots))
        return rows

    raise ConfigInvalid(f"unknown method {method!r}")


def _eval_oracle(cfg: ExperimentConfig, p1: Potential, p2: Potential, params) -> list[ReportRow]:
    pots = [p1, p2]
    all_delta = all(p.is_delta for p in pots)
    roots = None
    n_eigs, labels = 1, (None,)
    if all_delta:
        pair = _Pair.of(p1, p2, cfg.units)
        roots = _exact(pair)
        if pair.gap_degenerate() and roots is not None and roots.count == 2:
            n_eigs, labels = 2, ("lower", "upper")
    grid = cfg.grid or aligned_grid(pots, cfg.units, ORACLE_SPACING)
    res = extrapolated_levels(pots, cfg.units, grid, n_eigs)
    rows = []
    for lab, e in zip(labels, res.richardson_estimate.values):
        rows.append(_with_exact(ReportRow(params, "oracle", lab, float(e)), roots))
    return rows


def _point_job(args) -> tuple[list[ReportRow], float]:
    cfg, p1, p2 = args
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            rows = _eval_point(cfg, p1, p2)
        except (ConfigInvalid, ComputeError):
            raise
        except (WellsepError, ValueError, ArithmeticError) as exc:
            raise ComputeError(f"{type(exc).__name__}: {exc}") from None
    dt = time.perf_counter() - t0
    return [replace(r, wall_time=dt) for r in rows], dt


def run_timed(cfg: ExperimentConfig, threads: int | None = None) -> tuple[list[ReportRow], list[float]]:
    """Rows in sweep order and the wall time of each sweep point."""
    jobs = [(cfg, p1, p2) for p1, p2 in cfg.points()]
    workers = min(threads or os.cpu_count() or 1, len(jobs))
    if workers <= 1:
        results = [_point_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_job, jobs))
    rows = [r for rs, _ in results for r in rs]
    return rows, [dt for _, dt in results]


def run(cfg: ExperimentConfig, threads: int | None = None) -> list[ReportRow]:
    """Evaluate the experiment; see :func:`run_timed`."""
    return run_timed(cfg, threads)[0]


# ----------------------------------------------------------------------
# output


def format_float(x: float) -> str:
    """17 significant digits, always recognizable as a float."""
    if not math.isfinite(x):
        raise ValueError("non-finite values cannot be serialized")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _json_value(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, Mapping):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps_rows(rows: Sequence[ReportRow], fmt: str) -> str:
    """Serialize rows as CSV or JSON.

    JSON carries ``wall_time`` as ``null`` so that identical configs give
    byte-identical files; the timings go to the metadata sidecar.
    """
    if fmt == "json":
        if not rows:
            return "[]\n"
        lines = []
        for r in rows:
            d = r.as_dict()
            d["wall_time"] = None
            lines.append("  " + _json_value(d))
        return "[\n" + ",\n".join(lines) + "\n]\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(ROW_FIELDS)
        for r in rows:
            d = r.as_dict()
            out = []
            for f in ROW_FIELDS:
                v = d[f]
                if f == "parameters":
                    out.append(_json_value(v))
                elif v is None:
                    out.append("")
                elif isinstance(v, float):
                    out.append(format_float(v))
                else:
                    out.append(str(v))
            w.writerow(out)
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def emit(rows: Sequence[ReportRow], fmt: str, path: str | None, meta: Mapping[str, Any] | None = None) -> None:
    """Write rows to ``path`` (stdout if ``None``) and metadata next to it."""
    text = dumps_rows(rows, fmt)
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if meta is not None:
        with open(path + ".meta.json", "w", encoding="utf-8") as fh:
            fh.write(_json_value(dict(meta)) + "\n")
