import csv
import io
import json
import math
import subprocess
import sys

import pytest

from wellsep.cli import main
from wellsep.report import ROW_FIELDS, ReportRow, dumps_rows, emit, format_float, parse_config, resolve_method, run
from wellsep import ConfigInvalid, Potential, Units


def _pair_cfg(g1=2.0, g2=1.0, L=3.0, **extra):
    cfg = {
        "potentials": [
            {"kind": "delta", "strength": g1, "center": 0.0},
            {"kind": "delta", "strength": g2, "center": L},
        ]
    }
    cfg.update(extra)
    return cfg


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "wellsep.cli", *args], capture_output=True, text=True)


# -- config validation ------------------------------------------------------

@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: c.update(extra=1),
        lambda c: c["potentials"][0].update(width=1.0),
        lambda c: c.update(units={"hbar": 1.0, "planck": 2.0}),
        lambda c: c.update(sweep={"parameter": "separation", "from": 2, "to": 3, "steps": 2, "log": True}),
        lambda c: c.update(quadrature={"tolerance": 1e-3}),
        lambda c: c.update(output={"format": "csv", "compress": True}),
        lambda c: c.update(method="variational"),
        lambda c: c.update(order=3),
        lambda c: c.update(sweep={"parameter": "separation", "from": 4, "to": 2, "steps": 3}),
        lambda c: c.update(sweep={"parameter": "gamma1", "from": 1, "to": 2, "steps": 3}),
        lambda c: c["potentials"].pop(),
        lambda c: c.update(units={"hbar": -1.0}),
    ],
)
def test_strict_config_exit_2(tmp_path, mutate, capsys):
    cfg = _pair_cfg(method="exact")
    mutate(cfg)
    assert main(["run", "--config", _write(tmp_path, cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_unreadable_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["run", "--config", str(p)]) == 2


def test_compute_error_exit_3(tmp_path, capsys):
    cfg = _pair_cfg(g2=0.0, method="degenerate_pair")
    assert main(["run", "--config", _write(tmp_path, cfg)]) == 3
    assert "compute error" in capsys.readouterr().err


def test_io_error_exit_4(tmp_path):
    out = tmp_path / "no_such_dir" / "out.csv"
    assert main(["exact", "--gamma1", "2", "--gamma2", "1", "--separation", "3", "--output", str(out)]) == 4


def test_console_script_exit_codes(tmp_path):
    bad = _write(tmp_path, _pair_cfg(method="exact", unknown=True))
    assert _cli("run", "--config", bad).returncode == 2
    ok = _cli("exact", "--gamma1", "2", "--gamma2", "1", "--separation", "3")
    assert ok.returncode == 0 and ok.stdout.startswith(",".join(ROW_FIELDS))


# -- examples ------------------------------------------------------------------

def test_exact_example(tmp_path):
    out = tmp_path / "e.json"
    assert main(["exact", "--gamma1", "2", "--gamma2", "1", "--separation", "3", "--format", "json", "--output", str(out)]) == 0
    (row,) = json.loads(out.read_text())
    assert row["energy"] == pytest.approx(-2.0000245748, abs=1e-10)
    assert row["method"] == "exact" and row["abs_error"] == 0.0


def test_nondegenerate_example():
    (row,) = run(parse_config(_pair_cfg(method="nondegenerate", order=1)))
    assert row.shift_order1 == pytest.approx(-2.45769e-5, rel=1e-5)
    assert row.abs_error <= 1e-3 * abs(row.shift_order1)


def test_naive_sweep_example():
    cfg = parse_config(_pair_cfg(method="naive", order=2, sweep={"parameter": "separation", "from": 2, "to": 6, "steps": 5}))
    rows = run(cfg, threads=1)
    ratios = [r.shift_order2 / r.shift_order1 for r in rows]
    assert max(ratios) / min(ratios) < 2.0
    e1 = [abs(r.shift_order1) for r in rows]
    assert all(a > b for a, b in zip(e1, e1[1:]))


def test_auto_routing():
    assert resolve_method("auto", Potential.delta(1.0), Potential.delta(1.0, 5.0), Units()) == "degenerate_pair"
    assert resolve_method("auto", Potential.delta(2.0), Potential.delta(1.0, 3.0), Units()) == "nondegenerate"
    rows = run(parse_config(_pair_cfg(1.0, 1.0, 5.0)))
    assert [r.method for r in rows] == ["degenerate_pair"] * 2
    assert [r.branch for r in rows] == ["plus", "minus"]
    (row,) = run(parse_config(_pair_cfg(2.0, 1.0, 3.0)))
    assert row.method == "nondegenerate"


def test_abs_error_iff_exact():
    for method in ("exact", "nondegenerate", "naive", "degenerate_pair", "oracle"):
        g2 = 1.0 if method != "degenerate_pair" else 2.0
        for r in run(parse_config(_pair_cfg(2.0, g2, 3.0, method=method))):
            assert (r.abs_error is None) == (r.exact_energy is None)


def test_sampled_wells_oracle_only():
    sampled = {"kind": "sampled", "strength": 1.0, "center": 0.0, "x": [-1.0, -0.5, 0.0, 0.5, 1.0],
               "values": [0.0, 0.5, 1.0, 0.5, 0.0]}
    cfg = _pair_cfg(method="nondegenerate")
    cfg["potentials"][0] = sampled
    with pytest.raises(ConfigInvalid):
        parse_config(cfg)
    cfg["method"] = "oracle"
    cfg["grid"] = {"x_min": -20.0, "x_max": 23.0, "n_points": 4300}
    (row,) = run(parse_config(cfg))
    assert row.energy < 0 and row.exact_energy is None


# -- output ------------------------------------------------------------------------

def test_json_byte_identical_repeat(tmp_path):
    cfg = _write(tmp_path, _pair_cfg(method="nondegenerate", order=2, sweep={"parameter": "separation", "from": 3, "to": 4, "steps": 2}))
    outs = []
    for name in ("a.json", "b.json"):
        p = tmp_path / name
        assert _cli("run", "--config", cfg, "--format", "json", "--output", str(p)).returncode == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    assert (tmp_path / "a.json.meta.json").exists()


def test_json_round_trip():
    rows = run(parse_config(_pair_cfg(1.0, 1.0, 5.0, order=2)))
    back = json.loads(dumps_rows(rows, "json"))
    assert len(back) == len(rows)
    for r, d in zip(rows, back):
        assert list(d) == list(ROW_FIELDS)
        for f in ROW_FIELDS:
            if f != "wall_time":
                assert d[f] == r.as_dict()[f]


def test_float_format():
    for x in (math.pi, -2.0000245748111021, 1e-300, 5e-324, 2.0**60, 0.1):
        s = format_float(x)
        assert float(s) == x
    assert format_float(2.0) == "2.0"
    with pytest.raises(ValueError):
        format_float(math.nan)


def test_csv_shape(tmp_path):
    out = tmp_path / "s.csv"
    args = ["sweep", "--gamma1", "1", "--gamma2", "1", "--separation", "5", "--method", "degenerate_pair",
            "--from", "4", "--to", "6", "--steps", "3", "--output", str(out)]
    assert main(args) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert tuple(rows[0]) == ROW_FIELDS
    assert len(rows) - 1 == 3 * 2
    assert json.loads(rows[1][0]) == {"gamma1": 1.0, "gamma2": 1.0, "separation": 4.0}


def test_empty_rows(tmp_path):
    assert dumps_rows([], "json") == "[]\n"
    assert dumps_rows([], "csv").strip() == ",".join(ROW_FIELDS)
    p = tmp_path / "empty.csv"
    emit([], "csv", str(p))
    assert p.read_text().strip() == ",".join(ROW_FIELDS)


def test_threads_keep_sweep_order():
    cfg = parse_config(_pair_cfg(method="exact", sweep={"parameter": "gamma2", "from": 0.5, "to": 1.5, "steps": 6}))
    serial = run(cfg, threads=1)
    parallel = run(cfg, threads=3)
    assert dumps_rows(serial, "json") == dumps_rows(parallel, "json")
    assert [r.parameters["gamma2"] for r in parallel] == sorted(r.parameters["gamma2"] for r in parallel)


def test_threads_flag_validation(capsys):
    with pytest.raises(SystemExit) as e:
        main(["exact", "--gamma1", "2", "--gamma2", "1", "--separation", "3", "--threads", "0"])
    assert e.value.code == 2


def test_report_row_fields():
    r = ReportRow({"gamma1": 1.0}, "exact", None, -0.5)
    assert tuple(r.as_dict()) == ROW_FIELDS
