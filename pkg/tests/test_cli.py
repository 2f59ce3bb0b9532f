import csv
import io
import json

import pytest

from framequant import cli, experiments, integrals
from framequant.reports import emit_svg


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_frame_text(capsys):
    code, out, _ = run(capsys, "frame", "--d", "2", "--n", "4")
    assert code == 0
    assert out.splitlines()[0].startswith("framequant-frame v1 d=2 N=4 tight=true")
    assert len(out.splitlines()) == 5


def test_quantize_rows(capsys):
    code, out, _ = run(capsys, "quantize", "--n", "4", "--x", "1,0", "--delta", "0.25")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["quantized"]) for r in rows] == [1.0, 0.0, -1.0, 0.0]
    assert float(rows[-1]["partial_sum"]) == pytest.approx(0.0, abs=1e-15)


def test_error_reports_both_routes(capsys):
    code, out, _ = run(capsys, "error", "--n", "500", "--delta", "0.0625")
    assert code == 0
    data = json.loads(out)
    assert data["error"] == pytest.approx(data["error_via_abel"], abs=1e-12)
    assert data["sphere_limit"] > 0


def test_error_funtf(capsys):
    code, out, _ = run(capsys, "error", "--kind", "funtf", "--d", "3", "--n", "30", "--x", "1,2,3", "--delta", "0.5")
    assert code == 0
    assert json.loads(out)["d"] == 3


def test_find_rstar(capsys):
    code, out, _ = run(capsys, "find-rstar", "--delta", "1")
    assert code == 0
    lines = dict(line.split(" ", 1) for line in out.splitlines())
    assert float(lines["ratio"]) == pytest.approx(integrals.MAGIC_RATIO, abs=1e-12)
    assert float(lines["residual"]) < 1e-12


def test_integral_all_methods(capsys):
    code, out, err = run(capsys, "integral", "--r", "0.5", "--delta", "0.2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["method"] for r in rows] == ["quadrature", "closed_sum", "breakpoint_sum"]
    for r in rows:
        assert float(r["value"]) == pytest.approx(0.14695960910427958, rel=1e-12)
        assert abs(float(r["residual_vs_oracle"])) < 1e-11
    assert "skipped analytic_small" in err
    assert "max pairwise difference" in err


def test_integral_high_dimension(capsys):
    code, out, _ = run(capsys, "integral", "--r", "1", "--delta", "0.3", "--d", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    assert float(rows[0]["value"]) == pytest.approx(float(rows[1]["value"]), abs=1e-12)
    code, _, err = run(capsys, "integral", "--d", "3", "--method", "closed_sum")
    assert code == 2 and "method" in err


def test_integral_single_inapplicable_method(capsys):
    code, _, err = run(capsys, "integral", "--r", "1", "--delta", "0.3", "--method", "analytic_small")
    assert code == 2
    assert "method" in err


def test_avg_error(capsys):
    code, out, _ = run(capsys, "avg-error", "--n", "32", "--r", "0.5", "--delta", "0.2")
    assert code == 0
    data = json.loads(out)
    assert data["fourier"] == pytest.approx(data["direct"], rel=1e-6)
    assert data["direct"] >= data["lower_bound"]


def test_avg_error_sweep(capsys, tmp_path):
    code, out, _ = run(capsys, "avg-error", "--sweep", "eps_zero", "--n", "64", "--m-values", "1,2,3",
                       "--output-dir", str(tmp_path))
    assert code == 0
    assert "bound_holds_everywhere PASS" in out
    assert (tmp_path / "circle_average_eps_zero.csv").exists()


def test_wnh_sim(capsys):
    code, out, _ = run(capsys, "wnh-sim", "--n", "64", "--trials", "20000", "--seed", "3", "--threads", "2")
    assert code == 0
    data = json.loads(out)
    assert data["seed"] == 3
    code2, out2, _ = run(capsys, "wnh-sim", "--n", "64", "--trials", "20000", "--seed", "3", "--threads", "1")
    assert out2 == out


def test_discrepancy(capsys):
    code, out, _ = run(capsys, "discrepancy", "--equal", "8")
    assert code == 0
    assert json.loads(out)["disc"] == pytest.approx(1 / 8, abs=1e-15)
    code, _, err = run(capsys, "discrepancy", "--equal", "8", "--random", "5")
    assert code == 2 and "points" in err


def test_sweep_n_writes_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep-n", "--n-min", "10", "--n-max", "400", "--formats", "csv,json,svg",
                       "--output-dir", str(tmp_path))
    assert code in (0, 1)
    files = sorted(p.suffix for p in tmp_path.iterdir())
    assert files == [".csv", ".json", ".svg"]
    data = json.loads(next(tmp_path.glob("*.json")).read_text())
    assert data["metadata"]["seed"] == 0
    assert data["metadata"]["run_config"]["parameters"]["n_max"] == 400


def test_sweep_delta_sphere(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep-delta", "--scenario", "sphere", "--d", "3", "--output-dir", str(tmp_path),
                       "--formats", "json")
    assert code == 0
    slope = float(next(line for line in out.splitlines() if line.startswith("slope")).split()[1])
    assert slope == pytest.approx(2.0, abs=0.2)


def test_sweep_delta_path(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep-delta", "--delta-exponents", "3,4,5,6,7", "--output-dir", str(tmp_path))
    assert code == 0
    assert "slope_in_window PASS" in out


def test_svg_is_byte_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        argv = ("sweep-delta", "--scenario", "sphere", "--formats", "svg,json", "--output-dir", str(d))
        assert run(capsys, *argv)[0] == 0
    sa, sb = next(a.glob("*.svg")).read_bytes(), next(b.glob("*.svg")).read_bytes()
    assert sa == sb
    slope = json.loads(next(a.glob("*.json")).read_text())["fit"]["slope"]
    assert f"slope = {slope:.4f}".encode() in sa


def test_svg_needs_two_rows():
    sweep = experiments.SweepResult([(1.0, 1.0)])
    with pytest.raises(ValueError):
        emit_svg(sweep)
    two = experiments.SweepResult([(1.0, 1.0), (2.0, 4.0)])
    assert "slope" not in emit_svg(two, "loglog")


def test_unknown_subcommand_and_bad_values(capsys):
    assert run(capsys, "nope")[0] == 2
    code, _, err = run(capsys, "error", "--delta", "abc")
    assert code == 2 and "delta" in err
    code, _, err = run(capsys, "error", "--delta", "-1")
    assert code == 2 and "delta" in err
    code, _, err = run(capsys, "error", "--x", "1,2,3")
    assert code == 2 and "x" in err


def test_config_file_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ndelta = 0.5\nn = 8  # trailing\n")
    _, out, _ = run(capsys, "error", "--config", str(cfg))
    data = json.loads(out)
    assert data["delta"] == 0.5 and data["N"] == 8
    _, out, _ = run(capsys, "error", "--config", str(cfg), "--delta", "0.25")
    data = json.loads(out)
    assert data["delta"] == 0.25 and data["N"] == 8
    _, out, _ = run(capsys, "error")
    data = json.loads(out)
    assert data["delta"] == 0.1 and data["N"] == 16


def test_config_file_errors(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    code, _, err = run(capsys, "error", "--config", str(cfg))
    assert code == 2 and "bogus" in err
    cfg.write_text("no equals sign\n")
    code, _, err = run(capsys, "error", "--config", str(cfg))
    assert code == 2 and "config" in err
    code, _, err = run(capsys, "error", "--config", str(tmp_path / "missing.cfg"))
    assert code == 2


def test_bad_thread_environment(capsys, monkeypatch):
    monkeypatch.setenv("FRAMEQUANT_THREADS", "zero")
    code, _, err = run(capsys, "wnh-sim", "--trials", "10")
    assert code == 2 and "FRAMEQUANT_THREADS" in err
    monkeypatch.setenv("FRAMEQUANT_THREADS", "0")
    assert run(capsys, "wnh-sim", "--trials", "10")[0] == 2
    monkeypatch.setenv("FRAMEQUANT_THREADS", "2")
    assert run(capsys, "wnh-sim", "--trials", "10")[0] == 0


def test_verify_all_subset(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-all", "--only", "2,3", "--output-dir", str(tmp_path))
    assert code == 0
    assert "criterion  2 PASS" in out
    data = json.loads((tmp_path / "verify_all.json").read_text())
    assert "threads" not in data["config"]["parameters"]
    code, _, err = run(capsys, "verify-all", "--only", "12")
    assert code == 2 and "only" in err


def test_help_exits_zero(capsys):
    assert cli.run(["--help"]) == 0
