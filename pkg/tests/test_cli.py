import csv
import json
import math
import subprocess
import sys

import pytest

from fracburgers.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main
from fracburgers.expressions import evaluate
from fracburgers.parsing import parse


def run_cli(tmp_path, *extra, fmt="csv"):
    out = tmp_path / "out"
    argv = [
        "--output", str(out),
        "--format", fmt,
        *extra,
    ]
    code = main(argv)
    return code, out


def read_surface_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "t", "u"]
    data = [(float(x), float(t), float(u)) for x, t, u in rows[1:]]
    return data


class TestVimMode:
    def test_surface_schema_and_initial_slice(self, tmp_path):
        code, out = run_cli(
            tmp_path,
            "--mode", "vim", "--alpha", "0.2", "--A", "-1", "--p", "1",
            "--g", "sin(pi*x)", "--iters", "2",
            "--x-min", "0", "--x-max", "1", "--nx", "21", "--t-max", "1", "--nt", "11",
        )
        assert code == EXIT_OK
        data = read_surface_csv(out / "surface.csv")
        assert len(data) == 21 * 11
        # t-major ordering: the first nx rows all have t = 0
        first = data[:21]
        assert all(t == 0.0 for _, t, _ in first)
        assert all(math.isfinite(u) for _, _, u in data)
        g = parse("sin(pi*x)")
        for x, _, u in first:
            assert u == pytest.approx(evaluate(g, x), abs=1e-11)

    def test_json_schema(self, tmp_path):
        code, out = run_cli(
            tmp_path,
            "--mode", "vim", "--alpha", "1.0", "--g", "sin(pi*x)",
            "--nx", "5", "--nt", "4", "--t-max", "0.1",
            fmt="json",
        )
        assert code == EXIT_OK
        payload = json.loads((out / "surface.json").read_text())
        assert set(payload) == {"x", "t", "u"}
        assert len(payload["x"]) == 5
        assert len(payload["t"]) == 4
        # u is indexed [t][x]
        assert len(payload["u"]) == 4
        assert len(payload["u"][0]) == 5
        assert payload["u"][0][2] == pytest.approx(math.sin(math.pi * payload["x"][2]), abs=1e-11)

    def test_manifest_records_choices(self, tmp_path):
        code, out = run_cli(
            tmp_path,
            "--mode", "vim", "--alpha", "1.2", "--g", "sin(pi*x)", "--h", "0",
            "--nx", "5", "--nt", "4", "--seed", "7",
        )
        assert code == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["regime"] == 2
        assert manifest["term_cap"] == 10000
        assert "(t-tau)" in manifest["multiplier_branch"]
        assert manifest["initial_iterate"] == "g + t*h"
        assert manifest["config"]["alpha"] == 1.2
        assert manifest["outputs"] == ["surface.csv"]

    def test_determinism_byte_identical(self, tmp_path):
        args = (
            "--mode", "vim", "--alpha", "0.7", "--g", "exp(x)/(1+exp(x))",
            "--iters", "2", "--nx", "9", "--nt", "5", "--t-max", "0.5",
        )
        _, out1 = run_cli(tmp_path / "a", *args)
        _, out2 = run_cli(tmp_path / "b", *args)
        for name in ("surface.csv",):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        m1 = json.loads((out1 / "manifest.json").read_text())
        m2 = json.loads((out2 / "manifest.json").read_text())
        m1["config"].pop("output"), m2["config"].pop("output")
        assert m1 == m2


class TestIteratesMode:
    def test_monomial_listing(self, tmp_path):
        code, out = run_cli(
            tmp_path,
            "--mode", "iterates", "--alpha", "0.7", "--g", "x",
            "--A", "-1", "--p", "1", "--iters", "1",
            fmt="json",
        )
        assert code == EXIT_OK
        rows = json.loads((out / "iterates.json").read_text())["iterates"]
        last = [r for r in rows if r["iterate"] == 1 and r["j"] == 1]
        assert len(last) == 1
        coeff = parse(last[0]["coefficient"])
        # g = x gives g g' - g'' = x, so the correction is -x/Gamma(1.7)
        from fracburgers.fractional import gamma

        assert evaluate(coeff, 2.0) == pytest.approx(-2.0 / gamma(1.7), rel=1e-12)

    def test_csv_listing_round_trips(self, tmp_path):
        code, out = run_cli(
            tmp_path,
            "--mode", "iterates", "--alpha", "0.5", "--g", "sin(pi*x)", "--iters", "2",
        )
        assert code == EXIT_OK
        with open(out / "iterates.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["iterate"] for r in rows} == {"0", "1", "2"}
        for r in rows:
            parse(r["coefficient"])  # every printed coefficient reparses


class TestOracleAndCompare:
    def test_oracle_writes_field(self, tmp_path):
        code, out = run_cli(
            tmp_path,
            "--mode", "oracle", "--alpha", "0.9", "--g", "sin(pi*x)",
            "--nx", "11", "--t-max", "0.002", "--nt", "101",
        )
        assert code == EXIT_OK
        data = read_surface_csv(out / "field.csv")
        assert len(data) == 11 * 101
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["boundary"] == "dirichlet"
        assert 0 < manifest["stability_margin"] <= 1.0

    def test_compare_writes_report(self, tmp_path):
        code, out = run_cli(
            tmp_path,
            "--mode", "compare", "--alpha", "0.9", "--g", "sin(pi*x)", "--iters", "2",
            "--nx", "11", "--t-max", "0.002", "--nt", "101",
        )
        assert code == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["max_error"] < 0.05
        assert report["notes"]["boundary"] == "dirichlet"
        assert (out / "surface.csv").exists()
        assert (out / "field.csv").exists()


class TestErrorPaths:
    def test_bad_alpha_is_config_error(self, tmp_path):
        code, _ = run_cli(tmp_path, "--mode", "vim", "--alpha", "9", "--g", "x")
        assert code == EXIT_CONFIG

    def test_bad_expression_is_config_error(self, tmp_path):
        code, _ = run_cli(tmp_path, "--mode", "vim", "--alpha", "0.5", "--g", "sin(")
        assert code == EXIT_CONFIG

    def test_iters_cap(self, tmp_path):
        code, _ = run_cli(
            tmp_path, "--mode", "vim", "--alpha", "0.5", "--g", "x", "--iters", "7"
        )
        assert code == EXIT_CONFIG

    def test_oracle_needs_diffusion_regime(self, tmp_path):
        code, _ = run_cli(
            tmp_path, "--mode", "oracle", "--alpha", "1.5", "--g", "x", "--h", "0"
        )
        assert code == EXIT_CONFIG

    def test_unstable_grid_is_solver_error(self, tmp_path):
        code, _ = run_cli(
            tmp_path,
            "--mode", "oracle", "--alpha", "0.5", "--g", "sin(pi*x)",
            "--nx", "41", "--t-max", "0.05", "--nt", "2001",
        )
        assert code == EXIT_SOLVER

    def test_unknown_flag_exits_two(self, tmp_path):
        assert main(["--mode", "vim", "--alpha", "0.5", "--wat", "1"]) == EXIT_CONFIG

    def test_io_error(self, tmp_path):
        target = tmp_path / "blocked"
        target.write_text("a plain file where a directory must go")
        code = main(
            ["--mode", "vim", "--alpha", "0.5", "--g", "x", "--output", str(target)]
        )
        assert code == 4


def test_env_var_overrides_output(tmp_path, monkeypatch):
    env_dir = tmp_path / "env-out"
    monkeypatch.setenv("FRACBURGERS_OUTDIR", str(env_dir))
    code = main(
        [
            "--mode", "vim", "--alpha", "0.5", "--g", "x",
            "--nx", "5", "--nt", "3", "--output", str(tmp_path / "flag-out"),
        ]
    )
    assert code == EXIT_OK
    assert (env_dir / "surface.csv").exists()
    assert not (tmp_path / "flag-out").exists()


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fracburgers", "--mode", "vim", "--alpha", "9", "--g", "x"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_CONFIG
    assert proc.stderr.startswith("error: config:")
