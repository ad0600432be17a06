"""End-to-end coverage of the command-line harness and its exit codes."""

import json
import subprocess
import sys

import pytest

import renyiopt as ro
from renyiopt import cli


def run_cli(*argv):
    return cli.main(list(argv))


def make_instance(tmp_path, kind, name="inst.json", **flags):
    path = tmp_path / name
    argv = ["random", "--kind", kind, "--out", str(path)]
    for key, value in flags.items():
        argv += [f"--{key}", str(value)]
    assert run_cli(*argv) == 0
    return path


class TestRandom:
    def test_writes_deterministic_file(self, tmp_path, capsys):
        a = make_instance(tmp_path, "density", "a.json", d=4, seed=9)
        b = make_instance(tmp_path, "density", "b.json", d=4, seed=9)
        assert a.read_bytes() == b.read_bytes()
        assert "wrote density" in capsys.readouterr().out

    def test_all_kinds_load_back(self, tmp_path):
        density = make_instance(tmp_path, "density", "d.json", d=3)
        cq = make_instance(tmp_path, "cq", "c.json", nx=3, d=2)
        bip = make_instance(tmp_path, "bipartite", "b.json", da=2, db=3)
        assert ro.load(density).dim == 3
        assert ro.load(cq).size == 3
        assert ro.load(bip).dim_b == 3

    def test_rejects_nonpositive_dimension(self, tmp_path, capsys):
        assert run_cli("random", "--kind", "density", "--d", "0", "--out", "x.json") == 2
        capsys.readouterr()


class TestSolve:
    def test_polyak_csv_trace(self, tmp_path, capsys):
        inst = make_instance(tmp_path, "cq", nx=4, d=4)
        out = tmp_path / "trace.csv"
        code = run_cli(
            "solve", "--quantity", "petz-augustin", "--alpha", "0.5",
            "--input", str(inst), "--out", str(out), "--max-iters", "50",
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "iter,f,best_f,eta,delta_t,grad_dual_norm,elapsed_ms"
        assert len(lines) >= 2
        iters = [int(line.split(",")[0]) for line in lines[1:]]
        assert iters == sorted(iters)
        assert "best value:" in capsys.readouterr().out

    def test_structured_trace_and_entropy_summary(self, tmp_path, capsys):
        inst = make_instance(tmp_path, "bipartite", da=2, db=2)
        out = tmp_path / "trace.json"
        code = run_cli(
            "solve", "--quantity", "conditional-entropy", "--alpha", "2.0",
            "--solver", "armijo", "--input", str(inst), "--out", str(out),
            "--max-iters", "30", "--trace-format", "structured",
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "trace"
        assert doc["solver"] == "armijo"
        assert doc["final"]["kind"] == "density"
        assert "conditional entropy:" in capsys.readouterr().out

    def test_usage_errors_exit_2(self, tmp_path, capsys):
        inst = make_instance(tmp_path, "bipartite", da=2, db=2)
        cq = make_instance(tmp_path, "cq", "cq.json", nx=2, d=2)
        base = ["solve", "--input", str(inst), "--out", str(tmp_path / "t.csv")]
        assert run_cli(*base, "--quantity", "conditional-entropy", "--alpha", "2.0",
                       "--solver", "fixed-point") == 2
        assert "usage error" in capsys.readouterr().err
        assert run_cli("solve", "--quantity", "petz-augustin", "--alpha", "3.0",
                       "--input", str(cq), "--out", str(tmp_path / "t.csv")) == 2
        assert run_cli("solve", "--quantity", "sandwiched-augustin", "--alpha", "1.0",
                       "--input", str(cq), "--out", str(tmp_path / "t.csv")) == 2
        capsys.readouterr()

    def test_input_errors_exit_3(self, tmp_path, capsys):
        dens = make_instance(tmp_path, "density", d=2)
        out = str(tmp_path / "t.csv")
        assert run_cli("solve", "--quantity", "petz-augustin", "--alpha", "0.5",
                       "--input", str(tmp_path / "nope.json"), "--out", out) == 3
        assert "input error" in capsys.readouterr().err
        # A bare density file is not a valid instance for an ensemble quantity.
        assert run_cli("solve", "--quantity", "petz-augustin", "--alpha", "0.5",
                       "--input", str(dens), "--out", out) == 3
        broken = tmp_path / "broken.json"
        broken.write_text("{\"kind\": ")
        assert run_cli("solve", "--quantity", "petz-augustin", "--alpha", "0.5",
                       "--input", str(broken), "--out", out) == 3
        capsys.readouterr()

    def test_fixed_point_divergence_exits_4(self, tmp_path, capsys):
        inst = make_instance(tmp_path, "cq", nx=16, d=8, seed=0)
        out = tmp_path / "trace.csv"
        code = run_cli(
            "solve", "--quantity", "sandwiched-augustin", "--alpha", "10.0",
            "--solver", "fixed-point", "--input", str(inst), "--out", str(out),
            "--max-iters", "200",
        )
        assert code == 4
        assert "diverged" in capsys.readouterr().err
        assert out.exists()

    def test_no_arguments_is_usage_error(self, capsys):
        assert run_cli() == 2
        capsys.readouterr()


class TestCompare:
    def test_default_solver_set_and_gap_table(self, tmp_path, capsys):
        inst = make_instance(tmp_path, "cq", nx=4, d=4)
        out_dir = tmp_path / "cmp"
        code = run_cli(
            "compare", "--quantity", "petz-augustin", "--alpha", "0.5",
            "--input", str(inst), "--out-dir", str(out_dir),
            "--max-iters", "120", "--ref-iters", "120",
        )
        assert code == 0
        for name in ("polyak.csv", "armijo.csv", "fixed-point.csv", "gaps.csv"):
            assert (out_dir / name).exists()
        gaps = (out_dir / "gaps.csv").read_text().strip().split("\n")
        assert gaps[0] == "iter,polyak,armijo,fixed-point"
        stdout = capsys.readouterr().out
        assert "reference value (armijo, 120 iterations):" in stdout
        assert "polyak best:" in stdout

    def test_solvers_agree_on_easy_instance(self, tmp_path, capsys):
        inst = make_instance(tmp_path, "cq", nx=4, d=4, seed=3)
        out_dir = tmp_path / "cmp"
        code = run_cli(
            "compare", "--quantity", "petz-augustin", "--alpha", "0.5",
            "--input", str(inst), "--out-dir", str(out_dir),
            "--max-iters", "300", "--ref-iters", "300",
        )
        assert code == 0
        capsys.readouterr()
        bests = {}
        for name in ("polyak", "armijo", "fixed-point"):
            rows = (out_dir / f"{name}.csv").read_text().strip().split("\n")[1:]
            bests[name] = min(float(r.split(",")[2]) for r in rows)
        spread = max(bests.values()) - min(bests.values())
        assert spread <= 1e-4


class TestBenchDim:
    def test_table_output(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = run_cli(
            "bench-dim", "--quantity", "petz-augustin", "--alpha", "0.5",
            "--dims", "2", "4", "--seeds", "1", "--nx", "3",
            "--max-iters", "200", "--ref-iters", "200", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "dim,median_iters,median_elapsed_ms"
        assert len(lines) == 3
        assert lines[1].startswith("2,") and lines[2].startswith("4,")
        assert "dim 2: median iterations" in capsys.readouterr().out


class TestGradcheck:
    def test_passes_on_healthy_gradients(self, capsys):
        code = run_cli("gradcheck", "--quantity", "petz-augustin", "--dims", "2",
                       "--seeds", "1", "--nx", "2")
        assert code == 0
        stdout = capsys.readouterr().out
        assert "gradcheck: PASS" in stdout
        assert "rel err" in stdout

    def test_corrupted_gradients_fail(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.CORRUPT_GRAD_ENV, "1")
        code = run_cli("gradcheck", "--quantity", "petz-augustin", "--dims", "2",
                       "--seeds", "1", "--nx", "2")
        assert code == 4
        assert "gradcheck: FAIL" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    out = tmp_path / "inst.json"
    proc = subprocess.run(
        [sys.executable, "-m", "renyiopt.cli", "random", "--kind", "density",
         "--d", "2", "--out", str(out)],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert out.exists()
    assert "wrote density" in proc.stdout
