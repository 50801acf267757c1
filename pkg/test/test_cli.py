import json
import os
import subprocess
import sys
from pathlib import Path

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(PROJECT_ROOT)


def run_cli(*args: str) -> subprocess.CompletedProcess:
    cmd = [sys.executable, "-m", "rodeo_schedules", *args]
    return subprocess.run(cmd, capture_output=True, text=True, cwd=PROJECT_ROOT)


def test_cli_help():
    cp = run_cli("--help")
    assert cp.returncode == 0, cp.stderr
    assert "rodeo algorithm schedules" in cp.stdout


def test_root_entry_script_help():
    cp = subprocess.run([sys.executable, "rodeo_app.py", "--help"], capture_output=True, text=True, cwd=PROJECT_ROOT)
    assert cp.returncode == 0, cp.stderr


def test_wam_invalid_cycles():
    cp = run_cli("wam", "--cycles", "0")
    assert cp.returncode == 2


def test_wam_csv(tmp_path: Path):
    out = tmp_path / "wam.csv"
    cp = run_cli("wam", "--cycles", "2", "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "n,Q,total_time,t1,t2"
    assert len(lines) == 3
    assert "\r" not in out.read_text()


def test_wam_json(tmp_path: Path):
    out = tmp_path / "wam.json"
    cp = run_cli("wam", "--cycles", "3", "--format", "json", "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    rows = json.loads(out.read_text())
    assert len(rows) == 3
    assert abs(rows[2]["Q"] - 2.421e-5) <= 0.05 * 2.421e-5
    assert rows[2]["rra_ratio"] > 1.0


def test_wam_config_file(tmp_path: Path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"cycles": 2}))
    out = tmp_path / "wam.csv"
    cp = run_cli("wam", "--config", str(config), "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    assert len(out.read_text().splitlines()) == 3

    # explicit flags override the file
    cp = run_cli("wam", "--config", str(config), "--cycles", "1", "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    assert len(out.read_text().splitlines()) == 2


def test_rra_separatrix():
    cp = run_cli("rra", "--separatrix")
    assert cp.returncode == 0, cp.stderr
    lines = cp.stdout.splitlines()
    assert lines[0] == "statistic,alpha,beta"
    statistic, alpha, beta = lines[1].split(",")
    assert statistic == "arithmetic"
    assert abs(float(alpha) - 4.271) <= 1e-3
    assert abs(float(beta) - 2.244) <= 1e-3


def test_rra_closed_form_grid(tmp_path: Path):
    out = tmp_path / "rra.csv"
    cp = run_cli("rra", "--zeta", "0:1:0.5", "--n", "6", "--trials", "0", "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "zeta,n,mean,geomean,rms,sigma_over_mean,median,stderr_mean"
    assert len(lines) == 4
    # closed-form rows leave the sampled columns empty
    assert all(line.endswith(",,") for line in lines[1:])


def test_rra_monte_carlo_is_reproducible(tmp_path: Path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    for out in (first, second):
        cp = run_cli("rra", "--zeta", "1", "--n", "3", "--trials", "2000", "--seed", "7", "--out", str(out))
        assert cp.returncode == 0, cp.stderr
    assert first.read_bytes() == second.read_bytes()
    header, row = first.read_text().splitlines()
    assert header.startswith("zeta,n,mean,geomean,rms,sigma_over_mean,median,stderr_mean,mc_mean")
    assert "" not in row.split(",")


def test_rra_bad_grid():
    cp = run_cli("rra", "--zeta", "1:0:0.1")
    assert cp.returncode == 2


def test_super_emission():
    cp = run_cli("super", "--x-max", "2")
    assert cp.returncode == 0, cp.stderr
    lines = cp.stdout.splitlines()
    assert lines[0] == "x,super,rra_mean_n3,ratio"
    assert len(lines) == 102


def test_super_emax():
    cp = run_cli("super", "--emax", "15")
    assert cp.returncode == 0, cp.stderr
    report = json.loads(cp.stdout)
    assert 40308.0 <= report["max_valid_energy"] <= 40309.0


def test_bound_partial_information():
    cp = run_cli("bound", "--f", "0.99", "--x0", "3")
    assert cp.returncode == 0, cp.stderr
    report = json.loads(cp.stdout)
    assert abs(report["bound"] - 5.591e-7) <= 0.02 * 5.591e-7
    assert report["schedule_id"] == "wam-n3"


def test_bound_table_scan(tmp_path: Path):
    spectrum = tmp_path / "spectrum.csv"
    spectrum.write_text("# ground_weight=0.5\nenergy_ratio,weight\n3.0,0.5\n")
    cp = run_cli("bound", "--cycles", "3", "--spectrum", str(spectrum), "--threshold", "1e-6")
    assert cp.returncode == 0, cp.stderr
    report = json.loads(cp.stdout)
    assert report["found"] is True
    assert report["n"] <= 3


def test_simulate():
    cp = run_cli("simulate", "--trials", "20000", "--seed", "4")
    assert cp.returncode == 0, cp.stderr
    header, row = cp.stdout.splitlines()
    assert header == "trials,success_rate,stderr,closed_form,z_score"
    assert abs(float(row.split(",")[-1])) <= 4.0


def test_verify_subset():
    cp = run_cli("verify", "--only", "super")
    assert cp.returncode == 0, cp.stdout + cp.stderr
    assert "[PASS] super.first_side_peak" in cp.stdout


def test_verify_all_groups():
    cp = run_cli("verify")
    assert cp.returncode == 0, cp.stdout + cp.stderr
    assert "[FAIL]" not in cp.stdout
    for group in ("qsim", "super", "rra", "wam", "bounds"):
        assert f"[PASS] {group}." in cp.stdout


def test_wam_cycles_eight_from_defaults(tmp_path: Path):
    out = tmp_path / "wam.csv"
    cp = run_cli("wam", "--cycles", "8", "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "n,Q,total_time," + ",".join(f"t{k}" for k in range(1, 9))
    assert len(lines) == 9


def test_float_format_from_run_file(tmp_path: Path):
    config = tmp_path / "run.yml"
    config.write_text("float_format: \"%.3g\"\n")
    cp = run_cli("rra", "--zeta", "0.5", "--n", "2", "--config", str(config))
    assert cp.returncode == 0, cp.stderr
    row = cp.stdout.splitlines()[1].split(",")
    assert all(len(v) <= 9 for v in row if v)


def test_verify_corrupted_golden(tmp_path: Path):
    with open(os.path.join(PROJECT_ROOT, "config", "golden", "table2.json")) as f:
        golden = json.load(f)
    golden["rows"][0]["Q"] = 0.5
    corrupted = tmp_path / "golden.json"
    corrupted.write_text(json.dumps(golden))
    cp = run_cli("verify", "--only", "wam", "--golden", str(corrupted))
    assert cp.returncode == 1
    assert "[FAIL] wam.row_1" in cp.stdout
