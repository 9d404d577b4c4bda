import csv
import io
import json
import subprocess
import sys

import pytest

from halfhardy import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_constants_kappa_zero_at_alpha_one(capsys):
    code, out, _ = run(capsys, "constants", "--d", "1", "--alpha", "1")
    assert code == cli.EXIT_OK
    (row,) = rows(out)
    assert float(row["kappa"]) == 0.0


def test_constants_best_killed_free_of_d(capsys):
    code, out, _ = run(capsys, "constants", "--d", "1,2,3", "--alpha", "0.5")
    assert code == cli.EXIT_OK
    table = rows(out)
    assert len(table) == 3
    assert len({r["best_killed"] for r in table}) == 1


def test_constants_near_two(capsys):
    code, out, _ = run(capsys, "constants", "--alpha", "1.99", "--d", "1")
    (row,) = rows(out)
    assert code == cli.EXIT_OK
    assert abs(float(row["A"]) * float(row["kappa"]) - 0.25) <= 0.01


def test_constants_default_grid(capsys):
    code, out, _ = run(capsys, "constants")
    assert code == cli.EXIT_OK
    assert len(rows(out)) == len(cli.DEFAULT_D) * len(cli.DEFAULT_CONSTANT_ALPHAS)


def test_csv_header_and_precision(capsys):
    _, out, _ = run(capsys, "constants", "--d", "2", "--alpha", "0.3")
    header, line = out.splitlines()
    assert header == "d,alpha,kappa,A,killing_coeff,best_killed,identity_residual"
    kappa_cell = line.split(",")[2]
    assert len(kappa_cell.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) >= 15


def test_json_mirrors_csv(capsys):
    _, csv_out, _ = run(capsys, "constants", "--d", "1,3", "--alpha", "0.7,1.4")
    _, json_out, _ = run(capsys, "constants", "--d", "1,3", "--alpha", "0.7,1.4", "--format", "json")
    from_json = json.loads(json_out)
    from_csv = rows(csv_out)
    assert [list(r) for r in from_json] == [list(r) for r in from_csv]
    for a, b in zip(from_json, from_csv):
        assert all(float(a[k]) == float(b[k]) for k in a)


def test_gamma_p_zero_and_symmetry(capsys):
    code, out, _ = run(capsys, "gamma", "--alpha", "1.5", "--p", "0,0.1,0.4")
    assert code == cli.EXIT_OK
    table = {float(r["p"]): r for r in rows(out)}
    assert float(table[0.0]["closed_form"]) == 0.0
    assert abs(float(table[0.0]["quadrature"])) < 1e-12
    # p and alpha - 1 - p are symmetric about (alpha - 1)/2
    assert float(table[0.1]["closed_form"]) == pytest.approx(float(table[0.4]["closed_form"]), rel=1e-13)


def test_laplacian_check_subset(capsys):
    code, out, _ = run(capsys, "laplacian-check", "--alpha", "0.7", "--p", "0.2", "--x", "0.5,1,4")
    assert code == cli.EXIT_OK
    assert [float(r["x"]) for r in rows(out)] == [0.5, 1.0, 4.0]
    assert all(float(r["rel_err"]) <= 1e-5 for r in rows(out))


def test_rayleigh_subset(capsys):
    code, out, _ = run(capsys, "rayleigh", "--alpha", "1.5", "--n", "4,16,64")
    assert code == cli.EXIT_OK
    table = rows(out)
    assert [int(r["n"]) for r in table] == [4, 16, 64]
    assert all(r["profile"] == "quintic-smoothstep-log2" for r in table)


def test_hardy_fuzz_seed_range(capsys):
    code, out, _ = run(capsys, "hardy-fuzz", "--seeds", "5:8", "--alpha", "0.3,1.7")
    assert code == cli.EXIT_OK
    table = rows(out)
    assert [(int(r["seed"]), float(r["alpha"])) for r in table] == [(s, a) for s in (5, 6, 7) for a in (0.3, 1.7)]
    assert all(r["pass"] == "true" for r in table)


def test_kernel_bound_subset(capsys):
    code, out, _ = run(capsys, "kernel-bound", "--alpha", "0.8", "--p", "0.3", "--x", "10")
    assert code == cli.EXIT_OK
    assert len(rows(out)) == 9


def test_deterministic_bytes(capsys):
    argv = ("hardy-fuzz", "--seeds", "0,1", "--alpha", "0.7")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_threaded_output_matches_serial(capsys, monkeypatch):
    argv = ("gamma", "--alpha", "0.35,1.65")
    serial = run(capsys, *argv)[1]
    monkeypatch.setenv("HALFHARDY_THREADS", "4")
    assert run(capsys, *argv)[1] == serial


def test_out_file(tmp_path, capsys):
    target = tmp_path / "c.json"
    code, out, _ = run(capsys, "constants", "--d", "1", "--alpha", "0.5", "--format", "json", "--out", str(target))
    assert code == cli.EXIT_OK and out == ""
    assert json.loads(target.read_text())[0]["d"] == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nonsense"],
        ["constants", "--alpha", "2.5"],
        ["constants", "--alpha", "abc"],
        ["constants", "--d", "0"],
        ["gamma", "--alpha", "0.5", "--p", "0.9"],
        ["rayleigh", "--n", "16,4"],
        ["gamma", "--rel-tol", "-1"],
        ["hardy-fuzz", "--count", "-3"],
        ["laplacian-check", "--x", "-1"],
    ],
)
def test_usage_errors(argv, capsys):
    code, _, _ = run(capsys, *argv)
    assert code == cli.EXIT_USAGE


def test_check_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "IDENTITY_TOL", -1.0)
    code, out, err = run(capsys, "constants", "--d", "1", "--alpha", "0.5")
    assert code == cli.EXIT_FAILED
    assert "FAIL" in err and rows(out)


def test_kernel_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "TAIL_KERNEL_CONSTANT", 0.1)
    code, _, _ = run(capsys, "kernel-bound", "--alpha", "0.8", "--x", "1")
    assert code == cli.EXIT_FAILED


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == cli.EXIT_OK


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "halfhardy.cli", "constants", "--d", "1", "--alpha", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("d,alpha,kappa")
