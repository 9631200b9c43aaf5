import json
import shutil
import subprocess
import sys

import pytest

from reebmod.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

BROKEN_JACOBI = """\
name: broken
chart: {coords: [x, y, z]}
poisson:
  components:
    - {indices: [1, 2], coeff: "1"}
    - {indices: [1, 3], coeff: "x"}
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == EXIT_OK
    assert "pair_groupoid" in out and "twisted" in out


def test_check_jacobi_text_and_json(capsys):
    code, out, _ = run(capsys, "check-jacobi", "scaled")
    assert code == EXIT_OK and "[SymbolicPass] jacobi" in out
    code, out, _ = run(capsys, "check-jacobi", "scaled", "--format", "json")
    doc = json.loads(out)
    assert doc["ok"] and doc["checks"][0]["verdict"] == "SymbolicPass"
    assert doc["sampling"]["count"] == 100


def test_failing_check_exits_one(tmp_path, capsys):
    p = tmp_path / "broken.yaml"
    p.write_text(BROKEN_JACOBI)
    code, out, _ = run(capsys, "check-jacobi", str(p))
    assert code == EXIT_FAIL and "[Fail] jacobi" in out


def test_manifest_error_exits_two(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("name: bad\nchart: {coords: [x, y]}\npoisson: [1, 2, 3]\n")
    code, _, err = run(capsys, "suite", str(p))
    assert code == EXIT_USAGE and "poisson" in err
    code, _, err = run(capsys, "suite", "no-such-example")
    assert code == EXIT_USAGE


def test_usage_errors_exit_two(capsys):
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE
    assert run(capsys, "suite", "trivial", "--samples", "0")[0] == EXIT_USAGE
    assert run(capsys, "morita-transfer", "pair_groupoid")[0] == EXIT_USAGE


def test_modular_and_dpi(capsys):
    code, out, _ = run(capsys, "modular", "aff1", "--no-confirm")
    assert code == EXIT_OK and "modular-rescale" in out
    code, out, _ = run(capsys, "dpi", "trivial", "--random-inputs", "1")
    assert code == EXIT_OK and "dpi-squared" in out


def test_bridge_check_with_overrides(capsys):
    code, out, _ = run(
        capsys, "bridge-check", "gauge", "--normal", '["0", "0", "1"]',
        "--complement", '[["x", "0", "1"]]', "--format", "json", "--no-confirm",
    )
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["outputs"]["bridge[complement 0]"]["alpha_F"] == "0"
    code, _, _ = run(capsys, "bridge-check", "gauge", "--complement", '["x"]')
    assert code == EXIT_USAGE


def test_morita_commands(capsys):
    code, out, _ = run(capsys, "morita-check", "pair_groupoid")
    assert code == EXIT_OK and "dual-pair" in out
    code, out, _ = run(capsys, "morita-transfer", "pair_groupoid", "--xi1", '["1", "0"]', "--F", "-y + x2*y2")
    assert code == EXIT_OK and "(-x)*d/dx + (y)*d/dy" in out
    code, out, _ = run(capsys, "morita-transfer", "pair_groupoid", "--xi1", '["0", "1"]', "--F=-y")
    assert code == EXIT_FAIL


def test_random_seed_is_reported(capsys):
    code, _, err = run(capsys, "check-jacobi", "trivial", "--random-seed")
    assert code == EXIT_OK and err.startswith("seed: ")


def test_missing_sections_are_undecided_not_fail(capsys):
    code, out, _ = run(capsys, "mean-curvature", "aff1")
    assert code == EXIT_OK and "Undecided" in out


@pytest.mark.skipif(shutil.which("reebmod") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["reebmod", "check-jacobi", "trivial"], capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "reebmod.cli", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "casimir" in proc.stdout
