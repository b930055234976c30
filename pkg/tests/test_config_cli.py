import os
import subprocess
import sys

import pytest

import levymet as lm
from levymet.cli import main
from levymet.errors import ParseError

MINIMAL = """
experiment = example_2d_exact
measure.kind = atoms
measure.atoms = 0.2:3.0
"""

# deterministic variant: every check passes identically on every run
DETERMINISTIC = """
experiment = example_2d_exact
measure.kind = none
"""


def test_minimal_config_defaults():
    cfg = lm.parse_config(MINIMAL)
    assert cfg.experiment == "example_2d_exact"
    assert cfg.delta == 0.5
    assert cfg.horizon == 200.0
    assert cfg.n_paths == 100
    assert cfg.measure_atoms == ((0.2, 3.0),)
    assert cfg.effective_group_tol == pytest.approx(0.05)


def test_config_round_trip():
    cfg = lm.parse_config(MINIMAL)
    assert lm.parse_config(cfg.echo()) == cfg


def test_n_paths_must_be_positive():
    with pytest.raises(ParseError, match="n_paths must be >= 1"):
        lm.parse_config(MINIMAL + "n_paths = 0\n")


def test_duplicate_key_names_both_lines():
    text = "experiment = stable_1d\nmeasure.kind = power_law\ndelta = 0.5\ndelta = 0.4\n"
    with pytest.raises(ParseError, match=r"lines 3 and 4"):
        lm.parse_config(text)


def test_unknown_key_names_line():
    with pytest.raises(ParseError, match=r"line 2: unknown key 'bogus'"):
        lm.parse_config("experiment = stable_1d\nbogus = 1\n")


def test_bad_value_names_key_and_line():
    with pytest.raises(ParseError, match=r"line 2: bad value for 'n_paths'"):
        lm.parse_config("experiment = stable_1d\nn_paths = many\n")


def test_missing_experiment():
    with pytest.raises(ParseError, match="experiment"):
        lm.parse_config("delta = 0.5\n")


def test_comments_and_blank_lines():
    cfg = lm.parse_config("# header\n\nexperiment = doleans_1d  # inline\n")
    assert cfg.experiment == "doleans_1d"


def test_atoms_required_for_atom_kind():
    with pytest.raises(ParseError, match="measure.atoms"):
        lm.parse_config("experiment = stable_1d\nmeasure.kind = atoms\n")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_validate_and_run(tmp_path, capsys):
    cfgfile = _write(tmp_path, "c.cfg", DETERMINISTIC + (
        "horizon = 40\ndt = 0.5\nn_paths = 4\nmaster_seed = 5\n"
        f"output_dir = {tmp_path}/out\n"))
    assert main(["validate", "--config", cfgfile]) == 0
    out = capsys.readouterr().out
    assert "config OK" in out
    assert main(["run", "--config", cfgfile]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out
    for name in ("spectrum.csv", "flags.csv", "oseledets.csv", "report.txt"):
        assert os.path.exists(tmp_path / "out" / name)
    with open(tmp_path / "out" / "spectrum.csv") as fh:
        header = fh.readline().strip()
    assert header == "path_index,Lambda_1,Lambda_2,logdet_over_T"


def test_cli_exit_code_on_failing_check(tmp_path, capsys):
    cfgfile = _write(tmp_path, "f.cfg", MINIMAL + (
        "horizon = 40\ndt = 0.5\nn_paths = 4\nmaster_seed = 5\n"
        "tol.angle = 1e-30\ntol.spectrum_abs = 1e-12\n"
        f"output_dir = {tmp_path}/out_f\n"))
    assert main(["run", "--config", cfgfile]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_cli_flag_overrides(tmp_path, capsys):
    cfgfile = _write(tmp_path, "o.cfg", DETERMINISTIC + (
        "horizon = 40\ndt = 0.5\nn_paths = 2\nmaster_seed = 5\n"))
    out_dir = str(tmp_path / "ovr")
    assert main(["run", "--config", cfgfile, "--paths", "3", "--seed", "9",
                 "--output", out_dir]) == 0
    capsys.readouterr()
    with open(os.path.join(out_dir, "spectrum.csv")) as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 1 + 3


def test_cli_config_errors_exit_2(tmp_path, capsys):
    bad = _write(tmp_path, "bad.cfg", "experiment = nope\n")
    assert main(["run", "--config", bad]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    capsys.readouterr()


def test_cli_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out


def test_reproducible_outputs_across_worker_counts(tmp_path):
    cfgfile = _write(tmp_path, "r.cfg", MINIMAL + (
        "horizon = 40\ndt = 0.5\nn_paths = 6\nmaster_seed = 77\n"))
    env = dict(os.environ)
    outs = {}
    for label, threads in (("a", "1"), ("b", "3")):
        env["LEVY_MET_THREADS"] = threads
        out_dir = tmp_path / f"rep_{label}"
        proc = subprocess.run(
            [sys.executable, "-m", "levymet.cli", "run", "--config", cfgfile,
             "--output", str(out_dir)],
            env=env, capture_output=True)
        assert proc.returncode in (0, 1)  # bytes must match either way
        outs[label] = {
            name: (out_dir / name).read_bytes()
            for name in ("spectrum.csv", "flags.csv", "oseledets.csv")
        }
    assert outs["a"] == outs["b"]
