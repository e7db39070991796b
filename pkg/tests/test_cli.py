import json

import numpy as np

from dlnflow import cli, pair_from_json, synthesize_scatter
from dlnflow.harness import VerificationReport, CheckResult


TINY = {"dim": 2, "depths": [2], "eta": 1e-3, "epochs": 60, "seed": 5, "record_every": 20}


def write_config(tmp_path, **extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**TINY, "output_dir": str(tmp_path / "out"), **extra}))
    return path


def test_synth_prints_pair_json(capsys):
    code = cli.main(["synth", "--dim", "3", "--seed", "11", "--spread", "0.4,0.6"])
    assert code == 0
    pair, seed, spread = pair_from_json(capsys.readouterr().out)
    assert seed == 11 and spread == (0.4, 0.6)
    expect = synthesize_scatter(3, 11, (0.4, 0.6))
    assert np.array_equal(pair.s_w, expect.s_w)


def test_synth_invalid_arguments_exit_2():
    assert cli.main(["synth", "--dim", "0", "--seed", "1"]) == 2
    assert cli.main(["synth", "--dim", "2", "--seed", "1", "--spread", "0.6,0.4"]) == 2
    assert cli.main(["synth", "--dim", "2", "--seed", "1", "--spread", "nonsense"]) == 2


def test_run_executes_config(tmp_path, capsys):
    path = write_config(tmp_path)
    assert cli.main(["run", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "L=2" in out
    assert (tmp_path / "out" / "L2.csv").exists()
    assert (tmp_path / "out" / "artifact.json").exists()


def test_run_flag_overrides_config(tmp_path):
    path = write_config(tmp_path)
    override_dir = tmp_path / "elsewhere"
    code = cli.main([
        "run", "--config", str(path),
        "--epochs", "40", "--output_dir", str(override_dir), "--depths", "1,2",
    ])
    assert code == 0
    doc = json.loads((override_dir / "artifact.json").read_text())
    assert doc["config"]["epochs"] == 40
    assert doc["config"]["depths"] == [1, 2]
    assert (override_dir / "L1.csv").exists()


def test_run_byte_identical_across_executions(tmp_path):
    path = write_config(tmp_path)
    assert cli.main(["run", "--config", str(path), "--output_dir", str(tmp_path / "r1")]) == 0
    assert cli.main(["run", "--config", str(path), "--output_dir", str(tmp_path / "r2")]) == 0
    assert (tmp_path / "r1" / "L2.csv").read_bytes() == (tmp_path / "r2" / "L2.csv").read_bytes()


def test_run_missing_config_exit_3(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.json")]) == 3


def test_run_invalid_config_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**TINY, "eta": -1.0}))
    assert cli.main(["run", "--config", str(path)]) == 2
    path.write_text("{broken")
    assert cli.main(["run", "--config", str(path)]) == 2


def test_run_unwritable_output_exit_3(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    path = write_config(tmp_path, output_dir=str(blocker / "out"))
    assert cli.main(["run", "--config", str(path)]) == 3


def test_verify_passes_exit_0(capsys):
    assert cli.main(["verify", "--scope", "objective", "--trials", "5", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "objective.orthogonality" in out
    assert "[PASS]" in out


def test_verify_bad_scope_exit_2(capsys):
    assert cli.main(["verify", "--scope", "everything", "--trials", "5"]) == 2


def test_verify_failure_exit_1(monkeypatch, capsys):
    failing = VerificationReport(
        scope="objective", trials=1, seed=0,
        checks=(CheckResult(name="objective.orthogonality", tolerance="<= 1e-10",
                            worst=1.0, passed=False),),
    )
    monkeypatch.setattr(cli.harness, "verify_suite", lambda *a, **k: failing)
    assert cli.main(["verify", "--scope", "objective", "--trials", "1"]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_no_subcommand_exit_2():
    assert cli.main([]) == 2
