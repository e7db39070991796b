import json
import time

import numpy as np
import pytest

from dlnflow import (
    ExperimentConfig,
    TrajectorySnapshot,
    emit_table,
    generalized_eig_min,
    load_config,
    parse_table,
    run_experiment,
    synthesize_scatter,
    verify_suite,
)
from dlnflow.harness import ConfigError


def snap(t, w, **kw):
    defaults = dict(loss=1.25, quasi_norm=2.0, balance_residual=0.0, grad_norm=0.5)
    defaults.update(kw)
    return TrajectorySnapshot(t=t, w=np.asarray(w, dtype=float), **defaults)


TINY_CONFIG = dict(dim=2, depths=[2], eta=1e-3, epochs=100, seed=99, record_every=10)


# --- config -----------------------------------------------------------------


def test_config_defaults_and_coercion():
    cfg = ExperimentConfig(**TINY_CONFIG)
    assert cfg.spread == (0.4, 0.6)
    assert cfg.init_magnitudes == "ones"
    assert cfg.format == "csv"
    assert np.array_equal(cfg.initial_weights(), np.ones(2))


def test_config_explicit_magnitudes():
    cfg = ExperimentConfig(**{**TINY_CONFIG, "init_magnitudes": [0.5, 2.0]})
    assert np.array_equal(cfg.initial_weights(), [0.5, 2.0])


@pytest.mark.parametrize(
    "patch",
    [
        {"dim": 0},
        {"depths": []},
        {"depths": [2, 0]},
        {"eta": 0.0},
        {"epochs": 0},
        {"seed": -1},
        {"spread": (0.0, 0.6)},
        {"spread": (0.6, 0.4)},
        {"record_every": 0},
        {"format": "parquet"},
        {"init_magnitudes": [1.0]},
        {"init_magnitudes": [1.0, -1.0]},
    ],
)
def test_config_rejects_bad_values(patch):
    with pytest.raises(ConfigError):
        ExperimentConfig(**{**TINY_CONFIG, **patch})


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**TINY_CONFIG, "output_dir": str(tmp_path / "out")}))
    cfg = load_config(path)
    assert cfg.dim == 2 and cfg.depths == (2,) and cfg.seed == 99


def test_load_config_rejects_missing_and_unknown_fields(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dim": 2}))
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text(json.dumps({**TINY_CONFIG, "learning_rate": 1e-3}))
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("not json {")
    with pytest.raises(ConfigError):
        load_config(path)


# --- tables -----------------------------------------------------------------


def test_emit_csv_single_snapshot_shape():
    data = emit_table([snap(0.0, [1.0, 2.0])], 2, "csv")
    lines = data.decode().splitlines()
    assert len(lines) == 2
    assert lines[0] == "t,loss,grad_norm,quasi_norm,balance_residual,w_1,w_2"
    assert len(lines[1].split(",")) == 7
    assert data.endswith(b"\n")


def test_emit_rejects_empty_and_bad_format():
    with pytest.raises(ValueError):
        emit_table([], 2, "csv")
    with pytest.raises(ValueError):
        emit_table([snap(0.0, [1.0, 2.0])], 2, "yaml")
    with pytest.raises(ValueError):
        emit_table([snap(0.0, [1.0, 2.0])], 3, "csv")


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_table_round_trip_bit_identical(fmt, rng):
    snaps = [
        snap(float(k), rng.uniform(0.1, 3.0, size=4),
             loss=float(rng.uniform(0.1, 2.0)),
             quasi_norm=float(rng.uniform(0.1, 5.0)),
             balance_residual=float(rng.uniform(0, 1e-9)),
             grad_norm=float(rng.uniform(0, 2.0)))
        for k in range(7)
    ]
    data = emit_table(snaps, 4, fmt)
    parsed = parse_table(data, fmt)
    assert len(parsed) == len(snaps)
    for a, b in zip(snaps, parsed):
        assert a.t == b.t and a.loss == b.loss and a.grad_norm == b.grad_norm
        assert a.quasi_norm == b.quasi_norm and a.balance_residual == b.balance_residual
        assert np.array_equal(a.w, b.w)
    assert emit_table(parsed, 4, fmt) == data


# --- experiment runner ------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    cfg = ExperimentConfig(**TINY_CONFIG, output_dir=str(out))
    return cfg, run_experiment(cfg), out


def test_run_writes_tables_and_artifact(tiny_run):
    cfg, artifact, out = tiny_run
    assert (out / "L2.csv").exists()
    assert (out / "artifact.json").exists()
    assert len(artifact.depths) == 1
    rec = artifact.depths[0]
    assert rec.rows == 100 // 10 + 1
    assert rec.final_epoch == 100


def test_run_table_round_trips_to_identical_values(tiny_run):
    cfg, artifact, out = tiny_run
    rec = artifact.depths[0]
    parsed = parse_table((out / "L2.csv").read_bytes(), "csv")
    assert len(parsed) == rec.rows
    assert parsed[-1].loss == rec.final_loss
    assert parsed[0].loss == rec.initial_loss


def test_run_loss_decreases_and_respects_lower_bound(tiny_run):
    cfg, artifact, out = tiny_run
    rec = artifact.depths[0]
    assert rec.final_loss <= rec.initial_loss
    pair = synthesize_scatter(cfg.dim, cfg.seed, cfg.spread)
    lam = generalized_eig_min(pair).lambda_min
    assert artifact.lambda_min == lam
    assert rec.final_loss >= lam - 1e-10
    assert rec.final_loss_gap == rec.final_loss - lam


def test_artifact_json_document(tiny_run):
    cfg, artifact, out = tiny_run
    doc = json.loads((out / "artifact.json").read_text())
    assert doc["config"]["dim"] == 2
    assert doc["scatter"]["seed"] == 99
    assert doc["oracle"]["lambda_min"] == artifact.lambda_min
    assert doc["depths"][0]["conservation"]["max_relative_drift"] >= 0.0
    assert doc["depths"][0]["termination"] is None


def test_stationary_experiment_conserves_exactly(tmp_path):
    # a degenerate spread makes both scatter matrices identical, the loss
    # constant, and the trajectory a fixed point
    cfg = ExperimentConfig(dim=2, depths=[1], eta=1e-3, epochs=50, seed=0,
                           spread=(1.0, 1.0), record_every=10, output_dir=str(tmp_path))
    artifact = run_experiment(cfg)
    rec = artifact.depths[0]
    assert rec.conservation.max_relative_drift == 0.0
    assert rec.final_loss == rec.initial_loss == 1.0


def test_json_format_experiment(tmp_path):
    cfg = ExperimentConfig(**TINY_CONFIG, output_dir=str(tmp_path), format="json")
    artifact = run_experiment(cfg)
    parsed = parse_table((tmp_path / "L2.json").read_bytes(), "json")
    assert len(parsed) == artifact.depths[0].rows


def test_experiment_deterministic(tmp_path):
    cfg_a = ExperimentConfig(**TINY_CONFIG, output_dir=str(tmp_path / "a"))
    cfg_b = ExperimentConfig(**TINY_CONFIG, output_dir=str(tmp_path / "b"))
    run_experiment(cfg_a)
    run_experiment(cfg_b)
    assert (tmp_path / "a" / "L2.csv").read_bytes() == (tmp_path / "b" / "L2.csv").read_bytes()


def test_breach_recorded_but_remaining_depths_run(tmp_path):
    # depth 1 heads for a mixed-sign minimizer and crosses; depth 2 finishes
    cfg = ExperimentConfig(dim=5, depths=[1, 2], eta=0.5, epochs=500, seed=8086,
                           record_every=10, output_dir=str(tmp_path))
    artifact = run_experiment(cfg)
    rec1, rec2 = artifact.depths
    assert rec1.termination_reason == "positivity-breach"
    assert rec1.termination_epoch is not None
    assert rec2.termination_reason is None
    assert rec2.final_epoch == 500
    assert (tmp_path / "L1.csv").exists() and (tmp_path / "L2.csv").exists()


# --- verification suite -----------------------------------------------------


def test_verify_objective_scope_passes():
    report = verify_suite("objective", 100, 7)
    assert report.passed
    names = [c.name for c in report.checks]
    assert "objective.orthogonality" in names
    assert all(c.worst >= 0.0 for c in report.checks)


def test_verify_network_scope_passes():
    report = verify_suite("network", 40, 11)
    assert report.passed


def test_verify_rejects_bad_arguments():
    with pytest.raises(ConfigError):
        verify_suite("everything", 10, 0)
    with pytest.raises(ConfigError):
        verify_suite("objective", 0, 0)
    with pytest.raises(ConfigError):
        verify_suite("objective", 10, -3)


def test_verify_all_smoke_under_a_minute():
    start = time.perf_counter()
    report = verify_suite("all", 1, 515)
    elapsed = time.perf_counter() - start
    for line in report.lines():
        print(line)
    assert report.passed, report.lines()
    assert elapsed < 60.0
    scopes = {c.name.split(".")[0] for c in report.checks}
    assert scopes == {"objective", "network", "dynamics"}
