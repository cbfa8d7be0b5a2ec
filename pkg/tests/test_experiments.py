import json

import pytest

from mtrl.cli import main
from mtrl.evaluation import CSV_COLUMNS
from mtrl.experiments import (ConfigError, ExperimentConfig, emit_summary, load_run_curves,
                              run_experiment, sha256_file, worker_count)

TINY_FQI = {"kind": "mfqi_compare", "tasks": [1, 2], "seeds": [0, 1],
            "fqi": {"iterations": 2, "fit_epochs": 2, "minibatch": 50},
            "dataset_size": 100, "n_probes": 5, "oracle_resolution": 40}
TINY_DQN = {"epochs": 2, "steps_per_epoch": 40, "eval_steps": 40, "batch_per_task": 8, "capacity": 200,
            "warmup": 8, "target_update": 10, "eps_decay_steps": 50,
            "widths": {"input": [8], "shared": [8]}}
TINY_DDPG = {"epochs": 1, "steps_per_epoch": 30, "eval_steps": 30, "batch_per_task": 8, "capacity": 100,
             "warmup": 8, "actor_widths": {"input": [8], "shared": [8]},
             "critic_widths": {"input": [8], "shared": [8]}}


def write_cfg(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


def test_config_errors_name_the_field():
    cases = [({"kind": "nope"}, "kind"), ({"kind": "mfqi_compare", "colour": 1}, "colour"),
             ({"kind": "mfqi_compare", "seeds": []}, "seeds"),
             ({"kind": "mfqi_compare", "seeds": [1, 1]}, "seeds"),
             ({"kind": "mfqi_compare", "suite": "mdqn_9"}, "suite"),
             ({"kind": "mfqi_compare", "fqi": {"bogus": 2}}, "fqi"),
             ({"kind": "mdqn_compare", "dqn": {"batch_per_task": 10, "capacity": 5}}, "dqn"),
             ({"kind": "mdqn_transfer"}, "target_task"),
             ({"kind": "mdqn_transfer", "target_task": 2, "modes": ["sideways"]}, "modes"),
             ({"kind": "mfqi_task_scaling", "task_subsets": {"2": [1]}}, "task_subsets"),
             ({"kind": "bounds_eval"}, "bounds"),
             ({"kind": "mfqi_compare", "schema_version": 9}, "schema_version"),
             ({"seeds": [0]}, "kind")]
    for d, fld in cases:
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_dict(d)
        assert str(exc.value).startswith(fld), (d, str(exc.value))


def test_config_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(bad)


def test_config_hash_ignores_seeds_and_output(tmp_path):
    a = ExperimentConfig.from_dict(TINY_FQI)
    b = ExperimentConfig.from_dict({**TINY_FQI, "seeds": [5, 6, 7], "output_dir": "elsewhere"})
    c = ExperimentConfig.from_dict({**TINY_FQI, "dataset_size": 101})
    assert a.config_hash() == b.config_hash() != c.config_hash()
    # explicit defaults hash like omitted ones
    d = ExperimentConfig.from_dict({**TINY_FQI, "fqi": {**TINY_FQI["fqi"], "lr": 1e-3}})
    assert d.config_hash() == a.config_hash()
    a.dump(tmp_path / "c.json")
    assert ExperimentConfig.load(tmp_path / "c.json").config_hash() == a.config_hash()


def test_tiny_fqi_run_is_deterministic_and_resumable(tmp_path):
    cfg = ExperimentConfig.from_dict(TINY_FQI)
    m1 = run_experiment(cfg, tmp_path / "a")
    m2 = run_experiment(cfg, tmp_path / "b")
    for name in ("seed_0/curves.csv", "seed_1/qerror.csv", "seed_1/snapshots/mfqi.npz"):
        assert m1["files"][name] == m2["files"][name]
    header = (tmp_path / "a/seed_0/curves.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    algs = {c.algorithm for c in load_run_curves(tmp_path / "a", "qerror.csv")}
    assert algs == {"mfqi", "fqi"}
    # resume: finished seeds are untouched, a removed seed is recomputed identically
    before = (tmp_path / "a/seed_0/curves.csv").stat().st_mtime_ns
    (tmp_path / "a/seed_1/done.json").unlink()
    m3 = run_experiment(cfg, tmp_path / "a")
    assert (tmp_path / "a/seed_0/curves.csv").stat().st_mtime_ns == before
    assert m3["files"]["seed_1/curves.csv"] == m1["files"]["seed_1/curves.csv"]
    assert m3["files"]["seed_1/curves.csv"] == sha256_file(tmp_path / "a/seed_1/curves.csv")
    rows = emit_summary(tmp_path / "a")
    assert (tmp_path / "a/summary.csv").exists() and (tmp_path / "a/summary.json").exists()
    assert all(r["n_runs"] == 2 for r in rows)


def test_summary_rejects_mixed_hashes(tmp_path):
    run_experiment(ExperimentConfig.from_dict({**TINY_FQI, "seeds": [0]}), tmp_path)
    run_experiment(ExperimentConfig.from_dict({**TINY_FQI, "seeds": [1], "dataset_size": 90}), tmp_path)
    with pytest.raises(ValueError, match="mixed"):
        emit_summary(tmp_path)


def test_task_scaling_arms(tmp_path):
    cfg = ExperimentConfig.from_dict({**TINY_FQI, "kind": "mfqi_task_scaling", "tasks": None, "seeds": [0],
                                      "task_subsets": {"1": [1], "2": [1, 2]}})
    run_experiment(cfg, tmp_path)
    algs = {c.algorithm: c.tasks for c in load_run_curves(tmp_path, "qerror.csv")}
    assert algs == {"mfqi_T1": ["car_on_hill_1"], "mfqi_T2": ["car_on_hill_1", "car_on_hill_2"]}


def test_online_runs_and_transfer(tmp_path):
    cfg = ExperimentConfig.from_dict({"kind": "mdqn_compare", "tasks": [1, 2], "seeds": [0], "dqn": TINY_DQN})
    run_experiment(cfg, tmp_path / "dqn")
    assert {c.algorithm for c in load_run_curves(tmp_path / "dqn")} == {"mdqn", "dqn"}
    tcfg = ExperimentConfig.from_dict({"kind": "mdqn_transfer", "tasks": [1, 2], "target_task": 2,
                                       "seeds": [0], "dqn": TINY_DQN})
    run_experiment(tcfg, tmp_path / "tr")
    algs = {c.algorithm for c in load_run_curves(tmp_path / "tr")}
    assert algs == {"pretrain", "transfer:scratch", "transfer:unfreeze_0", "transfer:no_unfreeze",
                    "transfer:unfreeze_at(10)"}
    dcfg = ExperimentConfig.from_dict({"kind": "mddpg_compare", "tasks": [1, 2], "seeds": [0], "ddpg": TINY_DDPG})
    run_experiment(dcfg, tmp_path / "ddpg")
    assert {c.algorithm for c in load_run_curves(tmp_path / "ddpg")} == {"mddpg", "ddpg"}


def test_worker_count(monkeypatch):
    monkeypatch.setenv("MTRL_WORKERS", "1")
    assert worker_count(8) == 1
    monkeypatch.delenv("MTRL_WORKERS")
    assert 1 <= worker_count(3) <= 3
    monkeypatch.setenv("MTRL_WORKERS", "many")
    with pytest.raises(ConfigError):
        worker_count(2)


def test_cli_exit_codes(tmp_path, capsys):
    good = write_cfg(tmp_path, {**TINY_FQI, "seeds": [0]})
    assert main(["run", str(good), "--out", str(tmp_path / "run")]) == 0
    assert main(["summarize", str(tmp_path / "run")]) == 0
    assert (tmp_path / "run/summary.csv").exists()
    assert main(["run", str(tmp_path / "nope.json")]) == 1
    assert main(["run", str(write_cfg(tmp_path, {"kind": "mfqi_compare", "x": 1}, "bad.json"))]) == 1
    assert main(["transfer", str(good)]) == 1
    (tmp_path / "empty").mkdir()
    assert main(["summarize", str(tmp_path / "empty")]) == 2
    err = capsys.readouterr().err
    assert "config error: x: unknown field" in err and "run failed" in err


def test_cli_bounds(tmp_path, capsys):
    raw = write_cfg(tmp_path, {"K": 2, "eps_avg": [0.1, 0.2]}, "raw.json")
    assert main(["bounds", str(raw)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "bound,inputs_hash,r_star,value" and out[1].startswith("avi,")
    cfg = write_cfg(tmp_path, {"kind": "bounds_eval", "bounds": {"K": 2, "eps_avg": [0.1, 0.2]}}, "be.json")
    assert main(["bounds", str(cfg), "--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "b.csv").read_text().splitlines()[1:] == out[1:]
    assert main(["run", str(cfg), "--out", str(tmp_path / "be")]) == 0
    assert (tmp_path / "be/bounds.csv").exists()
    assert main(["bounds", str(write_cfg(tmp_path, {"K": 2, "gremlins": 1}, "bb.json"))]) == 1
