"""Experiment configs, per-seed runs, manifests and summaries.

A config is a JSON file. Every run directory holds one ``seed_<n>``
subdirectory per seed plus ``manifest.json``; a seed whose ``done.json``
matches the config hash is skipped on re-runs.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .algos import (DDPGConfig, DQNConfig, FQIConfig, TransferMode, collect_dataset, fqi_run,
                    mddpg_train, mdqn_train, run_transfer)
from .bounds import BoundInputs, evaluate_all, write_bound_rows
from .envs import suite_subset
from .evaluation import LearningCurve, aggregate_curves, read_curves_csv, write_curves_csv
from .mtnet import save_mtnet
from .oracle import build_q_oracle, policy_q_l1_error, q_l1_error, rollout_returns, sample_probes

SCHEMA_VERSION = 1
KINDS = ("mfqi_compare", "mfqi_task_scaling", "mdqn_compare", "mdqn_transfer",
         "mddpg_compare", "mddpg_transfer", "bounds_eval")
WORKERS_ENV = "MTRL_WORKERS"

_DEFAULT_SUITE = {"mfqi_compare": "car_on_hill_8", "mfqi_task_scaling": "car_on_hill_8",
                  "mdqn_compare": "mdqn_5", "mdqn_transfer": "mdqn_5",
                  "mddpg_compare": "pendulum_family_3", "mddpg_transfer": "pendulum_family_3",
                  "bounds_eval": ""}


class ConfigError(ValueError):
    """The experiment config is malformed; the message names the field."""


@dataclass
class ExperimentConfig:
    kind: str
    suite: str = ""
    tasks: list | None = None              # 1-based task numbers, None = whole suite
    seeds: list = field(default_factory=lambda: list(range(20)))
    output_dir: str = "runs/experiment"
    # batch (FQI) settings
    fqi: dict = field(default_factory=dict)
    dataset_size: int = 2000
    n_probes: int = 100
    probe_seed: int = 12345
    oracle_resolution: int = 400
    task_subsets: dict = field(default_factory=lambda: {"1": [1], "2": [1, 2], "4": [1, 2, 3, 4],
                                                        "8": [1, 2, 3, 4, 5, 6, 7, 8]})
    # online settings
    dqn: dict = field(default_factory=dict)
    ddpg: dict = field(default_factory=dict)
    # transfer settings
    target_task: int | None = None
    modes: list = field(default_factory=lambda: ["scratch", "unfreeze_0", "no_unfreeze", "unfreeze_at(10)"])
    snapshot: str | None = None
    critic_snapshot: str | None = None
    # bound evaluation
    bounds: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: must be one of {', '.join(KINDS)}, got {self.kind!r}")
        if not self.suite:
            self.suite = _DEFAULT_SUITE[self.kind]
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {self.schema_version}")
        if self.kind != "bounds_eval":
            if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
                raise ConfigError("seeds: need a non-empty list of non-negative integers")
            if len(set(self.seeds)) != len(self.seeds):
                raise ConfigError("seeds: duplicates are not allowed")
            try:
                self.specs()
            except (KeyError, ValueError, IndexError) as exc:
                raise ConfigError(f"suite/tasks: {exc}") from None
        for name, cls in (("fqi", FQIConfig), ("dqn", DQNConfig), ("ddpg", DDPGConfig)):
            try:
                getattr(self, name + "_config")()
            except TypeError as exc:
                raise ConfigError(f"{name}: {exc}") from None
            except ValueError as exc:
                raise ConfigError(f"{name}: {exc}") from None
        for key in ("dataset_size", "n_probes", "oracle_resolution"):
            if int(getattr(self, key)) < 1:
                raise ConfigError(f"{key}: must be positive")
        if self.kind.endswith("_transfer"):
            n = len(self.specs())
            if self.target_task is None or not 1 <= self.target_task <= n:
                raise ConfigError(f"target_task: need a task number in 1..{n}")
            try:
                self.transfer_modes()
            except ValueError as exc:
                raise ConfigError(f"modes: {exc}") from None
        if self.kind == "mfqi_task_scaling":
            for k, sub in self.task_subsets.items():
                if not str(k).isdigit() or len(sub) != int(k):
                    raise ConfigError(f"task_subsets.{k}: subset must hold exactly {k} tasks")
        if self.kind == "bounds_eval":
            if not self.bounds:
                raise ConfigError("bounds: bound inputs are required for bounds_eval")
            try:
                BoundInputs.from_dict(self.bounds)
            except TypeError as exc:
                raise ConfigError(f"bounds: {exc}") from None

    # -- derived objects -----------------------------------------------------
    def specs(self):
        return suite_subset(self.suite, self.tasks)

    def fqi_config(self) -> FQIConfig:
        merged = {"minibatch": 100, **self.fqi}
        return FQIConfig(**merged)

    def dqn_config(self) -> DQNConfig:
        return DQNConfig(**self.dqn)

    def ddpg_config(self) -> DDPGConfig:
        return DDPGConfig(**self.ddpg)

    def transfer_modes(self) -> list[TransferMode]:
        return [TransferMode.parse(m) for m in self.modes]

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash of everything that can change a number; seeds and the
        output location are left out so runs of one setup aggregate."""
        d = self.to_dict()
        d.pop("seeds")
        d.pop("output_dir")
        d["fqi"] = asdict(self.fqi_config())
        d["dqn"] = self.dqn_config().to_dict()
        d["ddpg"] = self.ddpg_config().to_dict()
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown field")
        if "kind" not in d:
            raise ConfigError("kind: missing")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(data)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


# -- per-seed runners ----------------------------------------------------------

@dataclass
class SeedOutput:
    curves: list = field(default_factory=list)
    qerrors: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)   # file name -> network


def _rngs(seed: int, n: int, salt: int):
    """``n`` independent generators for one seed and one purpose."""
    return [np.random.default_rng(c) for c in np.random.SeedSequence([seed, salt]).spawn(n)]


_ORACLES: dict = {}


def _oracle(spec, resolution):
    key = (json.dumps(spec.to_dict(), sort_keys=True), resolution)
    if key not in _ORACLES:
        _ORACLES[key] = build_q_oracle(spec, resolution)
    return _ORACLES[key]


def _fqi_arm(name, data, specs, cfg: ExperimentConfig, rng, seed, h, out: SeedOutput, snap=None):
    """Run FQI on ``data`` and log q-errors per snapshot plus the final return."""
    labels = [s.label for s in specs]
    res = fqi_run(data, specs, cfg.fqi_config(), rng)
    qc = LearningCurve(name, cfg.suite, labels, seed, h)
    rc = LearningCurve(name, cfg.suite, labels, seed, h)
    for t, s in enumerate(specs):
        oracle = _oracle(s, cfg.oracle_resolution)
        probes = sample_probes(s, cfg.n_probes, cfg.probe_seed)
        for k, net in res.snapshots:
            qc.add(s.label, k, "q_l1_error", q_l1_error((net, t), oracle, probes))
        K = res.snapshots[-1][0]
        qc.add(s.label, K, "policy_q_l1_error", policy_q_l1_error((res.net, t), oracle, probes))
        rc.add(s.label, K, "return", float(np.mean(rollout_returns((res.net, t), s, probes))))
    out.qerrors.append(qc)
    out.curves.append(rc)
    if snap:
        out.snapshots[snap] = res.net
    return res


def _run_mfqi_compare(cfg, seed, h):
    out = SeedOutput()
    specs = cfg.specs()
    data = [collect_dataset(s, cfg.dataset_size, r) for s, r in zip(specs, _rngs(seed, len(specs), 1))]
    _fqi_arm("mfqi", data, specs, cfg, _rngs(seed, 1, 2)[0], seed, h, out, snap="mfqi.npz")
    for t, (s, r) in enumerate(zip(specs, _rngs(seed, len(specs), 3))):
        _fqi_arm("fqi", [data[t]], [s], cfg, r, seed, h, out)
    return out


def _run_mfqi_scaling(cfg, seed, h):
    out = SeedOutput()
    specs = cfg.specs()
    data = [collect_dataset(s, cfg.dataset_size, r) for s, r in zip(specs, _rngs(seed, len(specs), 1))]
    for k in sorted(cfg.task_subsets, key=int):
        idx = [i - 1 for i in cfg.task_subsets[k]]
        rng = _rngs(seed, 1, 100 + int(k))[0]
        _fqi_arm(f"mfqi_T{k}", [data[i] for i in idx], [specs[i] for i in idx], cfg, rng, seed, h, out)
    return out


def _run_mdqn_compare(cfg, seed, h):
    out = SeedOutput()
    specs, dq = cfg.specs(), cfg.dqn_config()
    res = mdqn_train(specs, dq, seed, suite=cfg.suite, config_hash=h)
    out.curves.append(res.curve)
    out.snapshots["mdqn.npz"] = res.net
    for s in specs:
        out.curves.append(mdqn_train([s], dq, seed, algorithm="dqn", suite=cfg.suite, config_hash=h).curve)
    return out


def _run_mddpg_compare(cfg, seed, h):
    out = SeedOutput()
    specs, dd = cfg.specs(), cfg.ddpg_config()
    curve, actor, critic = mddpg_train(specs, dd, seed, suite=cfg.suite, config_hash=h)
    out.curves.append(curve)
    out.snapshots.update({"mddpg_actor.npz": actor, "mddpg_critic.npz": critic})
    for s in specs:
        out.curves.append(mddpg_train([s], dd, seed, algorithm="ddpg", suite=cfg.suite, config_hash=h)[0])
    return out


def _run_transfer(cfg, seed, h, seed_dir: Path):
    """Pretrain on every task but the target (unless a snapshot is given),
    then run each transfer mode on the target alone."""
    out = SeedOutput()
    specs = cfg.specs()
    target = specs[cfg.target_task - 1]
    others = [s for i, s in enumerate(specs) if i != cfg.target_task - 1]
    continuous = cfg.kind == "mddpg_transfer"
    trainer_cfg = cfg.ddpg_config() if continuous else cfg.dqn_config()
    snap_dir = seed_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    if continuous:
        if cfg.snapshot:
            pretrained = {"actor": cfg.snapshot, "critic": cfg.critic_snapshot or cfg.snapshot}
        else:
            curve, actor, critic = mddpg_train(others, trainer_cfg, seed, algorithm="pretrain",
                                               suite=cfg.suite, config_hash=h)
            out.curves.append(curve)
            out.snapshots.update({"pretrain_actor.npz": actor, "pretrain_critic.npz": critic})
            pretrained = {"actor": actor.shared, "critic": critic.shared}
    else:
        if cfg.snapshot:
            pretrained = cfg.snapshot
        else:
            res = mdqn_train(others, trainer_cfg, seed, algorithm="pretrain", suite=cfg.suite, config_hash=h)
            out.curves.append(res.curve)
            out.snapshots["pretrain.npz"] = res.net
            pretrained = res.net.shared
    for mode in cfg.transfer_modes():
        out.curves.append(run_transfer(pretrained, target, mode, trainer_cfg, seed,
                                       suite=cfg.suite, config_hash=h))
    return out


def run_seed(cfg: ExperimentConfig, seed: int, out_dir) -> Path:
    """Run one seed and write its artifacts; returns the seed directory."""
    h = cfg.config_hash()
    seed_dir = Path(out_dir) / f"seed_{seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "mfqi_compare":
        out = _run_mfqi_compare(cfg, seed, h)
    elif cfg.kind == "mfqi_task_scaling":
        out = _run_mfqi_scaling(cfg, seed, h)
    elif cfg.kind == "mdqn_compare":
        out = _run_mdqn_compare(cfg, seed, h)
    elif cfg.kind == "mddpg_compare":
        out = _run_mddpg_compare(cfg, seed, h)
    elif cfg.kind in ("mdqn_transfer", "mddpg_transfer"):
        out = _run_transfer(cfg, seed, h, seed_dir)
    else:
        raise ValueError(f"{cfg.kind} has no per-seed runs")
    write_curves_csv(out.curves, seed_dir / "curves.csv")
    if out.qerrors:
        write_curves_csv(out.qerrors, seed_dir / "qerror.csv")
    if out.snapshots:
        (seed_dir / "snapshots").mkdir(exist_ok=True)
        for name, net in out.snapshots.items():
            save_mtnet(net, seed_dir / "snapshots" / name)
    (seed_dir / "done.json").write_text(json.dumps({"seed": seed, "config_hash": h}) + "\n")
    return seed_dir


def _seed_done(seed_dir: Path, h: str) -> bool:
    marker = seed_dir / "done.json"
    if not marker.exists():
        return False
    try:
        return json.loads(marker.read_text()).get("config_hash") == h
    except json.JSONDecodeError:
        return False


def worker_count(n_jobs: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}: expected an integer, got {cap!r}") from None
    return max(1, min(n, n_jobs))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(cfg: ExperimentConfig, out_dir, wall_clock: float) -> dict:
    out_dir = Path(out_dir)
    files = {}
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files[p.relative_to(out_dir).as_posix()] = sha256_file(p)
    manifest = {"schema_version": SCHEMA_VERSION, "kind": cfg.kind, "config_hash": cfg.config_hash(),
                "seeds": list(cfg.seeds), "wall_clock_seconds": round(wall_clock, 3), "files": files}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def run_experiment(cfg: ExperimentConfig | str | os.PathLike, out_dir=None) -> dict:
    """Run every pending seed (or the bound evaluation) and write the manifest."""
    if not isinstance(cfg, ExperimentConfig):
        cfg = ExperimentConfig.load(cfg)
    out_dir = Path(out_dir or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.dump(out_dir / "config.json")
    start = time.perf_counter()
    if cfg.kind == "bounds_eval":
        write_bound_rows(evaluate_all(BoundInputs.from_dict(cfg.bounds)), out_dir / "bounds.csv")
    else:
        h = cfg.config_hash()
        pending = [s for s in cfg.seeds if not _seed_done(out_dir / f"seed_{s}", h)]
        workers = worker_count(len(pending))
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                for f in [pool.submit(run_seed, cfg, s, out_dir) for s in pending]:
                    f.result()
        else:
            for s in pending:
                run_seed(cfg, s, out_dir)
    return write_manifest(cfg, out_dir, time.perf_counter() - start)


# -- summaries -----------------------------------------------------------------

def load_run_curves(run_dir, name: str = "curves.csv") -> list[LearningCurve]:
    curves = []
    for p in sorted(Path(run_dir).glob(f"seed_*/{name}")):
        curves.extend(read_curves_csv(p))
    return curves


def summarize_curves(curves) -> list[dict]:
    """Aggregate per algorithm; all runs must carry one config hash."""
    hashes = {c.config_hash for c in curves}
    if len(hashes) > 1:
        raise ValueError(f"mixed config hashes in one run directory: {sorted(hashes)}")
    groups: dict[str, list] = {}
    for c in curves:
        groups.setdefault(c.algorithm, []).append(c)
    rows = []
    for alg in sorted(groups):
        rows.extend(aggregate_curves(groups[alg]))
    return rows


SUMMARY_COLUMNS = ["algorithm", "suite", "task", "metric_name", "epoch", "mean", "ci_low", "ci_high",
                   "half_width", "n_runs", "degenerate", "config_hash"]


def emit_summary(run_dir) -> list[dict]:
    """Write summary.csv and summary.json with per-epoch means and 95% CIs."""
    import csv
    run_dir = Path(run_dir)
    curves = load_run_curves(run_dir) + load_run_curves(run_dir, "qerror.csv")
    if not curves:
        raise ValueError(f"no completed seeds under {run_dir}")
    rows = summarize_curves(curves)
    with open(run_dir / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    (run_dir / "summary.json").write_text(json.dumps(rows, indent=1) + "\n")
    return rows
