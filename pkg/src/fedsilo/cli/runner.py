"""Data generation, per-seed experiment arms and run summaries."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import colsim
from ..data.activity import generate_synthetic_activity, ingest_activity_csv, write_activity_csv
from ..evalmetrics import riptop, summarize_seeds
from ..fedproto import (RoundRecord, activity_scenario, column_reference_client, column_scenario,
                        run_centralized, run_federation, run_private_baselines, train_standalone)
from .config import ExperimentConfig, UsageError, family

ROUND_COLUMNS = ("seed", "round", "client_id", "local_test_mse", "global_test_mse")
WALLTIME_COLUMNS = ("seed", "round", "wall_time_s")
BASELINE_COLUMNS = ("seed", "arm", "client_id", "test_mse")
THREADS_ENV = "FEDSILO_THREADS"


@dataclass
class ColumnData:
    train: dict[float, list]
    test: dict[float, list]
    full: list  # full-data reference set at the target V
    target_V: float


def _fmt(x: float) -> str:
    return repr(float(x))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def make_data(cfg: ExperimentConfig, seed: int | None = None):
    """In-memory data for a config: activity samples or :class:`ColumnData`."""
    d = cfg.data
    s = int(d.get("seed", 0) if seed is None else seed)
    if cfg.family == "activity":
        if d.get("source", "synthetic") == "csv":
            samples = []
            for p in d["paths"]:
                samples.extend(ingest_activity_csv(p)[0])
            return samples
        return generate_synthetic_activity(s, int(d["n_samples"]))
    vs = [float(v) for v in d["V_values"]]
    target = float(d["target_V"])
    full = colsim.generate_client_dataset(target, int(d["n_full"]), s)
    train = {}
    for v in vs:
        if v == target:
            train[v] = full[:int(d["n_scarce"])] if int(d["n_scarce"]) <= len(full) else \
                colsim.generate_client_dataset(v, int(d["n_scarce"]), s)
        else:
            train[v] = colsim.generate_client_dataset(v, int(d["n_rich"]), s)
    test = {v: [colsim.generate_test_trajectory(v, s)] for v in vs}
    return ColumnData(train, test, full, target)


def gen_data(cfg: ExperimentConfig, out_dir: str | Path, seed: int | None = None) -> dict:
    """Write the data files plus ``manifest.json`` (seeds, counts, sha256 checksums)."""
    root = Path(out_dir) / "data"
    root.mkdir(parents=True, exist_ok=True)
    s = int(cfg.data.get("seed", 0) if seed is None else seed)
    data = make_data(cfg, s)
    files: list[Path] = []
    counts: dict[str, int] = {}
    if cfg.family == "activity":
        p = root / "activity.csv"
        write_activity_csv(data, p)
        files.append(p)
        counts["samples"] = len(data)
    else:
        def dump(trajs, sub: str, stem: str):
            d = root / sub
            d.mkdir(parents=True, exist_ok=True)
            for k, t in enumerate(trajs):
                path = d / f"{stem}_{k:03d}.csv"
                t.to_csv(path)
                files.append(path)
        for v in sorted(data.train):
            dump(data.train[v], f"V{v:.1f}", "train")
            dump(data.test[v], f"V{v:.1f}", "test")
            counts[f"train_V{v:.1f}"] = len(data.train[v])
            counts[f"test_V{v:.1f}"] = len(data.test[v])
        dump(data.full, f"reference_V{data.target_V:.1f}", "train")
        counts[f"reference_V{data.target_V:.1f}"] = len(data.full)
    manifest = {
        "scenario": cfg.scenario,
        "profile": cfg.profile,
        "data": cfg.data,
        "data_seed": s,
        "counts": counts,
        "files": [{"path": str(f.relative_to(root)), "sha256": _sha256(f)} for f in sorted(files)],
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    return manifest


def load_data(cfg: ExperimentConfig, out_dir: str | Path):
    """Read what :func:`gen_data` wrote; raises ``FileNotFoundError`` if absent."""
    root = Path(out_dir) / "data"
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{manifest_path} not found; run gen-data first")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    # activity data serves both activity scenarios
    if family(manifest["scenario"]) != cfg.family:
        raise UsageError(f"data in {root} was generated for {manifest['scenario']}, not {cfg.scenario}")
    for f in manifest["files"]:
        if _sha256(root / f["path"]) != f["sha256"]:
            raise OSError(f"checksum mismatch for {f['path']}")
    if cfg.family == "activity":
        return ingest_activity_csv(root / "activity.csv")[0]

    def read(sub: str, stem: str, v: float) -> list:
        out = []
        for k, path in enumerate(sorted((root / sub).glob(f"{stem}_*.csv"))):
            t = colsim.Trajectory.from_csv(path, V=v)
            t.meta = {"V": v, "index": k, "test": stem == "test"}
            out.append(t)
        return out

    vs = [float(v) for v in cfg.data["V_values"]]
    target = float(cfg.data["target_V"])
    return ColumnData({v: read(f"V{v:.1f}", "train", v) for v in vs},
                      {v: read(f"V{v:.1f}", "test", v) for v in vs},
                      read(f"reference_V{target:.1f}", "train", target), target)


@dataclass
class SeedResult:
    seed: int
    records: list[RoundRecord] = field(default_factory=list)
    private: dict[int, float] = field(default_factory=dict)
    centralized_pooled: float | None = None
    centralized: dict[int, float] = field(default_factory=dict)
    full_data: float | None = None
    target_client: int | None = None

    @property
    def round1_avg_client(self) -> float:
        return float(np.mean(list(self.records[0].local_test_mse.values())))

    @property
    def final_global_avg(self) -> float:
        return float(np.mean(list(self.records[-1].global_test_mse.values())))

    def relative_improvement(self) -> dict[int, float]:
        """Per client: (round-1 local MSE - final global MSE) / round-1 local MSE."""
        r1 = self.records[0].local_test_mse
        fin = self.records[-1].global_test_mse
        return {k: (r1[k] - fin[k]) / r1[k] for k in sorted(r1)}


def build_scenario(cfg: ExperimentConfig, data, seed: int):
    if cfg.family == "activity":
        return activity_scenario(cfg.scenario, data, seed, k_clients=cfg.federation.K,
                                 spec=cfg.model_spec(seed))
    return column_scenario(data.train, data.test, seed, spec=cfg.model_spec(seed))


def run_seed(cfg: ExperimentConfig, data, seed: int, arms: tuple[str, ...] | None = None,
             private_clients: str = "all") -> SeedResult:
    """Run the requested arms for one seed.

    ``private_clients="target"`` restricts column private baselines to the
    target client (the rich clients' baselines do not enter any criterion).
    """
    arms = cfg.arms if arms is None else arms
    sc = build_scenario(cfg, data, seed)
    fed = cfg.federation_for(seed, sc.spec.shared_segments())
    out = SeedResult(seed, target_client=sc.meta.get("target_client"))
    if "private" in arms:
        if cfg.family == "column" and private_clients == "target":
            tgt = next(c for c in sc.clients if c.client_id == out.target_client)
            out.private = {tgt.client_id: train_standalone(sc, tgt, fed).test_mse}
        else:
            out.private = {k: r.test_mse for k, r in run_private_baselines(sc, fed).items()}
        if cfg.family == "column":
            ref = column_reference_client(sc, data.full, data.test[data.target_V], seed)
            out.full_data = train_standalone(sc, ref, fed).test_mse
    if "centralized" in arms:
        cen = run_centralized(sc, fed)
        out.centralized_pooled = cen.pooled_test_mse
        out.centralized = dict(cen.client_test_mse)
    if "federated" in arms:
        out.records = run_federation(sc, fed).records
    return out


def _run_one(args):
    cfg, data, seed = args
    return run_seed(cfg, data, seed)


def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_all(cfg: ExperimentConfig, data) -> list[SeedResult]:
    """All seeds, optionally in parallel processes (``FEDSILO_THREADS``); results in seed order."""
    jobs = [(cfg, data, s) for s in cfg.seeds]
    n = min(thread_cap(), len(jobs))
    if n <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_run_one, jobs))


def _summary(values) -> dict:
    vals = [float(v) for v in values]
    s = summarize_seeds(vals)
    se = None if math.isnan(s.stderr) else s.stderr
    return {"values": vals, "mean": s.mean, "stderr": se}


def _safe_riptop(moi: float, base: float) -> float | None:
    try:
        return riptop(moi, base, 0.0)
    except ZeroDivisionError:
        return None


def summarize(cfg: ExperimentConfig, results: list[SeedResult]) -> dict:
    out: dict = {"scenario": cfg.scenario, "profile": cfg.profile,
                 "seeds": [r.seed for r in results], "config": cfg.to_dict(), "arms": {}}
    arms = out["arms"]
    fed = [r for r in results if r.records]
    if fed:
        cids = sorted(fed[0].records[0].local_test_mse)
        arms["federated"] = {
            "final_global_avg": _summary(r.final_global_avg for r in fed),
            "round1_avg_client": _summary(r.round1_avg_client for r in fed),
            "rounds_completed": [len(r.records) for r in fed],
            "per_client_final_global": {str(k): _summary(r.records[-1].global_test_mse[k] for r in fed)
                                        for k in cids},
        }
        rg = [_safe_riptop(r.final_global_avg, r.round1_avg_client) for r in fed]
        out["riptop_global"] = _summary(v for v in rg if v is not None) if any(v is not None for v in rg) else None
        out["riptop_per_client"] = {}
        for k in cids:
            vals = [_safe_riptop(r.records[-1].global_test_mse[k], r.records[0].local_test_mse[k]) for r in fed]
            vals = [v for v in vals if v is not None]
            out["riptop_per_client"][str(k)] = _summary(vals) if vals else None
    priv = [r for r in results if r.private]
    if priv:
        cids = sorted(priv[0].private)
        arms["private"] = {
            "avg_client": _summary(np.mean(list(r.private.values())) for r in priv),
            "per_client": {str(k): _summary(r.private[k] for r in priv) for k in cids},
        }
    cen = [r for r in results if r.centralized_pooled is not None]
    if cen:
        arms["centralized"] = {
            "pooled": _summary(r.centralized_pooled for r in cen),
            "avg_client": _summary(np.mean(list(r.centralized.values())) for r in cen),
        }
    if cfg.family == "column" and fed and priv:
        tgt = fed[0].target_client
        f = [r.records[-1].global_test_mse[tgt] for r in fed]
        p = [r.private[tgt] for r in priv]
        full = [r.full_data for r in priv if r.full_data is not None]
        out["target"] = {
            "client_id": tgt,
            "federated": _summary(f),
            "private": _summary(p),
            "full_data": _summary(full) if full else None,
            "private_over_federated": _summary(pp / ff for pp, ff in zip(p, f)),
            "median_private_over_federated": float(np.median(p) / np.median(f)),
            "median_federated_over_full": float(np.median(f) / np.median(full)) if full else None,
            "riptop_vs_private": _summary(riptop(ff, pp, 0.0) for pp, ff in zip(p, f)),
        }
    return out


def write_run_outputs(out_dir: str | Path, cfg: ExperimentConfig, results: list[SeedResult]) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "rounds.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROUND_COLUMNS)
        for r in results:
            for rec in r.records:
                for cid in sorted(rec.local_test_mse):
                    w.writerow([r.seed, rec.round, cid, _fmt(rec.local_test_mse[cid]),
                                _fmt(rec.global_test_mse[cid])])
    with open(out / "walltime.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WALLTIME_COLUMNS)
        for r in results:
            for rec in r.records:
                w.writerow([r.seed, rec.round, f"{rec.wall_time:.6f}"])
    with open(out / "baselines.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BASELINE_COLUMNS)
        for r in results:
            for cid in sorted(r.private):
                w.writerow([r.seed, "private", cid, _fmt(r.private[cid])])
            if r.centralized_pooled is not None:
                w.writerow([r.seed, "centralized", 0, _fmt(r.centralized_pooled)])
                for cid in sorted(r.centralized):
                    w.writerow([r.seed, "centralized", cid, _fmt(r.centralized[cid])])
            if r.full_data is not None:
                w.writerow([r.seed, "full_data", r.target_client, _fmt(r.full_data)])
    summary = summarize(cfg, results)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary
