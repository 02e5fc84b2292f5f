"""Plot-ready CSVs built from a run directory (curves and boxplot data)."""
from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..evalmetrics import summarize_seeds

REPORT_DIR = "report"


def _read_csv(path: Path) -> list[dict[str, str]]:
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run the experiment first")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _cell(x: float | None) -> str:
    if x is None or math.isnan(x):
        return ""
    return repr(float(x))


def _mean_se(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    s = summarize_seeds(values)
    return s.mean, s.stderr


def _write(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def build_report(run_dir: str | Path) -> list[Path]:
    """Write the report CSVs under ``run_dir/report`` and return their paths.

    * ``curves_per_client.csv``: one row per round; local and global test MSE
      per client, mean and standard error over the seeds that reached the round.
    * ``curves_global.csv``: one row per round; global model, average client
      (round-local models) and centralized baseline, each averaged over clients.
    * ``boxplot.csv`` (column scenario): one row per seed and arm for the
      target client (private, federated, full_data).
    """
    run = Path(run_dir)
    rounds = _read_csv(run / "rounds.csv")
    baselines = _read_csv(run / "baselines.csv")
    summary_path = run / "summary.json"
    if not summary_path.exists():
        raise FileNotFoundError(f"{summary_path} not found; run the experiment first")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    out = run / REPORT_DIR
    out.mkdir(parents=True, exist_ok=True)

    # (round, client) -> seed -> values
    local: dict[tuple[int, int], dict[int, float]] = defaultdict(dict)
    glob: dict[tuple[int, int], dict[int, float]] = defaultdict(dict)
    for r in rounds:
        key = (int(r["round"]), int(r["client_id"]))
        local[key][int(r["seed"])] = float(r["local_test_mse"])
        glob[key][int(r["seed"])] = float(r["global_test_mse"])
    round_ids = sorted({k[0] for k in local})
    client_ids = sorted({k[1] for k in local})

    header = ["round", "n_seeds"]
    for c in client_ids:
        header += [f"client{c}_local_mean", f"client{c}_local_se", f"client{c}_global_mean", f"client{c}_global_se"]
    rows = []
    for rnd in round_ids:
        seeds = sorted(set().union(*(local[(rnd, c)].keys() for c in client_ids)))
        row: list = [rnd, len(seeds)]
        for c in client_ids:
            lm, ls = _mean_se([local[(rnd, c)][s] for s in sorted(local[(rnd, c)])])
            gm, gs = _mean_se([glob[(rnd, c)][s] for s in sorted(glob[(rnd, c)])])
            row += [_cell(lm), _cell(ls), _cell(gm), _cell(gs)]
        rows.append(row)
    paths = [out / "curves_per_client.csv"]
    _write(paths[-1], header, rows)

    cen_by_seed: dict[int, list[float]] = defaultdict(list)
    for b in baselines:
        if b["arm"] == "centralized" and int(b["client_id"]) != 0:
            cen_by_seed[int(b["seed"])].append(float(b["test_mse"]))
    cen_vals = [float(np.mean(cen_by_seed[s])) for s in sorted(cen_by_seed)]
    cm, cs = _mean_se(cen_vals)
    rows = []
    for rnd in round_ids:
        seeds = sorted(set().union(*(local[(rnd, c)].keys() for c in client_ids)))
        seeds = [s for s in seeds if all(s in local[(rnd, c)] for c in client_ids)]
        gm, gs = _mean_se([float(np.mean([glob[(rnd, c)][s] for c in client_ids])) for s in seeds])
        am, as_ = _mean_se([float(np.mean([local[(rnd, c)][s] for c in client_ids])) for s in seeds])
        rows.append([rnd, len(seeds), _cell(gm), _cell(gs), _cell(am), _cell(as_), _cell(cm), _cell(cs)])
    paths.append(out / "curves_global.csv")
    _write(paths[-1], ["round", "n_seeds", "global_mean", "global_se", "average_client_mean",
                       "average_client_se", "centralized_mean", "centralized_se"], rows)

    target = summary.get("target")
    if summary.get("scenario") == "column_sysid" and target:
        tgt = int(target["client_id"])
        rows = []
        last_round: dict[int, int] = {}
        for r in rounds:
            s = int(r["seed"])
            last_round[s] = max(last_round.get(s, 0), int(r["round"]))
        fed = {s: glob[(last_round[s], tgt)][s] for s in sorted(last_round) if s in glob[(last_round[s], tgt)]}
        by_arm: dict[str, dict[int, float]] = {"private": {}, "federated": fed, "full_data": {}}
        for b in baselines:
            if b["arm"] in ("private", "full_data") and int(b["client_id"]) == tgt:
                by_arm[b["arm"]][int(b["seed"])] = float(b["test_mse"])
        for arm in ("private", "federated", "full_data"):
            for s in sorted(by_arm[arm]):
                rows.append([s, arm, _cell(by_arm[arm][s])])
        paths.append(out / "boxplot.csv")
        _write(paths[-1], ["seed", "arm", "test_mse"], rows)
    return paths
