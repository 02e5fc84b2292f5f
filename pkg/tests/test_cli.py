import csv
import json

import pytest

from fedsilo.cli import main
from fedsilo.cli.config import UsageError, build_config, default_config
from fedsilo.cli.main import validate_summary

ACTIVITY = {"scenario": "activity_even_random", "data": {"n_samples": 160},
            "federation": {"rounds": 2, "local_epochs": 1, "batch_size": 32}, "num_seeds": 2}
COLUMN = {"scenario": "column_sysid", "data": {"n_rich": 2, "n_scarce": 2, "n_full": 3},
          "federation": {"rounds": 2, "local_epochs": 1}, "num_seeds": 2}


def _cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows and all(len(r) == len(rows[0]) for r in rows)
    return rows


@pytest.fixture(scope="module")
def activity_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("act")
    cfg = _cfg(tmp, ACTIVITY)
    out = tmp / "run"
    assert main(["gen-data", "--config", cfg, "--out", str(out)]) == 0
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert main(["report", "--out", str(out)]) == 0
    return tmp, cfg, out


def test_activity_outputs(activity_run):
    _, _, out = activity_run
    rows = _rows(out / "data" / "activity.csv")
    assert len(rows) == 161
    rounds = _rows(out / "rounds.csv")
    assert rounds[0] == ["seed", "round", "client_id", "local_test_mse", "global_test_mse"]
    assert len(rounds) - 1 == 2 * 4 * 2
    summary = json.loads((out / "summary.json").read_text())
    validate_summary(summary)
    assert summary["riptop_global"]["values"] and len(summary["seeds"]) == 2
    assert {"federated", "private", "centralized"} <= set(summary["arms"])
    curves = _rows(out / "report" / "curves_per_client.csv")
    assert len(curves) == 3 and curves[0][:2] == ["round", "n_seeds"]
    assert len(_rows(out / "report" / "curves_global.csv")) == 3
    assert not (out / "report" / "boxplot.csv").exists()


def test_outputs_are_deterministic(activity_run, tmp_path):
    _, cfg, out = activity_run
    again = tmp_path / "again"
    assert main(["gen-data", "--config", cfg, "--out", str(again)]) == 0
    m1 = json.loads((out / "data" / "manifest.json").read_text())
    assert json.loads((again / "data" / "manifest.json").read_text())["files"] == m1["files"]
    assert main(["run", "--config", cfg, "--out", str(again)]) == 0
    for name in ("rounds.csv", "baselines.csv", "summary.json"):
        assert (out / name).read_bytes() == (again / name).read_bytes()
    before = (out / "report" / "curves_global.csv").read_bytes()
    assert main(["report", "--out", str(out)]) == 0
    assert (out / "report" / "curves_global.csv").read_bytes() == before


def test_column_run_and_boxplot(tmp_path):
    cfg = _cfg(tmp_path, COLUMN)
    out = tmp_path / "col"
    assert main(["gen-data", "--config", cfg, "--out", str(out)]) == 0
    manifest = json.loads((out / "data" / "manifest.json").read_text())
    assert manifest["counts"]["train_V1.9"] == 2 and manifest["counts"]["train_V1.6"] == 2
    assert manifest["counts"]["test_V2.0"] == 1
    assert len(_rows(out / "data" / "V1.6" / "test_000.csv")) == 301
    assert main(["run", "--config", cfg, "--out", str(out), "--rounds", "1"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["target"]["client_id"] == 4
    assert summary["target"]["median_private_over_federated"] > 0
    assert main(["report", "--out", str(out)]) == 0
    box = _rows(out / "report" / "boxplot.csv")
    arms = [r[1] for r in box[1:]]
    assert box[0] == ["seed", "arm", "test_mse"]
    assert arms.count("private") == arms.count("federated") == arms.count("full_data") == 2


def test_exit_codes(tmp_path, activity_run):
    _, _, out = activity_run
    assert main([]) == 2
    assert main(["run"]) == 2
    assert main(["run", "--config", _cfg(tmp_path, {"scenario": "weather"}), "--out", str(tmp_path)]) == 2
    bad = dict(ACTIVITY, federation={"aggregation_mode": "fedper_partial"})
    assert main(["run", "--config", _cfg(tmp_path, bad), "--out", str(tmp_path)]) == 2
    # column config against activity data: scenario mismatch
    assert main(["run", "--config", _cfg(tmp_path, COLUMN, "c.json"), "--out", str(out)]) == 2
    # no data generated yet: runtime failure
    assert main(["run", "--config", _cfg(tmp_path, ACTIVITY), "--out", str(tmp_path / "empty")]) == 1
    assert main(["report", "--out", str(tmp_path / "nothing")]) == 1
    (tmp_path / "broken.json").write_text("{not json")
    assert main(["run", "--config", str(tmp_path / "broken.json"), "--out", str(tmp_path)]) == 2


def test_config_defaults_and_overrides():
    c = default_config("activity_uneven_scaffold")
    assert c.federation.aggregation_mode == "fedper_partial" and c.federation.K == 4
    assert all(n.startswith("gnn.") for n in c.federation.shared_segment_names)
    p = default_config("column_sysid", "paper")
    assert (p.federation.rounds, p.federation.local_epochs, p.data["n_rich"]) == (30, 150, 192)
    assert build_config({"scenario": "activity_even_random"}, seed=7, rounds=3).seeds[0] == 7
    forced = build_config({"scenario": "activity_even_random", "allow_mode_override": True,
                           "federation": {"aggregation_mode": "fedper_partial"}})
    assert forced.federation.shared_segment_names
    with pytest.raises(UsageError):
        build_config({"scenario": "column_sysid", "federation": {"K": 4}})
    with pytest.raises(UsageError):
        build_config({"scenario": "activity_even_random", "federation": {"momentum": 0.9}})
