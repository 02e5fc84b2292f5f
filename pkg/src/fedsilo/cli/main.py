"""``fedsilo`` command line: gen-data, run, report.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from .config import PROFILES, ExperimentConfig, UsageError, load_config
from .report import build_report
from .runner import gen_data, load_data, run_all, write_run_outputs

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def summary_schema() -> dict:
    text = resources.files("fedsilo").joinpath("schemas/summary.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_summary(summary: dict) -> None:
    jsonschema.validate(summary, summary_schema())


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fedsilo", description="Federated learning experiments for "
                                "activity-coefficient GNNs and distillation-column system identification.")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, helptext in (("gen-data", "write the scenario's data files and manifest"),
                           ("run", "run private, centralized and federated arms for every seed")):
        s = sub.add_parser(verb, help=helptext)
        s.add_argument("--config", required=True, help="experiment config (JSON)")
        s.add_argument("--out", help="output directory (defaults to the config's output_dir)")
        s.add_argument("--seed", type=int, help="data seed for gen-data, first run seed for run")
        s.add_argument("--rounds", type=int, help="override the number of communication rounds")
        s.add_argument("--profile", choices=PROFILES, help="desk or paper scale")
    s = sub.add_parser("report", help="write plot-ready CSVs for a finished run")
    s.add_argument("--out", required=True, help="run directory")
    return p


def _config(args) -> tuple[ExperimentConfig, Path]:
    seed = args.seed if args.verb == "run" else None
    cfg = load_config(args.config, profile=args.profile, seed=seed, rounds=args.rounds)
    out = args.out or cfg.output_dir
    if not out:
        raise UsageError("no output directory: pass --out or set output_dir in the config")
    return cfg, Path(out)


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        if args.verb == "report":
            for path in build_report(args.out):
                print(path)
            return EXIT_OK
        cfg, out = _config(args)
        if args.verb == "gen-data":
            manifest = gen_data(cfg, out, seed=args.seed)
            print(f"wrote {len(manifest['files'])} files to {out / 'data'}")
            return EXIT_OK
        data = load_data(cfg, out)
        results = run_all(cfg, data)
        summary = write_run_outputs(out, cfg, results)
        validate_summary(summary)
        print(f"{cfg.scenario}: {len(results)} seeds, results in {out}")
        return EXIT_OK
    except UsageError as exc:
        print(f"fedsilo: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"fedsilo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
