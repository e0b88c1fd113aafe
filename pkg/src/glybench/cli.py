"""Command-line surface: synthesize, inspect, run the grid, report.

All randomness flows from one root seed, output files carry no
timestamps, and grid cells are merged in sorted key order, so a rerun
with the same inputs is byte-identical. Validation failures exit 2 with
a message; success exits 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from . import __version__
from .ep import EP_COUNTS_CSV_HEADER, ep_counts
from .evaluation import (
    METRICS,
    EvalReport,
    PenaltyTable,
    evaluate,
    improvement_csv,
    results_long_csv,
    wide_csv,
)
from .ingest import cleaning_csv, clean_cohort, parse_diary_csv
from .models import builtin_registry, registry_csv
from .records import encode_diary_csv
from .synth import PRESETS, config_from_json, generate
from .variants import materialize, spec_by_id, variant_table_csv

LONG_CSV_NAME = "results_long.csv"


class CliError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e}") from None


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-glybench-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require_parent_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise CliError(f"output directory does not exist: {parent}")


def _load_cohort(path: str):
    return parse_diary_csv(_read(path))


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        cfg = config_from_json(_read(args.config))
    else:
        cfg = PRESETS[args.preset](seed=args.seed if args.seed is not None else 0)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    _require_parent_dir(args.out)
    cohort = generate(cfg)
    _write_atomic(args.out, encode_diary_csv(cohort))
    print(f"wrote {sum(len(h) for h in cohort.values())} records "
          f"for {len(cohort)} patients to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# inspect
# ---------------------------------------------------------------------------

def cmd_inspect(args: argparse.Namespace) -> int:
    raw = _load_cohort(args.input)
    cleaned, reports = clean_cohort(raw)
    ep_lines = [EP_COUNTS_CSV_HEADER]
    print(f"{'patient':<10}{'records':>8}{'cleaned':>8}{'ep':>6}")
    for pid in sorted(cleaned):
        total, ep = ep_counts(cleaned[pid])
        ep_lines.append(f"{pid},{total},{ep}")
        print(f"{pid:<10}{len(raw[pid]):>8}{total:>8}{ep:>6}")
    if args.out:
        if not os.path.isdir(args.out):
            raise CliError(f"output directory does not exist: {args.out}")
        _write_atomic(os.path.join(args.out, "ep_counts.csv"),
                      "\n".join(ep_lines) + "\n")
        _write_atomic(os.path.join(args.out, "cleaning.csv"), cleaning_csv(reports))
        _write_atomic(os.path.join(args.out, "variants.csv"), variant_table_csv())
        _write_atomic(os.path.join(args.out, "models.csv"), registry_csv())
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

DEFAULT_GRID_VARIANTS = ("D_e1", "D_e2", "D_e6", "D_e12", "D_a1", "D_a6", "D_a8", "D_a12")
DEFAULT_GRID_MODELS = (
    "naive", "ridge", "KNN10U", "rf4",
    "gpr_IndPat_AllMeals", "gpr_be", "gpr_be_AllPat_AllMeals",
)


def _grid_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        cfg = json.loads(_read(args.config))
        if not isinstance(cfg, dict):
            raise CliError("grid config must be a JSON object")
    def override(key, value):
        if value is not None:
            cfg[key] = value
    override("input", args.input)
    override("out", args.out)
    override("seed", args.seed)
    override("k", args.k)
    override("min_records", args.min_records)
    override("penalty_table", args.penalty_table)
    override("jobs", args.jobs)
    if args.variants:
        cfg["variants"] = [v for chunk in args.variants for v in chunk.split(",") if v]
    if args.models:
        cfg["models"] = [m for chunk in args.models for m in chunk.split(",") if m]
    cfg.setdefault("variants", list(DEFAULT_GRID_VARIANTS))
    cfg.setdefault("models", list(DEFAULT_GRID_MODELS))
    cfg.setdefault("k", 10)
    cfg.setdefault("min_records", 100)
    cfg.setdefault("seed", 0)
    cfg.setdefault("fold_local_stats", True)
    if "jobs" not in cfg:
        cfg["jobs"] = int(os.environ.get("GLYBENCH_JOBS", "1"))
    if "out" not in cfg:
        raise CliError("no output directory: pass --out or set 'out' in the config")
    return cfg


def _evaluate_cell(task) -> tuple[tuple[str, str], EvalReport]:
    dataset, model_name, k, seed, weights, fold_local = task
    entry = builtin_registry()[model_name]
    report = evaluate(
        dataset,
        entry,
        k=k,
        seed=seed,
        penalty=PenaltyTable(weights),
        fold_local_stats=fold_local,
    )
    return (dataset.spec.id, model_name), report


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _grid_config(args)

    model_names = list(dict.fromkeys(cfg["models"]))
    if "naive" not in model_names:
        model_names.append("naive")  # reports are baseline-relative
    registry = builtin_registry()
    for name in model_names:
        if name not in registry:
            raise CliError(f"unknown model name {name!r}")
    specs = []
    for vid in cfg["variants"]:
        try:
            specs.append(spec_by_id(vid))
        except KeyError:
            raise CliError(f"unknown variant id {vid!r}") from None

    penalty_weights = dict(PenaltyTable().weights)
    if cfg.get("penalty_table"):
        penalty_weights = dict(PenaltyTable.from_json(_read(cfg["penalty_table"])).weights)

    if cfg.get("input"):
        raw = _load_cohort(cfg["input"])
    elif cfg.get("synth"):
        raw = generate(config_from_json(json.dumps(cfg["synth"])))
    else:
        raise CliError("no cohort: pass --input or set 'input'/'synth' in the config")

    out_dir = cfg["out"]
    _require_parent_dir(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    cleaned, cleaning_reports = clean_cohort(raw)
    datasets = [materialize(cleaned, spec, min_records=cfg["min_records"])
                for spec in specs]

    tasks = [
        (dataset, model_name, cfg["k"], cfg["seed"], penalty_weights,
         cfg["fold_local_stats"])
        for dataset in datasets
        for model_name in model_names
    ]
    jobs = max(1, int(cfg["jobs"]))
    results: dict[tuple[str, str], EvalReport] = {}
    if jobs == 1:
        for task in tasks:
            key, report = _evaluate_cell(task)
            results[key] = report
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for key, report in pool.map(_evaluate_cell, tasks):
                results[key] = report

    reports = [results[key] for key in sorted(results)]

    _write_atomic(os.path.join(out_dir, LONG_CSV_NAME), results_long_csv(reports))
    for metric in METRICS:
        _write_atomic(
            os.path.join(out_dir, f"long_{metric}.csv"),
            _single_metric_long(reports, metric),
        )
        _write_atomic(os.path.join(out_dir, f"wide_{metric}.csv"),
                      wide_csv(reports, metric))
        _write_atomic(os.path.join(out_dir, f"improvement_{metric}.csv"),
                      improvement_csv(reports, metric))
    ep_lines = [EP_COUNTS_CSV_HEADER]
    for pid in sorted(cleaned):
        total, ep = ep_counts(cleaned[pid])
        ep_lines.append(f"{pid},{total},{ep}")
    _write_atomic(os.path.join(out_dir, "ep_counts.csv"), "\n".join(ep_lines) + "\n")
    _write_atomic(os.path.join(out_dir, "cleaning.csv"), cleaning_csv(cleaning_reports))
    meta = {
        "version": __version__,
        "seed": cfg["seed"],
        "k": cfg["k"],
        "min_records": cfg["min_records"],
        "variants": [s.id for s in specs],
        "models": model_names,
        "fold_local_stats": cfg["fold_local_stats"],
        "penalty_table": penalty_weights,
        "excluded_patients": {
            d.spec.id: list(d.excluded_patients) for d in datasets
        },
        "slot_fallbacks": {
            f"{k[0]}/{k[1]}": results[k].metadata.get("slot_fallbacks", 0)
            for k in sorted(results)
        },
    }
    _write_atomic(os.path.join(out_dir, "run_meta.json"),
                  json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"evaluated {len(specs)} variants x {len(model_names)} models "
          f"-> {out_dir}")
    return 0


def _single_metric_long(reports: Sequence[EvalReport], metric: str) -> str:
    lines = ["model,variant,metric,patient,value"]
    for r in reports:
        for pid in sorted(r.per_patient):
            lines.append(f"{r.model},{r.variant},{metric},{pid},"
                         f"{r.per_patient[pid][metric]!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

SUMMARY_CSV_HEADER = (
    "metric,naive_error,best_error,percent_improvement,best_model,best_variant"
)


def summarize_results(long_csv: str) -> list[dict[str, object]]:
    """Best (model, variant) per metric with the naive reference value.

    Cohort values are unweighted means of the per-patient entries; the
    winner is the lowest cohort loss (ties break on model then variant
    name), and improvement is always relative to naive on the winning
    variant.
    """
    lines = [ln for ln in long_csv.splitlines() if ln.strip()]
    if not lines or lines[0] != "model,variant,metric,patient,value":
        raise CliError("results file is not a long-form results CSV")
    values: dict[tuple[str, str, str], list[float]] = {}
    for ln in lines[1:]:
        model, variant, metric, _patient, value = ln.split(",")
        values.setdefault((metric, model, variant), []).append(float(value))
    cohort = {key: sum(v) / len(v) for key, v in values.items()}
    summary = []
    for metric in METRICS:
        cells = {
            (model, variant): val
            for (m, model, variant), val in cohort.items()
            if m == metric
        }
        if not cells:
            continue
        best_model, best_variant = min(cells, key=lambda k: (cells[k], k[0], k[1]))
        best = cells[(best_model, best_variant)]
        naive = cells.get(("naive", best_variant))
        if naive is None or naive == 0.0:
            pct = 0.0 if naive == best else float("nan")
        else:
            pct = (naive - best) / naive * 100.0
        summary.append(
            {
                "metric": metric,
                "naive_error": naive,
                "best_error": best,
                "percent_improvement": pct,
                "best_model": best_model,
                "best_variant": best_variant,
            }
        )
    return summary


def cmd_report(args: argparse.Namespace) -> int:
    path = os.path.join(args.results, LONG_CSV_NAME)
    if not os.path.exists(path):
        raise CliError(f"no {LONG_CSV_NAME} in {args.results}")
    summary = summarize_results(_read(path))
    lines = [SUMMARY_CSV_HEADER]
    print(f"{'metric':<8}{'naive':>10}{'best':>10}{'improv%':>10}  "
          f"{'best model':<24}{'variant'}")
    for row in summary:
        naive = "" if row["naive_error"] is None else repr(row["naive_error"])
        lines.append(
            f"{row['metric']},{naive},{row['best_error']!r},"
            f"{row['percent_improvement']!r},{row['best_model']},{row['best_variant']}"
        )
        naive_s = "-" if row["naive_error"] is None else f"{row['naive_error']:.4f}"
        print(
            f"{row['metric']:<8}{naive_s:>10}{row['best_error']:>10.4f}"
            f"{row['percent_improvement']:>10.2f}  {row['best_model']:<24}"
            f"{row['best_variant']}"
        )
    if args.out:
        _require_parent_dir(args.out)
        _write_atomic(args.out, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glybench",
        description="meal-to-meal blood glucose prediction benchmark",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic diary cohort CSV")
    p.add_argument("--config", help="synth config JSON file")
    p.add_argument("--preset", choices=sorted(PRESETS), default="default")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="summarize a diary cohort CSV")
    p.add_argument("--input", required=True, help="cohort CSV path")
    p.add_argument("--out", help="directory for ep_counts/cleaning/variants/models CSVs")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("run", help="run the model x variant grid")
    p.add_argument("--config", help="grid config JSON file")
    p.add_argument("--input", help="cohort CSV path")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel workers (default: $GLYBENCH_JOBS or 1)")
    p.add_argument("--variants", nargs="*", help="variant ids")
    p.add_argument("--models", nargs="*", help="model names")
    p.add_argument("--k", type=int, default=None, help="folds per patient")
    p.add_argument("--min-records", dest="min_records", type=int, default=None)
    p.add_argument("--penalty-table", dest="penalty_table",
                   help="JSON file of zone -> weight")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="summarize a results directory")
    p.add_argument("results", help="directory produced by `run`")
    p.add_argument("--out", help="summary CSV path")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
