from __future__ import annotations

import hashlib
import json
import os

import pytest

from glybench.cli import main, summarize_results
from glybench.evaluation import METRICS
from glybench.ingest import parse_diary_csv


def sha(path):
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def tree_hashes(root):
    out = {}
    for name in sorted(os.listdir(root)):
        out[name] = sha(os.path.join(root, name))
    return out


@pytest.fixture
def cohort_csv(tmp_path):
    path = tmp_path / "cohort.csv"
    assert main(["synth", "--preset", "default", "--seed", "5", "--out", str(path)]) == 0
    return path


def test_synth_writes_parseable_cohort(cohort_csv):
    cohort = parse_diary_csv(cohort_csv.read_text())
    assert len(cohort) == 5
    assert all(len(h) > 100 for h in cohort.values())


def test_synth_same_seed_same_hash(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["synth", "--seed", "9", "--out", str(a)]) == 0
    assert main(["synth", "--seed", "9", "--out", str(b)]) == 0
    assert sha(a) == sha(b)


def test_synth_missing_output_dir_exits_2(tmp_path):
    target = tmp_path / "no" / "such" / "dir" / "cohort.csv"
    assert main(["synth", "--out", str(target)]) == 2


def test_synth_config_file(tmp_path):
    cfg = tmp_path / "synth.json"
    cfg.write_text('{"preset": "zero_signal", "patients": 2, "days": 6, "seed": 1}')
    out = tmp_path / "cohort.csv"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    cohort = parse_diary_csv(out.read_text())
    assert len(cohort) == 2


def test_inspect_writes_reports(cohort_csv, tmp_path, capsys):
    out = tmp_path / "inspect"
    out.mkdir()
    assert main(["inspect", "--input", str(cohort_csv), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "patient" in printed
    ep_lines = (out / "ep_counts.csv").read_text().strip().splitlines()
    assert ep_lines[0] == "patient_id,total,ep_count"
    assert len(ep_lines) == 6
    for line in ep_lines[1:]:
        _pid, total, ep = line.split(",")
        assert 0 <= int(ep) <= int(total)
    assert (out / "cleaning.csv").exists()
    assert (out / "variants.csv").exists()
    assert (out / "models.csv").exists()


def _run_small_grid(cohort_csv, out_dir, seed="3"):
    return main(
        [
            "run",
            "--input", str(cohort_csv),
            "--out", str(out_dir),
            "--variants", "D_a6,D_e6",
            "--models", "naive,ridge",
            "--k", "5",
            "--min-records", "20",
            "--seed", seed,
        ]
    )


def test_run_emits_all_metric_tables(cohort_csv, tmp_path):
    out = tmp_path / "results"
    assert _run_small_grid(cohort_csv, out) == 0
    for metric in METRICS:
        assert (out / f"wide_{metric}.csv").exists()
        assert (out / f"long_{metric}.csv").exists()
        assert (out / f"improvement_{metric}.csv").exists()
    assert (out / "results_long.csv").exists()
    assert (out / "ep_counts.csv").exists()
    assert (out / "cleaning.csv").exists()
    meta = json.loads((out / "run_meta.json").read_text())
    assert meta["variants"] == ["D_a6", "D_e6"]
    assert meta["seed"] == 3


def test_run_unknown_model_exits_2_naming_it(cohort_csv, tmp_path, capsys):
    code = main(
        ["run", "--input", str(cohort_csv), "--out", str(tmp_path / "r"),
         "--models", "naive,svr9", "--variants", "D_a6"]
    )
    assert code == 2
    assert "svr9" in capsys.readouterr().err


def test_run_unknown_variant_exits_2(cohort_csv, tmp_path, capsys):
    code = main(
        ["run", "--input", str(cohort_csv), "--out", str(tmp_path / "r"),
         "--models", "naive", "--variants", "D_e99"]
    )
    assert code == 2
    assert "D_e99" in capsys.readouterr().err


def test_run_rerun_is_byte_identical(cohort_csv, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert _run_small_grid(cohort_csv, out1) == 0
    assert _run_small_grid(cohort_csv, out2) == 0
    assert tree_hashes(out1) == tree_hashes(out2)


def test_run_parallel_jobs_match_sequential(cohort_csv, tmp_path):
    seq, par = tmp_path / "seq", tmp_path / "par"
    base = [
        "run", "--input", str(cohort_csv), "--variants", "D_a6,D_e6",
        "--models", "naive,ridge", "--k", "5", "--min-records", "20",
        "--seed", "3",
    ]
    assert main(base + ["--out", str(seq), "--jobs", "1"]) == 0
    assert main(base + ["--out", str(par), "--jobs", "2"]) == 0
    assert tree_hashes(seq) == tree_hashes(par)


def test_jobs_env_var_fallback(cohort_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("GLYBENCH_JOBS", "2")
    out = tmp_path / "envjobs"
    assert _run_small_grid(cohort_csv, out) == 0
    assert (out / "results_long.csv").exists()


def test_run_custom_penalty_table(cohort_csv, tmp_path):
    table = tmp_path / "weights.json"
    table.write_text('{"A": 1, "B": 9, "C": 9, "D": 9, "E": 9}')
    default_out, custom_out = tmp_path / "dflt", tmp_path / "custom"
    base = [
        "run", "--input", str(cohort_csv), "--variants", "D_a6",
        "--models", "naive", "--k", "5", "--min-records", "20", "--seed", "3",
    ]
    assert main(base + ["--out", str(default_out)]) == 0
    assert main(base + ["--out", str(custom_out), "--penalty-table", str(table)]) == 0
    # plain losses unaffected, penalty-weighted ones responding to the table
    assert (default_out / "wide_L1.csv").read_text() == (
        custom_out / "wide_L1.csv"
    ).read_text()
    assert (default_out / "wide_gMAD.csv").read_text() != (
        custom_out / "wide_gMAD.csv"
    ).read_text()


def test_run_rejects_bad_penalty_table(cohort_csv, tmp_path, capsys):
    table = tmp_path / "weights.json"
    table.write_text('{"A": 1, "B": 0.5, "C": 4, "D": 6, "E": 8}')
    code = main(
        ["run", "--input", str(cohort_csv), "--out", str(tmp_path / "r"),
         "--models", "naive", "--variants", "D_a6",
         "--penalty-table", str(table)]
    )
    assert code == 2
    assert "below 1" in capsys.readouterr().err


def test_run_grid_config_file_with_flag_overrides(cohort_csv, tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(
        json.dumps(
            {
                "input": str(cohort_csv),
                "variants": ["D_a6"],
                "models": ["naive"],
                "k": 5,
                "min_records": 20,
            }
        )
    )
    out = tmp_path / "results"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "results_long.csv").exists()


def test_run_with_inline_synth_config(tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(
        json.dumps(
            {
                "synth": {"preset": "high_signal", "patients": 3, "days": 20,
                          "seed": 4},
                "variants": ["D_a6"],
                "models": ["naive", "ridge"],
                "k": 5,
                "min_records": 20,
                "seed": 4,
                "out": str(tmp_path / "results"),
            }
        )
    )
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "results" / "wide_L1.csv").exists()


def test_report_summarizes_best_model(cohort_csv, tmp_path, capsys):
    out = tmp_path / "results"
    assert _run_small_grid(cohort_csv, out) == 0
    capsys.readouterr()
    assert main(["report", str(out), "--out", str(tmp_path / "summary.csv")]) == 0
    printed = capsys.readouterr().out
    assert "L1" in printed
    summary = (tmp_path / "summary.csv").read_text().strip().splitlines()
    assert summary[0].startswith("metric,naive_error,best_error")
    assert len(summary) == 1 + len(METRICS)


def test_report_on_missing_dir_exits_2(tmp_path, capsys):
    assert main(["report", str(tmp_path / "nope")]) == 2


def test_summarize_results_hand_fixture():
    long_csv = "\n".join(
        [
            "model,variant,metric,patient,value",
            "naive,D_a6,L1,p1,4.0",
            "naive,D_a6,L1,p2,4.0",
            "ridge,D_a6,L1,p1,3.5",
            "ridge,D_a6,L1,p2,2.5",
            "naive,D_e6,L1,p1,5.0",
            "naive,D_e6,L1,p2,5.0",
            "ridge,D_e6,L1,p1,4.5",
            "ridge,D_e6,L1,p2,4.5",
        ]
    )
    rows = summarize_results(long_csv)
    assert len(rows) == 1
    row = rows[0]
    # ridge on D_a6 has cohort mean 3.0, the minimum; naive there is 4.0
    assert row["best_model"] == "ridge"
    assert row["best_variant"] == "D_a6"
    assert row["best_error"] == pytest.approx(3.0)
    assert row["naive_error"] == pytest.approx(4.0)
    assert row["percent_improvement"] == pytest.approx(25.0)


def test_summarize_naive_only_run_improves_zero():
    long_csv = "\n".join(
        [
            "model,variant,metric,patient,value",
            "naive,D_a6,L1,p1,4.0",
            "naive,D_a6,L1,p2,6.0",
        ]
    )
    rows = summarize_results(long_csv)
    assert rows[0]["best_model"] == "naive"
    assert rows[0]["percent_improvement"] == 0.0
