"""Diary CSV parsing, cleaning and imputation.

Cleaning drops records with no glucose reading or no date, and clamps
readings below 1 mmol/L up to 1 (meters are unreliable down there).
Imputation fills missing carbohydrate/bolus values per policy; means are
always computed from the history actually passed in, so a caller that
passes only training-time records gets leakage-free means.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional

from .records import (
    DiaryRecord,
    ExerciseLevel,
    MealSlot,
    PatientHistory,
    SchemaError,
    parse_record,
)


class MissingPolicy(Enum):
    Throwout = "Throwout"
    ImputeMean = "ImputeMean"
    ImputeZero = "ImputeZero"


@dataclass(frozen=True)
class ImputationPolicy:
    """How to fill missing carbs and bolus; exercise and basal defaults are fixed."""

    cho: MissingPolicy = MissingPolicy.ImputeMean
    bolus: MissingPolicy = MissingPolicy.ImputeMean
    ev_default: ExerciseLevel = ExerciseLevel.Normal
    basal_default: float = 0.0


@dataclass(frozen=True)
class CleaningReport:
    dropped_missing_bg: int = 0
    dropped_missing_date: int = 0
    clamped_low_bg: int = 0

    def csv_row(self, patient_id: str) -> str:
        return (
            f"{patient_id},{self.dropped_missing_bg},"
            f"{self.dropped_missing_date},{self.clamped_low_bg}"
        )


CLEANING_CSV_HEADER = "patient_id,dropped_missing_bg,dropped_missing_date,clamped_low_bg"


def parse_diary_csv(data: bytes | str) -> dict[str, PatientHistory]:
    """Parse raw diary CSV into per-patient histories sorted by timestamp.

    Raises :class:`SchemaError` naming line number and column on any
    malformed row. Records lacking a date sort first for their patient
    (cleaning removes them anyway).
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines:
        return {}
    if lines[0].strip() != (
        "patient_id,meal,date,time,bg,cho,bolus,basal,ev,pv"
    ):
        raise SchemaError(1, "header", f"unexpected header {lines[0]!r}")
    grouped: dict[str, list[DiaryRecord]] = {}
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        pid, record = parse_record(n, line)
        grouped.setdefault(pid, []).append(record)

    def sort_key(r: DiaryRecord) -> dt.datetime:
        t = r.time if r.time is not None else dt.time(0, 0)
        return dt.datetime.combine(r.date, t)

    out: dict[str, PatientHistory] = {}
    for pid, records in grouped.items():
        with_ts = [r for r in records if r.date is not None]
        without_ts = [r for r in records if r.date is None]
        with_ts.sort(key=sort_key)
        out[pid] = PatientHistory(pid, tuple(without_ts + with_ts))
    return out


def clean(h: PatientHistory) -> tuple[PatientHistory, CleaningReport]:
    """Drop unlabeled records and clamp implausibly low glucose readings."""
    kept: list[DiaryRecord] = []
    dropped_bg = dropped_date = clamped = 0
    for r in h.records:
        if r.bg is None:
            dropped_bg += 1
            continue
        if r.date is None:
            dropped_date += 1
            continue
        if r.bg < 1.0:
            r = replace(r, bg=1.0)
            clamped += 1
        kept.append(r)
    report = CleaningReport(dropped_bg, dropped_date, clamped)
    return PatientHistory(h.patient_id, tuple(kept), h.static), report


def _slot_means(records: tuple[DiaryRecord, ...], field: str) -> dict[MealSlot, float]:
    sums: dict[MealSlot, float] = {}
    counts: dict[MealSlot, int] = {}
    for r in records:
        v = getattr(r, field)
        if v is not None:
            sums[r.meal] = sums.get(r.meal, 0.0) + v
            counts[r.meal] = counts.get(r.meal, 0) + 1
    return {slot: sums[slot] / counts[slot] for slot in sums}


def _overall_mean(records: tuple[DiaryRecord, ...], field: str) -> Optional[float]:
    values = [getattr(r, field) for r in records if getattr(r, field) is not None]
    if not values:
        return None
    return sum(values) / len(values)


def field_means(
    records: tuple[DiaryRecord, ...], field: str
) -> tuple[dict[MealSlot, float], Optional[float]]:
    """Per-meal-slot and overall means of the present values of a field."""
    return _slot_means(records, field), _overall_mean(records, field)


def _fill(
    value: Optional[float],
    slot: MealSlot,
    policy: MissingPolicy,
    slot_means: dict[MealSlot, float],
    overall: Optional[float],
) -> Optional[float]:
    if value is not None:
        return value
    if policy is MissingPolicy.ImputeZero:
        return 0.0
    if policy is MissingPolicy.ImputeMean:
        if slot in slot_means:
            return slot_means[slot]
        if overall is not None:
            return overall
        return 0.0
    return None  # Throwout: caller removes the record


def impute(
    h: PatientHistory,
    policy: ImputationPolicy,
    reference: Optional[PatientHistory] = None,
) -> PatientHistory:
    """Apply the missing-value policy to a cleaned history.

    Means come from ``reference`` when given (e.g. training-fold records),
    otherwise from ``h`` itself; in either case only raw present values
    contribute, never previously imputed ones. A meal slot with no present
    values falls back to the patient-wide mean, then to 0.
    """
    source = (reference or h).records
    cho_slot, cho_all = field_means(source, "cho")
    bolus_slot, bolus_all = field_means(source, "bolus")

    kept: list[DiaryRecord] = []
    for r in h.records:
        if r.cho is None and policy.cho is MissingPolicy.Throwout:
            continue
        if r.bolus is None and policy.bolus is MissingPolicy.Throwout:
            continue
        cho = _fill(r.cho, r.meal, policy.cho, cho_slot, cho_all)
        bolus = _fill(r.bolus, r.meal, policy.bolus, bolus_slot, bolus_all)
        ev = r.ev if r.ev is not None else policy.ev_default
        basal = r.basal if r.basal is not None else policy.basal_default
        kept.append(replace(r, cho=cho, bolus=bolus, ev=ev, basal=basal))
    return PatientHistory(h.patient_id, tuple(kept), h.static)


def clean_cohort(
    cohort: Mapping[str, PatientHistory]
) -> tuple[dict[str, PatientHistory], dict[str, CleaningReport]]:
    """Clean every patient; returns (cleaned cohort, per-patient reports)."""
    cleaned: dict[str, PatientHistory] = {}
    reports: dict[str, CleaningReport] = {}
    for pid in sorted(cohort):
        cleaned[pid], reports[pid] = clean(cohort[pid])
    return cleaned, reports


def cleaning_csv(reports: Mapping[str, CleaningReport]) -> str:
    lines = [CLEANING_CSV_HEADER]
    for pid in sorted(reports):
        lines.append(reports[pid].csv_row(pid))
    return "\n".join(lines) + "\n"
