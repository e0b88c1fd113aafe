"""The expert-predictable (EP) filter.

A record's glucose value counts as expert predictable when a clinician
would be comfortable predicting it from the diary alone:

1. the preceding record is not hypoglycemic (>= 4 mmol/L),
2. a glucose reading exists for the preceding record, and
3. at least six of the eight calendar days before the record's date have
   entries for both the record's meal slot and the preceding one, so the
   slot-to-slot transition has recent precedent.

The eight-day window is literal calendar days by default; set
``window_recorded_dates`` to count back over the patient's eight most
recent recorded dates instead.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

from .records import MealSlot, PatientHistory

HYPO_THRESHOLD_MMOLL = 4.0

PREV_HYPO = "PrevHypo"
PREV_MEAL_MISSING = "PrevMealMissing"
SIX_OF_EIGHT = "SixOfEight"


@dataclass(frozen=True)
class EpDecision:
    predictable: bool
    failed_rules: frozenset[str] = field(default_factory=frozenset)


def _window_dates(
    h: PatientHistory, before: dt.date, recorded_dates: bool
) -> list[dt.date]:
    if not recorded_dates:
        return [before - dt.timedelta(days=d) for d in range(1, 9)]
    seen = sorted({r.date for r in h.records if r.date is not None and r.date < before})
    return seen[-8:]


def is_expert_predictable(
    h: PatientHistory, i: int, window_recorded_dates: bool = False
) -> EpDecision:
    """Decide whether the glucose at record ``i`` is expert predictable.

    Only looks at records strictly before index ``i`` and dates strictly
    before its date, so the decision is free of look-ahead. ``i == 0``
    fails the preceding-meal rule by construction.
    """
    failed: set[str] = set()
    if i == 0:
        return EpDecision(False, frozenset({PREV_MEAL_MISSING}))
    prev = h.records[i - 1]
    if prev.bg is None:
        failed.add(PREV_MEAL_MISSING)
    elif prev.bg < HYPO_THRESHOLD_MMOLL:
        failed.add(PREV_HYPO)

    current = h.records[i]
    slot_pair = (current.meal, prev.meal)
    if current.date is None:
        failed.add(SIX_OF_EIGHT)
    else:
        days = _window_dates(h, current.date, window_recorded_dates)
        coverage: dict[dt.date, set[MealSlot]] = {d: set() for d in days}
        for r in h.records:
            if r.date in coverage and r.meal in slot_pair:
                coverage[r.date].add(r.meal)
        qualifying = sum(
            1 for slots in coverage.values()
            if slot_pair[0] in slots and slot_pair[1] in slots
        )
        if qualifying < 6:
            failed.add(SIX_OF_EIGHT)

    return EpDecision(not failed, frozenset(failed))


def ep_counts(h: PatientHistory, window_recorded_dates: bool = False) -> tuple[int, int]:
    """(total records, records whose glucose is expert predictable)."""
    total = len(h.records)
    count = sum(
        1
        for i in range(total)
        if is_expert_predictable(h, i, window_recorded_dates).predictable
    )
    return total, count


EP_COUNTS_CSV_HEADER = "patient_id,total,ep_count"
