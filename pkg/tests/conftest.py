from __future__ import annotations

import datetime as dt

import pytest

from glybench.records import (
    DiaryRecord,
    ExerciseLevel,
    MealSlot,
    PatientHistory,
    StaticInfo,
)


def rec(
    date: str,
    time: str,
    meal: MealSlot,
    bg=None,
    cho=None,
    bolus=None,
    basal=None,
    ev=None,
    pv=0.0,
) -> DiaryRecord:
    return DiaryRecord(
        meal=meal,
        date=dt.date.fromisoformat(date) if date else None,
        time=dt.time.fromisoformat(time) if time else None,
        bg=bg,
        cho=cho,
        bolus=bolus,
        basal=basal,
        ev=ev,
        pv=pv,
    )


def history(pid: str, records, static: StaticInfo | None = None) -> PatientHistory:
    return PatientHistory(pid, tuple(records), static)


@pytest.fixture
def single_day() -> PatientHistory:
    """One day of six entries with a mid-morning bolus still on board."""
    return history(
        "p16",
        [
            rec("2015-11-25", "08:36:00", MealSlot.BeforeBreakfast,
                bg=16.2, cho=30.0, bolus=10.4, basal=0.0, ev=ExerciseLevel.Normal, pv=0.50),
            rec("2015-11-25", "10:19:00", MealSlot.AfterBreakfast,
                bg=14.7, cho=0.0, bolus=0.0, basal=0.0, ev=ExerciseLevel.Normal, pv=0.50),
            rec("2015-11-25", "12:19:00", MealSlot.BeforeLunch,
                bg=5.6, cho=30.0, bolus=3.0, basal=0.0, ev=ExerciseLevel.Normal, pv=0.63),
            rec("2015-11-25", "15:35:00", MealSlot.AfterLunch,
                bg=6.8, cho=0.0, bolus=0.0, basal=0.0, ev=ExerciseLevel.Normal, pv=0.45),
            rec("2015-11-25", "18:42:00", MealSlot.BeforeSupper,
                bg=10.5, cho=15.0, bolus=3.8, basal=0.0, ev=ExerciseLevel.Normal, pv=0.90),
            rec("2015-11-25", "20:11:00", MealSlot.AfterSupper,
                bg=3.0, cho=0.0, bolus=0.0, basal=0.0, ev=ExerciseLevel.Normal, pv=0.90),
        ],
    )


def ep_fixture(days_with_both: int, prev_bg: float = 6.0) -> tuple[PatientHistory, int]:
    """History where `days_with_both` of the 8 days before the target carry
    both an after-breakfast and a before-lunch entry; returns (history, index
    of the target before-lunch record)."""
    records = []
    base = dt.date(2016, 5, 1)
    for d in range(8):
        date = (base + dt.timedelta(days=d)).isoformat()
        records.append(rec(date, "09:30:00", MealSlot.AfterBreakfast, bg=7.0, cho=0.0, bolus=0.0))
        if d < days_with_both:
            records.append(rec(date, "12:00:00", MealSlot.BeforeLunch, bg=6.5, cho=40.0, bolus=4.0))
    target_date = (base + dt.timedelta(days=8)).isoformat()
    records.append(rec(target_date, "09:30:00", MealSlot.AfterBreakfast, bg=prev_bg, cho=0.0, bolus=0.0))
    records.append(rec(target_date, "12:00:00", MealSlot.BeforeLunch, bg=5.8, cho=40.0, bolus=4.0))
    h = history("ep", records)
    return h, len(records) - 1
