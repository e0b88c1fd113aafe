"""Feature engineering: insulin-on-board, row assembly, encodings, PCA.

Feature rows pair consecutive diary records: the features describe the
state at record i, the target is the glucose reading at record i+1.
Insulin on board decays along a monotone cubic through published
(elapsed time, fraction remaining) points and is summed over every bolus
in the trailing five hours.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .records import FeatureRow, PatientHistory

# (elapsed hours, fraction of injected insulin still active)
IOB_KNOTS: tuple[tuple[float, float], ...] = (
    (0.0, 1.00),
    (1.66, 0.78),
    (2.50, 0.48),
    (3.33, 0.27),
    (4.15, 0.12),
    (5.00, 0.03),
)

IOB_WINDOW_MINUTES = 300.0

_IOB_SPLINE = PchipInterpolator(
    np.array([k[0] for k in IOB_KNOTS]),
    np.array([k[1] for k in IOB_KNOTS]),
)


def iob_fraction(elapsed_minutes: float) -> float:
    """Fraction of a bolus still active ``elapsed_minutes`` after injection.

    Interpolates the decay knots with a shape-preserving cubic (so the
    curve is monotone non-increasing and cannot overshoot) and clamps to
    zero beyond the five-hour window.
    """
    if elapsed_minutes < 0:
        raise ValueError(f"elapsed_minutes must be >= 0, got {elapsed_minutes}")
    if elapsed_minutes > IOB_WINDOW_MINUTES:
        return 0.0
    return float(_IOB_SPLINE(elapsed_minutes / 60.0))


def compute_iob(h: PatientHistory, i: int) -> float:
    """Units of insulin still active at record ``i`` from earlier boluses.

    Contributions are additive over all strictly-earlier records with a
    positive bolus inside the trailing five-hour window; the record's own
    bolus does not count.
    """
    t_i = h.records[i].timestamp()
    total = 0.0
    for j in range(i - 1, -1, -1):
        r = h.records[j]
        elapsed = (t_i - r.timestamp()).total_seconds() / 60.0
        if elapsed > IOB_WINDOW_MINUTES:
            break
        if r.bolus is not None and r.bolus > 0:
            total += r.bolus * iob_fraction(elapsed)
    return total


class DowMode(Enum):
    Omit = "Omit"
    Integer = "Integer"
    OneHot = "OneHot"


def encode_dow(date: dt.date, mode: DowMode) -> tuple[float, ...]:
    """Day-of-week feature values: none, one integer (Monday=0), or a one-hot 7-vector."""
    if mode is DowMode.Omit:
        return ()
    wd = date.weekday()
    if mode is DowMode.Integer:
        return (float(wd),)
    onehot = [0.0] * 7
    onehot[wd] = 1.0
    return tuple(onehot)


def to_log_target(bg: float) -> float:
    """Log-space target; cleaning guarantees bg >= 1 so this never fires."""
    if bg < 1.0:
        raise ValueError(f"bg must be >= 1.0 mmol/L, got {bg}")
    return math.log(bg)


def from_log(pred: float) -> float:
    return math.exp(pred)


@dataclass(frozen=True)
class PcaConfig:
    components: int = 4


@dataclass(frozen=True)
class FeatureConfig:
    """Which optional features a dataset variant carries."""

    dow_mode: DowMode = DowMode.Integer
    include_basal: bool = True
    include_static: bool = False
    pca: Optional[PcaConfig] = None
    static_defaults: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


def static_tuple(
    h: PatientHistory, defaults: tuple[float, float, float, float]
) -> tuple[float, float, float, float]:
    """(age, sex01, height, weight) with missing entries from cohort defaults."""
    s = h.static
    if s is None:
        return defaults
    sex01 = defaults[1]
    if s.sex is not None:
        sex01 = 1.0 if s.sex.upper().startswith("M") else 0.0
    return (
        float(s.age) if s.age is not None else defaults[0],
        sex01,
        float(s.height) if s.height is not None else defaults[2],
        float(s.weight) if s.weight is not None else defaults[3],
    )


def cohort_static_defaults(
    cohort: Sequence[PatientHistory],
) -> tuple[float, float, float, float]:
    """Cohort means of the static fields, for filling gaps (e.g. missing height)."""
    cols: list[list[float]] = [[], [], [], []]
    for h in cohort:
        s = h.static
        if s is None:
            continue
        if s.age is not None:
            cols[0].append(float(s.age))
        if s.sex is not None:
            cols[1].append(1.0 if s.sex.upper().startswith("M") else 0.0)
        if s.height is not None:
            cols[2].append(float(s.height))
        if s.weight is not None:
            cols[3].append(float(s.weight))
    return tuple(sum(c) / len(c) if c else 0.0 for c in cols)  # type: ignore[return-value]


def build_feature_rows(h: PatientHistory, cfg: FeatureConfig) -> list[FeatureRow]:
    """One row per consecutive record pair of a cleaned, imputed history.

    Fewer than two records yields an empty list. The previous-event
    features look strictly backward: a record's own carbs or bolus never
    reference themselves, so the elapsed-time features stay positive.
    """
    records = h.records
    n = len(records)
    if n < 2:
        return []
    static = static_tuple(h, cfg.static_defaults) if cfg.include_static else None

    rows: list[FeatureRow] = []
    last_cho: Optional[int] = None    # index of last record with positive cho
    last_bolus: Optional[int] = None
    for i in range(n - 1):
        r, nxt = records[i], records[i + 1]
        t_i = r.timestamp()
        horizon = (nxt.timestamp() - t_i).total_seconds() / 60.0

        if last_cho is not None:
            ev_rec = records[last_cho]
            cho_prev = float(ev_rec.cho)  # type: ignore[arg-type]
            bg_at_cho = float(ev_rec.bg)  # type: ignore[arg-type]
            dt_cho = (t_i - ev_rec.timestamp()).total_seconds() / 60.0
        else:
            # no event on file yet: zero amount, "long ago" elapsed time
            cho_prev, bg_at_cho, dt_cho = 0.0, float(r.bg), IOB_WINDOW_MINUTES  # type: ignore[arg-type]
        if last_bolus is not None:
            ev_rec = records[last_bolus]
            bolus_prev = float(ev_rec.bolus)  # type: ignore[arg-type]
            bg_at_bolus = float(ev_rec.bg)  # type: ignore[arg-type]
            dt_bolus = (t_i - ev_rec.timestamp()).total_seconds() / 60.0
        else:
            bolus_prev, bg_at_bolus, dt_bolus = 0.0, float(r.bg), IOB_WINDOW_MINUTES  # type: ignore[arg-type]

        rows.append(
            FeatureRow(
                meal=r.meal,
                dow=r.date.weekday(),  # type: ignore[union-attr]
                ev=float(r.ev.numeric_value if r.ev is not None else 4),
                pv=float(r.pv),
                basal=float(r.basal if r.basal is not None else 0.0),
                bg=float(r.bg),  # type: ignore[arg-type]
                iob=compute_iob(h, i),
                cho_prev=cho_prev,
                bolus_prev=bolus_prev,
                bg_at_cho=bg_at_cho,
                bg_at_bolus=bg_at_bolus,
                dt_cho=dt_cho,
                dt_bolus=dt_bolus,
                horizon_dt=horizon,
                target_bg=float(nxt.bg),  # type: ignore[arg-type]
                static=static,
            )
        )
        if r.cho is not None and r.cho > 0:
            last_cho = i
        if r.bolus is not None and r.bolus > 0:
            last_bolus = i
    return rows


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray   # (k, n_features) rows are eigenvectors
    rank_deficient: bool


def pca_fit(rows: np.ndarray, components: int = 4) -> PcaModel:
    """Top eigenvectors of the column-centered covariance.

    Requires at least ``components + 1`` rows and ``components`` columns.
    If the data has lower rank, the missing directions are padded with
    zero vectors and the model is flagged.
    """
    x = np.asarray(rows, dtype=float)
    if x.ndim != 2 or x.shape[0] < components + 1 or x.shape[1] < components:
        raise ValueError(
            f"need >= {components + 1} rows and >= {components} columns, got {x.shape}"
        )
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    tol = max(eigvals[0], 0.0) * 1e-12 if eigvals.size else 0.0
    keep = min(components, int(np.sum(eigvals > tol)))
    comps = np.zeros((components, x.shape[1]))
    comps[:keep] = eigvecs[:, :keep].T
    return PcaModel(mean=mean, components=comps, rank_deficient=keep < components)


def pca_apply(model: PcaModel, row: np.ndarray) -> np.ndarray:
    """Project one centered row (or a matrix of rows) onto the components."""
    x = np.asarray(row, dtype=float)
    return (x - model.mean) @ model.components.T


# ---------------------------------------------------------------------------
# Design-matrix vectorization
# ---------------------------------------------------------------------------

class Vectorizer:
    """Maps feature rows to the numeric design matrix a model consumes.

    Column layout: meal ordinal, day-of-week per mode, exercise, pump
    rate, basal (when included), glucose, insulin on board, previous
    carbs/bolus with their glucose-at and minutes-since values, the
    prediction horizon, then optional static and stacked columns.
    """

    def __init__(self, cfg: FeatureConfig, with_stacked: bool = False):
        self.cfg = cfg
        self.with_stacked = with_stacked

    def column_names(self) -> list[str]:
        names = ["meal"]
        if self.cfg.dow_mode is DowMode.Integer:
            names.append("dow")
        elif self.cfg.dow_mode is DowMode.OneHot:
            names.extend(f"dow_{d}" for d in range(7))
        names.extend(["ev", "pv"])
        if self.cfg.include_basal:
            names.append("basal")
        names.extend(
            ["bg", "iob", "cho_prev", "bolus_prev", "bg_at_cho",
             "bg_at_bolus", "dt_cho", "dt_bolus", "horizon_dt"]
        )
        if self.cfg.include_static:
            names.extend(["age", "sex", "height", "weight"])
        if self.with_stacked:
            names.append("stacked")
        return names

    def vector(self, row: FeatureRow) -> np.ndarray:
        values: list[float] = [float(row.meal.value)]
        if self.cfg.dow_mode is not DowMode.Omit:
            wd = row.dow
            if self.cfg.dow_mode is DowMode.Integer:
                values.append(float(wd))
            else:
                values.extend(1.0 if d == wd else 0.0 for d in range(7))
        values.extend([row.ev, row.pv])
        if self.cfg.include_basal:
            values.append(row.basal)
        values.extend(
            [row.bg, row.iob, row.cho_prev, row.bolus_prev, row.bg_at_cho,
             row.bg_at_bolus, row.dt_cho, row.dt_bolus, row.horizon_dt]
        )
        if self.cfg.include_static:
            values.extend(row.static if row.static is not None else self.cfg.static_defaults)
        if self.with_stacked:
            if row.stacked is None:
                raise ValueError("row lacks the stacked feature")
            values.append(row.stacked)
        return np.array(values, dtype=float)

    def matrix(self, rows: Sequence[FeatureRow]) -> np.ndarray:
        if not rows:
            return np.empty((0, len(self.column_names())))
        return np.vstack([self.vector(r) for r in rows])


def with_stacked(row: FeatureRow, value: float) -> FeatureRow:
    return replace(row, stacked=value)
