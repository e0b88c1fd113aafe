"""Shared predictor contract and the feature-space pipeline.

Every model fits on a sequence of feature rows and predicts a strictly
positive mmol/L value for a single row. All learners except the naive
baseline work on log glucose internally and exponentiate at the
boundary. The pipeline standardizes columns from training rows only
(zero-variance columns are centered and left at zero so they carry no
weight) and, for PCA variants, projects onto components fit on the
standardized training matrix.
"""

from __future__ import annotations

from typing import Optional, Protocol, Sequence

import numpy as np

from ..features import FeatureConfig, PcaModel, Vectorizer, pca_apply, pca_fit, to_log_target
from ..records import FeatureRow


class Predictor(Protocol):
    def fit(self, train: Sequence[FeatureRow]) -> None: ...

    def predict(self, x: FeatureRow) -> float: ...


def log_targets(rows: Sequence[FeatureRow]) -> np.ndarray:
    return np.array([to_log_target(r.target_bg) for r in rows])


class FeaturePipeline:
    """Vectorize -> standardize -> optionally project, fit on training rows."""

    def __init__(self, cfg: FeatureConfig, with_stacked: bool = False):
        self.cfg = cfg
        self.vectorizer = Vectorizer(cfg, with_stacked=with_stacked)
        self.mean: Optional[np.ndarray] = None
        self.scale: Optional[np.ndarray] = None
        self.pca: Optional[PcaModel] = None
        self.pca_skipped = False

    def fit(self, rows: Sequence[FeatureRow]) -> np.ndarray:
        if not rows:
            raise ValueError("cannot fit a pipeline on an empty training set")
        x = self.vectorizer.matrix(rows)
        self.mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale = scale
        z = (x - self.mean) / self.scale
        if self.cfg.pca is not None:
            k = self.cfg.pca.components
            if z.shape[0] >= k + 1 and z.shape[1] >= k:
                self.pca = pca_fit(z, components=k)
                z = pca_apply(self.pca, z)
            else:
                self.pca_skipped = True  # too few rows to estimate components
        return z

    def transform_rows(self, rows: Sequence[FeatureRow]) -> np.ndarray:
        if self.mean is None or self.scale is None:
            raise ValueError("pipeline not fitted")
        z = (self.vectorizer.matrix(rows) - self.mean) / self.scale
        if self.pca is not None:
            z = pca_apply(self.pca, z)
        return z

    def transform(self, row: FeatureRow) -> np.ndarray:
        return self.transform_rows([row])[0]
