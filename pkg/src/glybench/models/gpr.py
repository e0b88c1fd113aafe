"""Gaussian process regression and the confidence-weighted ensemble.

The GP uses a unit-variance RBF kernel with length scale 1 on
standardized features, a constant nugget added to the kernel diagonal
for observation noise, and the training log-target mean as its prior
mean. Posterior mean and standard deviation come from a Cholesky solve
of the nugget-augmented kernel matrix.

The ensemble blends a patient-wide GP with a per-meal-slot GP, weighting
each by the reciprocal of its posterior standard deviation at the query
point, so the more confident member dominates. The blend happens in log
space and is exponentiated at the boundary.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..features import FeatureConfig, from_log
from ..records import FeatureRow, MealSlot
from .base import FeaturePipeline, log_targets

DEFAULT_NUGGET = 0.25


def rbf_kernel(a: np.ndarray, b: np.ndarray, length_scale: float = 1.0) -> np.ndarray:
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d2 = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    return np.exp(-0.5 * np.maximum(d2, 0.0) / length_scale**2)


class GprCore:
    """Posterior mean and standard deviation over standardized inputs."""

    def __init__(
        self,
        nugget: float = DEFAULT_NUGGET,
        length_scale: float = 1.0,
        prior_mean: Optional[float] = None,
    ):
        self.nugget = nugget
        self.length_scale = length_scale
        self.prior_mean = prior_mean
        self._z: Optional[np.ndarray] = None
        self._factor = None
        self._alpha: Optional[np.ndarray] = None
        self._mean = 0.0

    def fit(self, z: np.ndarray, y: np.ndarray) -> None:
        if len(y) == 0:
            raise ValueError("gpr needs at least one training row")
        self._z = np.atleast_2d(np.asarray(z, float))
        y = np.asarray(y, float)
        self._mean = self.prior_mean if self.prior_mean is not None else float(y.mean())
        k = rbf_kernel(self._z, self._z, self.length_scale)
        k[np.diag_indices_from(k)] += self.nugget
        self._factor = cho_factor(k)
        self._alpha = cho_solve(self._factor, y - self._mean)

    def posterior(self, q: np.ndarray) -> tuple[float, float]:
        """(posterior mean, posterior standard deviation) at one query point."""
        means, sigmas = self.posterior_many(np.atleast_2d(q))
        return float(means[0]), float(sigmas[0])

    def posterior_many(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior means and standard deviations for a batch of queries."""
        if self._z is None or self._alpha is None:
            raise ValueError("gpr not fitted")
        k_star = rbf_kernel(np.atleast_2d(q), self._z, self.length_scale)
        means = self._mean + k_star @ self._alpha
        solved = cho_solve(self._factor, k_star.T)
        var = 1.0 - np.sum(k_star.T * solved, axis=0)
        return means, np.sqrt(np.maximum(var, 0.0))


class GprPredictor:
    """Patient-wide GP regression; predicts mmol/L, keeps sigma in log space."""

    def __init__(
        self,
        cfg: FeatureConfig,
        with_stacked: bool = False,
        nugget: float = DEFAULT_NUGGET,
    ):
        self.pipeline = FeaturePipeline(cfg, with_stacked)
        self.core = GprCore(nugget=nugget)
        self._fitted = False

    def fit(self, train: Sequence[FeatureRow]) -> None:
        if not train:
            raise ValueError("gpr needs at least one training row")
        z = self.pipeline.fit(train)
        self.core.fit(z, log_targets(train))
        self._fitted = True

    def predict_with_sigma(self, x: FeatureRow) -> tuple[float, float]:
        if not self._fitted:
            raise ValueError("predictor not fitted")
        mean, sigma = self.core.posterior(self.pipeline.transform(x))
        return from_log(mean), sigma

    def predict(self, x: FeatureRow) -> float:
        return self.predict_with_sigma(x)[0]

    def predict_many(self, rows: Sequence[FeatureRow]) -> list[float]:
        if not self._fitted:
            raise ValueError("predictor not fitted")
        means, _ = self.core.posterior_many(self.pipeline.transform_rows(rows))
        return [from_log(float(m)) for m in means]


def convex_combine(mu_p: float, mu_m: float, alpha: float, beta: float) -> float:
    """Weighted average (alpha*mu_p + beta*mu_m) / (alpha + beta)."""
    return (alpha * mu_p + beta * mu_m) / (alpha + beta)


def weighted_log_mean(
    mu_p: float, sigma_p: float, mu_m: float, sigma_m: float
) -> float:
    """Blend two log-space predictions with reciprocal-sigma weights.

    A member with zero sigma is trusted exclusively; if both are zero the
    members average equally.
    """
    if sigma_p <= 0.0 and sigma_m <= 0.0:
        return 0.5 * (mu_p + mu_m)
    if sigma_p <= 0.0:
        return mu_p
    if sigma_m <= 0.0:
        return mu_m
    return convex_combine(mu_p, mu_m, 1.0 / sigma_p, 1.0 / sigma_m)


class WeightedGprEnsemble:
    """Patient-wide GP blended with a per-meal-slot GP by posterior confidence.

    Both members share one standardization so their sigmas are
    comparable. Queries whose slot has no fitted member fall back to the
    patient-wide GP alone (counted in ``fallback_count``).
    """

    def __init__(
        self,
        cfg: FeatureConfig,
        with_stacked: bool = False,
        nugget: float = DEFAULT_NUGGET,
    ):
        self.pipeline = FeaturePipeline(cfg, with_stacked)
        self.nugget = nugget
        self.core_p = GprCore(nugget=nugget)
        self.core_m: dict[MealSlot, GprCore] = {}
        self.fallback_count = 0
        self._fitted = False

    def fit(self, train: Sequence[FeatureRow]) -> None:
        if not train:
            raise ValueError("ensemble needs at least one training row")
        z = self.pipeline.fit(train)
        y = log_targets(train)
        self.core_p.fit(z, y)
        self.core_m = {}
        slots = sorted({r.meal for r in train}, key=lambda s: s.value)
        for slot in slots:
            idx = [i for i, r in enumerate(train) if r.meal is slot]
            core = GprCore(nugget=self.nugget)
            core.fit(z[idx], y[idx])
            self.core_m[slot] = core
        self.fallback_count = 0
        self._fitted = True

    def predict(self, x: FeatureRow) -> float:
        return self.predict_many([x])[0]

    def predict_many(self, rows: Sequence[FeatureRow]) -> list[float]:
        if not self._fitted:
            raise ValueError("predictor not fitted")
        q = self.pipeline.transform_rows(rows)
        mu_p, sigma_p = self.core_p.posterior_many(q)
        out: list[Optional[float]] = [None] * len(rows)
        by_slot: dict[MealSlot, list[int]] = {}
        for i, row in enumerate(rows):
            if row.meal in self.core_m:
                by_slot.setdefault(row.meal, []).append(i)
            else:
                self.fallback_count += 1
                out[i] = from_log(float(mu_p[i]))
        for slot, idx in by_slot.items():
            mu_m, sigma_m = self.core_m[slot].posterior_many(q[idx])
            for pos, i in enumerate(idx):
                blended = weighted_log_mean(
                    float(mu_p[i]), float(sigma_p[i]),
                    float(mu_m[pos]), float(sigma_m[pos]),
                )
                out[i] = from_log(blended)
        return out  # type: ignore[return-value]
