# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # The model zoo and the confidence-weighted ensemble
#
# Every predictor fits on feature rows and returns mmol/L. Internally all
# of them (except the naive baseline, which is the plain mean of the raw
# training targets) regress the log of glucose and exponentiate on the
# way out.

# %%
from glybench import generate, high_signal_config, materialize, spec_by_id
from glybench.ingest import clean_cohort
from glybench.models import builtin_registry, registry_csv

print(registry_csv(), end="")

# %%
cleaned, _ = clean_cohort(generate(high_signal_config(patients=2, days=30, seed=5)))
dataset = materialize(cleaned, spec_by_id("D_a6"), min_records=20)
pid = sorted(dataset.per_patient)[0]
rows = list(dataset.per_patient[pid])
train, test = rows[:-12], rows[-12:]
cfg = dataset.feature_config

registry = builtin_registry()
for name in ("naive", "ridge", "KNN10U", "rf4", "gpr_IndPat_AllMeals", "gpr_be"):
    model = registry[name].build(cfg, seed=1)
    model.fit(train)
    preds = [model.predict(r) for r in test[:4]]
    print(f"{name:22s}", " ".join(f"{p:6.2f}" for p in preds),
          f"  (targets {' '.join(f'{r.target_bg:5.1f}' for r in test[:4])})")

# %% [markdown]
# ## How the weighted ensemble blends its members
#
# Two Gaussian processes are fit per patient: one on everything, one per
# meal slot. At a query point each reports a posterior mean and standard
# deviation; the blend weights each mean by the reciprocal of its sigma,
# so whichever member is more certain dominates. Everything happens in
# log space.

# %%
import math

from glybench.models import WeightedGprEnsemble, weighted_log_mean

ens = WeightedGprEnsemble(cfg)
ens.fit(train)
query = test[0]
q = ens.pipeline.transform(query)
mu_p, sigma_p = ens.core_p.posterior(q)
mu_m, sigma_m = ens.core_m[query.meal].posterior(q)
blended = weighted_log_mean(mu_p, sigma_p, mu_m, sigma_m)
print(f"patient-wide member:  mean {math.exp(mu_p):6.2f}  sigma {sigma_p:.3f}")
print(f"per-meal member:      mean {math.exp(mu_m):6.2f}  sigma {sigma_m:.3f}")
print(f"blend:                {math.exp(blended):6.2f}  "
      f"(ensemble.predict -> {ens.predict(query):6.2f}, target {query.target_bg:.1f})")

# %% [markdown]
# A worked example of the weighting itself: with log-space means 6 and 8
# and sigmas 1 and 2, the weights are 1 and 0.5, giving (6 + 4) / 1.5.

# %%
print(weighted_log_mean(6.0, 1.0, 8.0, 2.0))
