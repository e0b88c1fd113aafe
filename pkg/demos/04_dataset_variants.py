# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # The 22 built-in dataset variants
#
# A variant is a named preprocessing recipe: what to do with missing
# carbs and boluses (throw the record out, impute the per-meal mean, or
# impute zero), which optional features to carry (day of week, basal,
# patient characteristics, a 4-component PCA), and whether to keep only
# expert-predictable rows. `D_e*` ids filter, `D_a*` ids keep all rows.

# %%
from glybench import generate, high_signal_config, materialize, spec_by_id
from glybench.ingest import clean_cohort
from glybench.variants import variant_table_csv

print(variant_table_csv(), end="")

# %% [markdown]
# Materializing a variant turns a cleaned cohort into per-patient feature
# rows, excluding patients left with too few rows. The same cohort under
# the expert filter can only shrink.

# %%
cleaned, _ = clean_cohort(generate(high_signal_config(patients=4, days=25, seed=9)))

for vid in ("D_a6", "D_e6", "D_a2", "D_e2", "D_e12"):
    ds = materialize(cleaned, spec_by_id(vid), min_records=20)
    counts = {pid: len(rows) for pid, rows in ds.per_patient.items()}
    print(f"{vid:6s} rows per patient: {counts} excluded: {list(ds.excluded_patients)}")

# %%
# the filtered variant's rows are literally a subset of the unfiltered one's
ds_all = materialize(cleaned, spec_by_id("D_a6"), min_records=20)
ds_ep = materialize(cleaned, spec_by_id("D_e6"), min_records=20)
pid = sorted(ds_ep.per_patient)[0]
subset = all(row in ds_all.per_patient[pid] for row in ds_ep.per_patient[pid])
print(f"{pid}: every D_e6 row appears in D_a6 -> {subset}")
