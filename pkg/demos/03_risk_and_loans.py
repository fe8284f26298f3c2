"""
Risk attitude and the loan book
===============================

Within a single run the count of open loans and the mean risk attitude
move in opposite directions: a cash squeeze pushes producers into loans
and the same squeeze makes them more cautious.
"""

# %%
import numpy as np

from coffeeabm import get_case, run_batch
from coffeeabm.batch import convergence_report

cfg = get_case("case3")
stats = run_batch(cfg, n=40, keep_frames=True)

# %%
r = np.array([np.corrcoef(f["mean_risk"], f["loan_count"])[0, 1] for f in stats.frames])
print(f"runs with negative correlation: {(r < 0).mean():.0%}")
print("correlation quartiles:", np.round(np.percentile(r, [25, 50, 75]), 3))

# %%
# Ensemble means settle after a few hundred ticks
report = convergence_report(stats, window=200, scale={"loan_count": cfg.producer_count})
for name in ("producer_trust", "mean_risk", "loan_count"):
    print(f"{name:<15} plateau={report[name]}  final mean={stats.series(name)[-1]:.3f}")

# %%
# Write the ensemble to disk in the standard layout
from coffeeabm import io

bundle = io.write_bundle(io.default_out_dir() / "demo-risk-loans", cfg.with_(replications=40), stats)
print("wrote", bundle.ensemble)
