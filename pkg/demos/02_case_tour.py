"""
A tour of the five built-in cases
=================================

Small ensembles (20 runs) of every case, summarised over the final
100 ticks.  Full 250-run ensembles take roughly 15 s per case.
"""

# %%
import numpy as np

from coffeeabm import builtin_cases, run_batch

RUNS = 20

# %%
for cfg in builtin_cases():
    s = run_batch(cfg, n=RUNS)
    tail = slice(-100, None)
    coop = np.nanmean(s.series("share_coop")[tail])
    market = np.nanmean(s.series("share_market")[tail])
    loans = s.series("loan_count")[tail].mean()
    trust = s.series("producer_trust")[tail].mean()
    print(f"{cfg.label}: coop {coop:5.1f}%  market {market:5.1f}%  loans {loans:6.1f}  trust {trust:.3f}")
    print(f"        {cfg.description}")

# %%
# Case 3's split comes from the processing step: markets buy only green
# beans, so whatever is not processed goes to the cooperative as cherries
from coffeeabm import get_case
from coffeeabm.agents import BehaviorParams

for frac in (0.5, 0.7, 0.9):
    cfg = get_case("case3").with_(behavior=BehaviorParams(processing_fraction=frac))
    share = run_batch(cfg, n=5).series("share_coop")[-100:].mean()
    print(f"processing {frac:.1f} -> coop share {share:.1f}%")
