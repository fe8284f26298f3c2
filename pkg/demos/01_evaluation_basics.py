"""
How an agent scores a trading partner
=====================================

Evidence counts turn into trust and risk scores.  A weighted sum of
those with a value for the money at stake is then held against a
threshold to decide whether the deal goes ahead.
"""

# %%
# Beta evidence: three good payments and one late one
from coffeeabm import evaluation as ev

e = ev.Evidence(alpha=3, beta=1)
print("interaction trust", ev.interaction_trust(e))
print("interaction risk ", round(ev.interaction_risk(e), 5))

# %%
# The cost value runs from zero at break-even to one at double the
# reference; shortfalls are punished twice as hard as gains are rewarded
for z in (50, 75, 90, 100, 125, 150, 200):
    print(f"z={z:>3}  value={ev.cost_evaluation(z, 100.0):.4f}")

# %%
# A full evaluation with equal weights
score, t, r, c = ev.evaluate(
    ev.EvaluationParams(threshold=0.5),
    member=1, pair_alpha=3, pair_beta=1, glob_alpha=6, glob_beta=2,
    p_vol=0.2, p_scale=1.0, z=120.0, z_ref=100.0,
)
print(f"trust {t:.3f}  risk {r:.3f}  cost {c:.3f}  ->  score {score:.3f}")
print("accepted:", ev.accepts(score, 0.5))
