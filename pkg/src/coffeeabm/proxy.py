"""Producer-side proxy recursions for trust, risk attitude and funds.

Each producer carries a trust level toward every buyer and one risk
attitude.  Both start from a uniform draw and then move by a weighted sum of
bounded factor signals each tick, clamped to [0, 1]::

    t' = clip(t + step * (w1*u1 + w2*u2), 0, 1)
    r' = clip(r + step * sum(w_i*u_i for i in 3..8), 0, 1)

The signals themselves are produced by the engine; see
:func:`coffeeabm.engine.World` for their definitions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .evaluation import TopWeights


@dataclass(frozen=True)
class ProxyParams:
    trust_init: tuple[float, float] = (0.2, 0.4)
    risk_init: tuple[float, float] = (0.2, 0.4)
    income: tuple[float, float] = (0.0, 5000.0)
    weights: tuple[float, ...] = (1.0,) * 8
    step_size: float = 0.01

    def __post_init__(self):
        for name in ("trust_init", "risk_init", "income"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
        for name in ("trust_init", "risk_init"):
            lo, hi = getattr(self, name)
            if lo < 0.0 or hi > 1.0:
                raise ValueError(f"{name} bounds must lie in [0, 1]")
        if len(self.weights) != 8:
            raise ValueError("weights must have 8 entries (w1..w8)")
        if any(w < 0 for w in self.weights) or self.step_size < 0:
            raise ValueError("weights and step_size must be non-negative")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def with_weights(self, **kw) -> "ProxyParams":
        """Copy with individual weights replaced, e.g. ``with_weights(w3=0)``."""
        w = list(self.weights)
        for key, val in kw.items():
            w[int(key[1:]) - 1] = val
        return replace(self, weights=tuple(w))


@dataclass
class FactorSignals:
    """Signed per-tick factor effects ``u1..u8``, each in [-1, 1].

    u1, u2 drive trust (lender willingness, price comparison); u3..u8 drive
    risk attitude (trust level, price fluctuation, funds sufficiency, default
    exposure, coop/market price gap, demand fulfilment).  Fields may be
    scalars or arrays that broadcast against the state.
    """

    u1: object = 0.0
    u2: object = 0.0
    u3: object = 0.0
    u4: object = 0.0
    u5: object = 0.0
    u6: object = 0.0
    u7: object = 0.0
    u8: object = 0.0

    def __post_init__(self):
        for i in range(1, 9):
            u = getattr(self, f"u{i}")
            if np.any(np.abs(u) > 1.0 + 1e-12):
                raise ValueError(f"u{i} must lie in [-1, 1]")

    def risk_signals(self):
        return (self.u3, self.u4, self.u5, self.u6, self.u7, self.u8)


def _uniform(rng: np.random.Generator, bounds, size):
    lo, hi = bounds
    if lo > hi:
        raise ValueError(f"invalid bounds {bounds}")
    return rng.uniform(lo, hi, size)


def init_trust(rng: np.random.Generator, p: ProxyParams, size=None):
    return _uniform(rng, p.trust_init, size)


def init_risk(rng: np.random.Generator, p: ProxyParams, size=None):
    return _uniform(rng, p.risk_init, size)


def init_income(rng: np.random.Generator, p: ProxyParams, size=None):
    return _uniform(rng, p.income, size)


def update_trust(t, sig: FactorSignals, p: ProxyParams):
    w = p.weights
    return np.clip(t + p.step_size * (w[0] * sig.u1 + w[1] * sig.u2), 0.0, 1.0)


def update_risk(r, sig: FactorSignals, p: ProxyParams):
    w = p.weights
    drift = sum(wi * ui for wi, ui in zip(w[2:], sig.risk_signals()))
    return np.clip(r + p.step_size * drift, 0.0, 1.0)


def population_mean(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("population_mean of an empty population")
    return float(values.mean())


@dataclass
class FundsState:
    cash: float = 0.0
    trees: int = 0
    outstanding_loan: float = 0.0

    def __post_init__(self):
        if self.cash < 0 or self.outstanding_loan < 0:
            raise ValueError("cash and outstanding_loan must be non-negative")


def update_funds(
    f: FundsState,
    sold_kg: float,
    unit_price: float,
    production_cost: float,
    repayment: float,
    new_loan: float,
) -> FundsState:
    """One tick of producer bookkeeping.

    Revenue from sales and any new loan come in; production cost and the loan
    repayment go out.  Callers size ``repayment`` so that cash stays
    non-negative.
    """
    for name, v in (
        ("sold_kg", sold_kg),
        ("unit_price", unit_price),
        ("production_cost", production_cost),
        ("repayment", repayment),
        ("new_loan", new_loan),
    ):
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v}")
    if repayment > f.outstanding_loan + 1e-9:
        raise ValueError("repayment exceeds outstanding loan")
    cash = f.cash + sold_kg * unit_price - production_cost - repayment + new_loan
    if cash < -1e-9:
        raise ValueError("repayment leaves negative cash")
    outstanding = max(f.outstanding_loan - repayment, 0.0) + new_loan
    return FundsState(cash=max(cash, 0.0), trees=f.trees, outstanding_loan=outstanding)


# --------------------------------------------------------------------------
# Buyer choice
# --------------------------------------------------------------------------


def score_buyers(trust, risk, prices, is_coop, mix: TopWeights):
    """Buyer scores for many producers at once.

    ``trust`` is (n, b), ``risk`` is (n,), ``prices`` and ``is_coop`` are (b,).
    Risk appetite favours non-cooperative buyers: the risk term is
    ``1 - risk`` for cooperatives and ``risk`` otherwise.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.size == 0:
        raise ValueError("no buyers to score")
    if np.any(prices <= 0):
        raise ValueError("prices must be positive")
    risk = np.asarray(risk, dtype=float)[..., None]
    risk_term = np.where(is_coop, 1.0 - risk, risk)
    return mix.trust * trust + mix.risk * risk_term + mix.cost * (prices / prices.max())


def choose_buyer(trust_by_buyer: dict, risk: float, prices: dict, mix: TopWeights, coop_ids=()):
    """Pick the best-scoring buyer; ties go to the earliest buyer in ``prices``.

    ``coop_ids`` names the buyers that are cooperatives.
    """
    if not prices:
        raise ValueError("empty buyer set")
    ids = list(prices)
    scores = score_buyers(
        np.array([trust_by_buyer[b] for b in ids], dtype=float),
        risk,
        [prices[b] for b in ids],
        np.array([b in coop_ids for b in ids]),
        mix,
    )
    return ids[int(np.argmax(scores))]


__all__ = [
    "ProxyParams",
    "FactorSignals",
    "FundsState",
    "init_trust",
    "init_risk",
    "init_income",
    "update_trust",
    "update_risk",
    "population_mean",
    "update_funds",
    "score_buyers",
    "choose_buyer",
]
