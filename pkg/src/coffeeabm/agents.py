"""Agent roles, farm constants and per-agent behaviour rules.

The rules here are written per agent for clarity; :mod:`coffeeabm.engine`
applies the same rules to whole populations with numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import evaluation as ev
from .proxy import FundsState

TICKS_PER_YEAR = 12
TREES_PER_HA = 693
FARM_AREA_HA = (1.0, 3.0)
FRESH_YIELD_KG = 3.24  # fresh cherries per tree per year
GCB_YIELD_KG = 0.58  # green coffee beans per tree per year
GCB_PER_FRESH = GCB_YIELD_KG / FRESH_YIELD_KG
PRODUCTION_COST = 25.40  # Php per tree per year
POST_HARVEST_COST = 11.44  # Php per tree per year
# average farmgate prices, Php/kg
REFERENCE_PRICE = {"gcb": 220.0, "fresh": 35.0}

COOPERATIVE = "cooperative"
MARKET = "market"
PRICE_MODES = ("random", "supply_demand")


@dataclass(frozen=True)
class BehaviorParams:
    """Behavioural constants not pinned down by field data.

    All are calibration choices and can be overridden per scenario.
    """

    processing_fraction: float = 0.7
    yield_penalty: float = 0.5
    household_expense: float = 9000.0  # Php per producer per tick
    loan_aversion: float = 0.5
    overdue_after: int = 12  # ticks before an unpaid loan counts as a default
    default_memory: int = 0  # ticks a default blocks new credit (proxy model)
    fallback_discount: float = 0.8
    price_raise: float = 0.05
    price_cut: float = 0.01
    volatility_scale: float = 0.1

    def __post_init__(self):
        for name in ("processing_fraction", "yield_penalty", "loan_aversion", "fallback_discount"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.household_expense < 0 or self.price_raise < 0 or self.price_cut < 0:
            raise ValueError("expense and price adjustment rates must be non-negative")
        if self.overdue_after < 1 or self.default_memory < 0 or self.volatility_scale <= 0:
            raise ValueError("invalid loan or volatility parameters")


@dataclass(frozen=True)
class BuyerSpec:
    """Static description of a cooperative or market buyer.

    ``annual_demand`` is in tons of GCB-equivalent per year; fresh cherries
    count toward it at :data:`GCB_PER_FRESH` kg GCB per kg fresh.  ``None``
    means the scenario's demand split decides it.
    """

    name: str
    kind: str
    annual_demand: float | None = None
    gcb_price: tuple[float, float] | None = None
    fresh_price: tuple[float, float] | None = None
    price_mode: str = "random"

    def __post_init__(self):
        if self.kind not in (COOPERATIVE, MARKET):
            raise ValueError(f"unknown buyer kind {self.kind!r}")
        if self.price_mode not in PRICE_MODES:
            raise ValueError(f"unknown price mode {self.price_mode!r}")
        if self.annual_demand is not None and self.annual_demand < 0:
            raise ValueError("annual_demand must be non-negative")
        if self.gcb_price is None and self.fresh_price is None:
            raise ValueError(f"buyer {self.name} buys nothing")
        for rng in (self.gcb_price, self.fresh_price):
            if rng is not None and not (0 < rng[0] <= rng[1]):
                raise ValueError(f"invalid price range {rng}")

    @property
    def monthly_cap_kg(self) -> float:
        return self.annual_demand * 1000.0 / TICKS_PER_YEAR

    def price_range(self, product: str):
        return self.gcb_price if product == "gcb" else self.fresh_price


@dataclass
class LoanRecord:
    producer: int
    principal: float
    issued_tick: int
    repaid: float = 0.0
    written_off: bool = False

    def __post_init__(self):
        if self.principal <= 0:
            raise ValueError("loan principal must be positive")

    @property
    def outstanding(self) -> float:
        return 0.0 if self.written_off else self.principal - self.repaid

    @property
    def is_open(self) -> bool:
        return not self.written_off and self.repaid < self.principal


@dataclass
class ProducerAgent:
    id: int
    farm_area: float
    is_member: bool
    funds: FundsState = field(default_factory=FundsState)
    trust: dict = field(default_factory=dict)
    risk: float = 0.3
    payment_history: dict = field(default_factory=dict)
    processing_capacity_fraction: float = 0.7
    last_default_tick: float = -math.inf

    def __post_init__(self):
        lo, hi = FARM_AREA_HA
        if not lo <= self.farm_area <= hi:
            raise ValueError(f"farm_area must lie in [{lo}, {hi}] ha")
        self.funds.trees = self.trees

    @property
    def trees(self) -> int:
        return int(round(TREES_PER_HA * self.farm_area))


@dataclass
class BuyerAgent:
    spec: BuyerSpec
    prices: dict = field(default_factory=dict)
    funds: float = 0.0
    received_this_tick: float = 0.0

    @property
    def id(self) -> str:
        return self.spec.name

    @property
    def remaining_kg(self) -> float:
        return max(self.spec.monthly_cap_kg - self.received_this_tick, 0.0)


@dataclass
class LoanProviderAgent:
    id: str
    evaluation_params: ev.EvaluationParams = field(default_factory=ev.EvaluationParams)
    loan_book: list = field(default_factory=list)
    funds: float = 0.0


# --------------------------------------------------------------------------
# Rules
# --------------------------------------------------------------------------


def trees_for_area(area):
    return np.rint(TREES_PER_HA * np.asarray(area)).astype(np.int64)


def compute_input_need(trees, ticks_per_year: int = TICKS_PER_YEAR):
    """Monthly production plus post-harvest input cost, in Php."""
    return trees * (PRODUCTION_COST + POST_HARVEST_COST) / ticks_per_year


def produce(trees, inputs_funded, yield_penalty: float = 0.5, ticks_per_year: int = TICKS_PER_YEAR):
    """Fresh-cherry harvest for one tick; unfunded farms yield less."""
    out = trees * FRESH_YIELD_KG / ticks_per_year * np.where(inputs_funded, 1.0, yield_penalty)
    return float(out) if np.ndim(out) == 0 else out


def process_to_gcb(fresh_kg, fraction):
    """Split a harvest into GCB (from the processed part) and leftover fresh."""
    if np.any(np.asarray(fraction) < 0) or np.any(np.asarray(fraction) > 1):
        raise ValueError("fraction must lie in [0, 1]")
    return fresh_kg * fraction * GCB_PER_FRESH, fresh_kg * (1.0 - fraction)


def market_update_price(
    price,
    price_range,
    demand_met_fraction,
    mode: str,
    rng: np.random.Generator | None = None,
    raise_rate: float = 0.05,
    cut_rate: float = 0.01,
):
    """Next-tick buyer price.

    ``random`` draws uniformly from the range.  ``supply_demand`` raises the
    price in proportion to unmet demand and trims it when demand was fully
    met, staying inside the range.
    """
    lo, hi = price_range
    if mode == "random":
        return rng.uniform(lo, hi)
    if mode != "supply_demand":
        raise ValueError(f"unknown price mode {mode!r}")
    met = np.clip(demand_met_fraction, 0.0, 1.0)
    factor = 1.0 + raise_rate * (1.0 - met) - cut_rate * (met >= 1.0 - 1e-9)
    return np.clip(price * factor, lo, hi)


def fallback_prices(buyers, discount: float = 0.8) -> dict:
    """Discount outlet prices per product: ``discount`` x lowest buyer minimum."""
    out = {}
    for product in ("gcb", "fresh"):
        mins = [b.price_range(product)[0] for b in buyers if b.price_range(product) is not None]
        out[product] = discount * (min(mins) if mins else REFERENCE_PRICE[product])
    return out


def allocate_sale(
    producer: ProducerAgent,
    buyer: BuyerAgent,
    offered_kg: float,
    product: str = "gcb",
    ledger: ev.EvidenceLedger | None = None,
    fallback_price: float | None = None,
):
    """Sell up to the buyer's remaining monthly demand; the rest goes to the
    fallback outlet when ``fallback_price`` is given.

    ``offered_kg`` is in the product's own kg.  Returns
    ``(accepted_kg, residue_kg)``.
    """
    if offered_kg < 0:
        raise ValueError("offered_kg must be non-negative")
    to_eq = 1.0 if product == "gcb" else GCB_PER_FRESH
    accepted = min(offered_kg, buyer.remaining_kg / to_eq)
    residue = offered_kg - accepted
    if accepted > 0:
        payment = accepted * buyer.prices[product]
        buyer.received_this_tick += accepted * to_eq
        buyer.funds -= payment
        producer.funds.cash += payment
        producer.payment_history.setdefault(buyer.id, []).append(buyer.prices[product])
        if ledger is not None:
            ledger.record(producer.id, buyer.id, True)
    if residue > 0 and fallback_price is not None:
        producer.funds.cash += residue * fallback_price
    return accepted, residue


def lender_evaluation(
    producer: ProducerAgent,
    lender: LoanProviderAgent,
    amount: float,
    ledger: ev.EvidenceLedger,
    repayments=(),
) -> float:
    """Lender's combined evaluation of a producer asking for ``amount``.

    Expected recovery is the producer's historical repaid share of principal
    (1 with no history); loans carry no interest so the cost term never
    exceeds zero gain.
    """
    pair = ledger.pair(lender.id, producer.id)
    rep = ledger.reputation(producer.id)
    book = [r for r in lender.loan_book if r.producer == producer.id]
    principal = sum(r.principal for r in book)
    recovery = sum(r.repaid for r in book) / principal if principal > 0 else 1.0
    score, *_ = ev.evaluate(
        lender.evaluation_params,
        member=producer.is_member,
        pair_alpha=pair.alpha,
        pair_beta=pair.beta,
        glob_alpha=rep.alpha,
        glob_beta=rep.beta,
        p_vol=ev.payment_volatility(list(repayments)),
        p_scale=amount,
        z=amount * recovery,
        z_ref=amount,
    )
    return float(score)


def request_and_grant_loan(
    producer: ProducerAgent,
    lender: LoanProviderAgent,
    amount: float,
    model: str,
    ledger: ev.EvidenceLedger,
    tick: int = 0,
    behavior: BehaviorParams = BehaviorParams(),
    repayments=(),
) -> bool:
    """Ask ``lender`` for ``amount``; the producer records the outcome.

    ``full``: granted when the lender's evaluation reaches its threshold.
    ``proxy``: granted unless the producer defaulted within the last
    ``behavior.default_memory`` ticks.
    """
    if amount <= 0:
        raise ValueError("loan amount must be positive")
    if model == "full":
        score = lender_evaluation(producer, lender, amount, ledger, repayments)
        granted = bool(ev.accepts(score, lender.evaluation_params.threshold))
    elif model == "proxy":
        granted = tick - producer.last_default_tick > behavior.default_memory
    else:
        raise ValueError(f"unknown decision model {model!r}")
    if granted:
        lender.loan_book.append(LoanRecord(producer.id, amount, tick))
        lender.funds -= amount
        producer.funds.cash += amount
        producer.funds.outstanding_loan += amount
    ledger.record(producer.id, lender.id, granted)
    return granted
