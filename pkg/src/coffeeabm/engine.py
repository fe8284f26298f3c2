"""Discrete-time world: one tick per month by default.

Phases of a tick, in order:

1. defaults are written off; input need, loan requests and grants
2. production (unfunded farms yield less)
3. processing split into GCB and leftover fresh cherries
4. buyer scoring per product
5. sale allocation under demand caps, payments, fallback outlet
6. household expenses and loan repayment
7. evidence, trust, risk-attitude and payment-history updates
8. buyer price update
9. series row

Random draws come from one ``numpy.random.Generator`` per run and are
consumed in this fixed order: farm areas, initial trust (producer x buyer),
initial risk, initial off-farm income, initial buyer prices (buyer-major,
GCB before fresh).  Each tick then takes one block of ``2N + k`` uniforms:
N loan-seeking draws, N sort keys for the sales order, and one per
random-priced product (buyer-major, GCB before fresh).  Stepping tick by
tick and :meth:`World.run` consume the stream identically.  Changing this
order changes every seeded result.

A loan still open ``overdue_after`` ticks after it was issued is a default:
the lender records negative evidence, writes the balance off, and (proxy
model) refuses new credit for ``default_memory`` ticks.

Proxy signals (all targets in [0, 1], signal = target - current state):

* u1  lender willingness: 1 if the buyer lends and would lend to the
  producer now, else 0
* u2  price standing: buyer's GCB-equivalent price over the best price on
  offer (the reference farmgate price stands in when there is one buyer)
* u3  1 - mean trust in buyers
* u4  1 - mean relative price movement / volatility scale
* u5  cash after repayment relative to the next input need
* u6  1 with no loan, 0.5 with an open loan
* u7  0.5 + relative premium of the best market price over the cooperative
* u8  share of cooperative demand met this tick
"""

from __future__ import annotations

import math

import numpy as np

from . import agents as ag
from . import evaluation as ev
from . import _kernel as _k
from .proxy import FundsState, init_income, init_risk, init_trust
from .scenario import ROLES, ScenarioConfig

SERIES = (
    "producer_trust_coop",
    "producer_trust_market",
    "producer_trust",
    "buyer_trust",
    "loan_count",
    "trust_in_chosen_buyer",
    "mean_risk",
    "share_coop",
    "share_market",
    "buyer_trust_coop",
    "buyer_trust_market",
    "price_coop",
    "price_market",
)
_COL = {name: i for i, name in enumerate(SERIES)}
PRODUCTS = ("gcb", "fresh")
ACCOUNTS = ("lender", "nursery", "households", "fallback")
# money moved during the last tick, all >= 0
FLOWS = ("loans_out", "repaid", "inputs", "buyer_payments", "fallback_payments", "household_spending")


class HorizonReached(RuntimeError):
    pass


class TimeSeriesFrame:
    """Per-tick values of the monitored series; row ``i`` is tick ``i + 1``."""

    def __init__(self, data: np.ndarray, columns=SERIES):
        self.data = np.asarray(data, dtype=float)
        self.columns = tuple(columns)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, _COL[name] if self.columns is SERIES else self.columns.index(name)]

    @property
    def ticks(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)


class World:
    """A single simulation run.  Agents are stored as parallel arrays."""

    def __init__(self, config: ScenarioConfig, seed: int = 0):
        config.validate()
        self.config = cfg = config
        self.behavior = bh = cfg.behavior
        self.proxy = pp = cfg.proxy_params
        self.rng = rng = np.random.default_rng(seed)
        self.seed = seed
        self.tick = 0
        self.full = cfg.decision_model == "full"

        # buyers
        self.buyers = cfg.resolved_buyers()
        B = self.n_buyers = len(self.buyers)
        self.buyer_names = [b.name for b in self.buyers]
        self.is_coop = np.array([b.kind == ag.COOPERATIVE for b in self.buyers])
        self.any_market = bool((~self.is_coop).any())
        self.any_coop = bool(self.is_coop.any())
        tpy = self.ticks_per_year = cfg.ticks_per_year
        self.cap = np.array([b.annual_demand * 1000.0 / tpy for b in self.buyers])
        self.household_expense = bh.household_expense * ag.TICKS_PER_YEAR / tpy
        self.buys = np.array([[b.price_range(p) is not None for b in self.buyers] for p in PRODUCTS])
        self.price_lo = np.array([[(b.price_range(p) or (np.nan, np.nan))[0] for b in self.buyers] for p in PRODUCTS])
        self.price_hi = np.array([[(b.price_range(p) or (np.nan, np.nan))[1] for b in self.buyers] for p in PRODUCTS])
        self.random_price = np.array([b.price_mode == "random" for b in self.buyers])
        self._n_price_draws = int(self.buys[:, self.random_price].sum())
        fb = ag.fallback_prices(self.buyers, bh.fallback_discount)
        self.fallback_price = np.array([fb["gcb"], fb["fresh"]])

        # lender: first cooperative when it doubles as lender, else a separate agent
        coop_idx = np.flatnonzero(self.is_coop)
        self.lender_buyer = int(coop_idx[0]) if (cfg.lender == "cooperative" and coop_idx.size) else None

        # producers
        N = self.n = cfg.producer_count
        self.farm_area = rng.uniform(cfg.farm_area[0], cfg.farm_area[1], N)
        self.trees = ag.trees_for_area(self.farm_area).astype(float)
        self.need = ag.compute_input_need(self.trees, tpy)
        self.potential_eq = self.trees * ag.GCB_YIELD_KG / tpy
        self.member = np.arange(N) < round(cfg.member_fraction * N)
        self.trust = init_trust(rng, pp, (N, B))
        self.risk = init_risk(rng, pp, N)
        self.cash = init_income(rng, pp, N)

        # initial prices, buyer-major then product
        self.price = np.full((2, B), np.nan)
        for b in range(B):
            for p in range(2):
                if self.buys[p, b]:
                    self.price[p, b] = rng.uniform(self.price_lo[p, b], self.price_hi[p, b])
        self.prev_headline = self._headline()

        # loans: at most one open loan per producer
        self.has_loan = np.zeros(N, bool)
        self.loan_principal = np.zeros(N)
        self.loan_repaid = np.zeros(N)
        self.loan_issued = np.zeros(N, np.int64)
        self.last_default = np.full(N, -math.inf)
        self._loan_counts = np.zeros(2, np.int64)  # repaid in full, written off
        self.lifetime_principal = np.zeros(N)
        self.lifetime_repaid = np.zeros(N)

        # evidence over producers, buyers and (optionally) a separate lender
        ids = [f"producer-{i}" for i in range(N)] + self.buyer_names
        if self.lender_buyer is None:
            ids.append("lender")
            self.lender_idx = N + B
        else:
            self.lender_idx = N + self.lender_buyer
        self.ledger = ev.EvidenceLedger(ids)

        # running histories for payment volatility
        shape = (N, B)
        self.pay_n, self.pay_mean, self.pay_m2 = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        self.del_n, self.del_mean, self.del_m2 = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        self.rep_n, self.rep_mean, self.rep_m2 = np.zeros((1, N)), np.zeros((1, N)), np.zeros((1, N))

        # money accounts (lender, nursery, households, fallback outlet); the
        # system is closed so their sum with all cash and buyer funds is fixed
        self.buyer_funds = np.zeros(B)
        self._accounts = np.zeros(4)

        self._prm = np.stack([_k.pack_params(cfg.params_for(r)) for r in ROLES])
        self._beh = np.array(
            [
                bh.processing_fraction,
                bh.yield_penalty,
                self.household_expense,
                bh.loan_aversion,
                bh.overdue_after,
                bh.default_memory,
                bh.price_raise,
                bh.price_cut,
                bh.volatility_scale,
            ],
            dtype=float,
        )
        self._pw = np.array(pp.weights)
        self._ref = np.array([ag.REFERENCE_PRICE["gcb"], ag.REFERENCE_PRICE["fresh"]])

        # last-tick flows, overwritten each step
        self.offered = np.zeros((2, N))
        self.sold = np.zeros((2, N, B))
        self.residue = np.zeros((2, N))
        self.received = np.zeros(B)
        self.granted = np.zeros(N, bool)
        self.funded = np.zeros(N, bool)
        self.closing = np.zeros(N, bool)
        self._flow_totals = np.zeros(len(FLOWS))
        self.written_off = np.zeros(N, bool)

        self._rows = np.full((cfg.horizon, len(SERIES)), np.nan)

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------
    @property
    def accounts(self) -> dict:
        return dict(zip(ACCOUNTS, self._accounts.tolist()))

    def money_total(self) -> float:
        # exact sum of the stored balances; sinks grow to ~1e9 Php
        return math.fsum((*self.cash, *self.buyer_funds, *self._accounts))

    def _headline(self) -> np.ndarray:
        """GCB-equivalent price of each buyer: GCB price, else fresh / conversion."""
        return np.where(self.buys[0], self.price[0], self.price[1] / ag.GCB_PER_FRESH)

    def overdue(self) -> np.ndarray:
        return self.has_loan & (self.tick - self.loan_issued > self.behavior.overdue_after)

    def loan_records(self) -> list[ag.LoanRecord]:
        """The lender's book of open loans."""
        return [
            ag.LoanRecord(int(i), float(self.loan_principal[i]), int(self.loan_issued[i]), float(self.loan_repaid[i]))
            for i in np.flatnonzero(self.has_loan)
        ]

    @property
    def loans_repaid(self) -> int:
        return int(self._loan_counts[0])

    @property
    def loans_written_off(self) -> int:
        return int(self._loan_counts[1])

    @property
    def flows(self) -> dict:
        """Money moved during the last tick, by kind."""
        return dict(zip(FLOWS, self._flow_totals.tolist()))

    def producer(self, i: int) -> ag.ProducerAgent:
        """Snapshot of one producer as a :class:`~coffeeabm.agents.ProducerAgent`."""
        p = ag.ProducerAgent(
            id=i,
            farm_area=float(self.farm_area[i]),
            is_member=bool(self.member[i]),
            trust=dict(zip(self.buyer_names, self.trust[i].tolist())),
            risk=float(self.risk[i]),
            processing_capacity_fraction=self.behavior.processing_fraction,
            last_default_tick=float(self.last_default[i]),
        )
        p.funds = FundsState(
            cash=float(self.cash[i]),
            trees=p.trees,
            outstanding_loan=float(self.loan_principal[i] - self.loan_repaid[i]) if self.has_loan[i] else 0.0,
        )
        return p


    # ------------------------------------------------------------------
    def _pack(self):
        led = self.ledger
        consts = (
            self.full, ag.FRESH_YIELD_KG / self.ticks_per_year, ag.GCB_PER_FRESH, self._ref,
            self._beh, self._pw, self.proxy.step_size, self._prm,
            self.lender_idx, -1 if self.lender_buyer is None else self.lender_buyer,
            self.trees, self.need, self.potential_eq, self.member,
            self.is_coop, self.buys, self.price_lo, self.price_hi, self.random_price, self.cap, self.fallback_price,
        )
        state = (
            self.trust, self.risk, self.cash,
            self.has_loan, self.loan_principal, self.loan_repaid, self.loan_issued, self.last_default,
            self.lifetime_principal, self.lifetime_repaid, self._loan_counts,
            self.price, self.prev_headline, self.buyer_funds, self._accounts,
            led.pair_alpha, led.pair_beta, led.glob_alpha, led.glob_beta,
            self.pay_n, self.pay_mean, self.pay_m2, self.del_n, self.del_mean, self.del_m2,
            self.rep_n, self.rep_mean, self.rep_m2,
        )
        outs = (
            self.offered, self.sold, self.residue, self.received,
            self.granted, self.funded, self.closing, self.written_off, self._flow_totals,
        )
        return consts, state, outs

    def _draws(self, ticks: int) -> np.ndarray:
        return self.rng.random((ticks, 2 * self.n + self._n_price_draws))

    def step(self) -> "World":
        if self.tick >= self.config.horizon:
            raise HorizonReached(f"world already at horizon {self.config.horizon}")
        _k.tick_kernel(self.tick, self._draws(1)[0], self._rows[self.tick], *self._pack())
        self.tick += 1
        return self

    def frame(self) -> TimeSeriesFrame:
        return TimeSeriesFrame(self._rows[: self.tick].copy())

    def run(self) -> TimeSeriesFrame:
        """Step to the horizon; same result as calling :meth:`step` repeatedly."""
        remaining = self.config.horizon - self.tick
        if remaining > 0:
            _k.run_kernel(self.tick, self._draws(remaining), self._rows, *self._pack())
            self.tick += remaining
        return self.frame()


def run(config: ScenarioConfig, seed: int | None = None) -> TimeSeriesFrame:
    """Run one world from fresh initial conditions to the horizon."""
    return World(config, config.base_seed if seed is None else seed).run()
