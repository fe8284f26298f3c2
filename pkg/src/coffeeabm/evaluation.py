"""Trust, risk and transaction-cost evaluation.

An evaluating agent ``x`` scores a counterparty ``y`` from three metrics:

* trust, built from a membership indicator and beta-mean trust over pairwise
  and global interaction evidence,
* risk, built from beta variances of the same evidence plus the volatility of
  past payments,
* transaction cost, a prospect-theory value of the trade relative to a
  reference amount.

The metrics are mixed with :class:`TopWeights` and compared with a threshold.
All functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-9
THIRD = 1.0 / 3.0


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def _check_simplex(label: str, values: Sequence[float]) -> None:
    for i, v in enumerate(values):
        _check_unit(f"{label}[{i}]", v)
    total = math.fsum(values)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"{label} weights must sum to 1, got {total!r}")


@dataclass(frozen=True)
class Evidence:
    """Positive (``alpha``) and negative (``beta``) interaction counts.

    Arrays of counts are accepted and give array-valued metrics.
    """

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (np.all(np.asarray(self.alpha) >= 1.0) and np.all(np.asarray(self.beta) >= 1.0)):
            raise ValueError(f"evidence counts must be >= 1, got {self}")


@dataclass(frozen=True)
class TopWeights:
    """Weights on trust, risk and cost in the combined evaluation."""

    trust: float = THIRD
    risk: float = THIRD
    cost: float = THIRD

    def __post_init__(self):
        _check_simplex("TopWeights", self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.trust, self.risk, self.cost)


@dataclass(frozen=True)
class TrustWeights:
    """Weights on membership, interaction trust and reputation trust."""

    membership: float = THIRD
    interaction: float = THIRD
    reputation: float = THIRD

    def __post_init__(self):
        _check_simplex("TrustWeights", self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.membership, self.interaction, self.reputation)


@dataclass(frozen=True)
class RiskWeights:
    """Weights on interaction risk, reputation risk and payment volatility."""

    interaction: float = THIRD
    reputation: float = THIRD
    payment: float = THIRD

    def __post_init__(self):
        _check_simplex("RiskWeights", self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.interaction, self.reputation, self.payment)


@dataclass(frozen=True)
class CostParams:
    """Prospect-theory shape: gain/loss sensitivity and loss aversion.

    The two exponents are independent and need not sum to one.
    """

    gain_exponent: float = 0.5
    loss_exponent: float = 0.5
    loss_aversion: float = 2.0

    def __post_init__(self):
        _check_unit("gain_exponent", self.gain_exponent)
        _check_unit("loss_exponent", self.loss_exponent)
        if self.loss_aversion < 0:
            raise ValueError("loss_aversion must be >= 0")


@dataclass(frozen=True)
class EvaluationParams:
    """Complete weight and threshold set for one evaluating role."""

    top: TopWeights = field(default_factory=TopWeights)
    trust: TrustWeights = field(default_factory=TrustWeights)
    risk: RiskWeights = field(default_factory=RiskWeights)
    cost: CostParams = field(default_factory=CostParams)
    threshold: float = 0.25

    def __post_init__(self):
        _check_unit("threshold", self.threshold)


# --------------------------------------------------------------------------
# Metric functions
# --------------------------------------------------------------------------


def beta_mean(alpha, beta):
    """Expected value of Beta(alpha, beta)."""
    return alpha / (alpha + beta)


def beta_variance(alpha, beta):
    """Variance of Beta(alpha, beta); at most 1/12 for counts >= 1."""
    s = alpha + beta
    return alpha * beta / (s * s * (s + 1.0))


def interaction_trust(e: Evidence) -> float:
    return beta_mean(e.alpha, e.beta)


def reputation_trust(e: Evidence) -> float:
    return beta_mean(e.alpha, e.beta)


def interaction_risk(e: Evidence) -> float:
    return beta_variance(e.alpha, e.beta)


def reputation_risk(e: Evidence) -> float:
    return beta_variance(e.alpha, e.beta)


def payment_volatility(returns: Sequence[float]) -> float:
    """Sample standard deviation of payment returns.

    With fewer than two observations there is no reference point and the
    volatility is taken as 1.0.
    """
    n = len(returns)
    if n <= 1:
        return 1.0
    mean = math.fsum(returns) / n
    return math.sqrt(math.fsum((r - mean) ** 2 for r in returns) / (n - 1))


def trust_metric(is_coop_member, i_trust, r_trust, w: TrustWeights = TrustWeights()):
    membership = np.asarray(is_coop_member, dtype=float)
    out = w.membership * membership + w.interaction * i_trust + w.reputation * r_trust
    return float(out) if np.ndim(out) == 0 else out


def risk_metric(i_risk, r_risk, p_vol, w: RiskWeights = RiskWeights(), p_scale=1.0):
    """Weighted risk with payment volatility normalised by ``p_scale``.

    ``p_vol / p_scale`` is capped at 1 so the metric stays in the unit
    interval.
    """
    if np.any(np.asarray(p_scale) <= 0):
        raise ValueError("p_scale must be positive")
    scaled = np.minimum(np.asarray(p_vol, dtype=float) / p_scale, 1.0)
    out = w.interaction * i_risk + w.reputation * r_risk + w.payment * scaled
    return float(out) if np.ndim(out) == 0 else out


def cost_evaluation(z, z_ref, c: CostParams = CostParams()):
    """Prospect-theory value of holding ``z`` against reference ``z_ref``.

    Gains (``z >= z_ref``) score ``x**gain_exponent`` with ``x = z/z_ref - 1``;
    losses score ``1 - loss_aversion * (-x)**loss_exponent``.  The result is
    clamped to [0, 1], so ``z = z_ref`` gives 0 and ``z >= 2 z_ref`` gives 1
    for exponents in (0, 1].  The loss branch approaches 1 as the shortfall
    vanishes, so the value jumps at ``z = z_ref``; it is monotone within each
    branch but not across it.
    """
    z_ref = np.asarray(z_ref, dtype=float)
    if np.any(z_ref <= 0):
        raise ValueError("z_ref must be positive")
    x = np.asarray(z, dtype=float) / z_ref - 1.0
    mag = np.abs(x)
    with np.errstate(invalid="ignore"):
        gain = mag ** c.gain_exponent
        loss = 1.0 - c.loss_aversion * mag ** c.loss_exponent
    # 0**0 is 1 in numpy; a zero gain is still zero value
    gain = np.where(mag == 0.0, 0.0, gain)
    out = np.clip(np.where(x >= 0.0, gain, loss), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def combined_evaluation(e_trust, e_risk, e_cost, w: TopWeights = TopWeights()):
    return w.trust * e_trust + w.risk * (1.0 - e_risk) + w.cost * e_cost


def accepts(e, t: float):
    return e >= t


def evaluate(
    params: EvaluationParams,
    *,
    member,
    pair_alpha,
    pair_beta,
    glob_alpha,
    glob_beta,
    p_vol,
    p_scale,
    z,
    z_ref,
):
    """Full evaluation pipeline; returns ``(score, trust, risk, cost)``."""
    e_t = trust_metric(member, beta_mean(pair_alpha, pair_beta), beta_mean(glob_alpha, glob_beta), params.trust)
    e_r = risk_metric(
        beta_variance(pair_alpha, pair_beta), beta_variance(glob_alpha, glob_beta), p_vol, params.risk, p_scale
    )
    e_c = cost_evaluation(z, z_ref, params.cost)
    return combined_evaluation(e_t, e_r, e_c, params.top), e_t, e_r, e_c


# --------------------------------------------------------------------------
# Evidence ledger
# --------------------------------------------------------------------------


class EvidenceLedger:
    """Pairwise and global interaction counts over a fixed agent roster.

    ``pair_alpha[x, y]`` counts positive outcomes of ``x``'s dealings with
    ``y`` as seen by ``x``; ``glob_alpha[y]`` counts every positive outcome
    recorded toward ``y`` by anyone.  All counts start at 1.
    """

    def __init__(self, agent_ids: Iterable[Hashable]):
        self.ids = list(agent_ids)
        self.index = {a: i for i, a in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise ValueError("duplicate agent id")
        m = len(self.ids)
        self.pair_alpha = np.ones((m, m))
        self.pair_beta = np.ones((m, m))
        self.glob_alpha = np.ones(m)
        self.glob_beta = np.ones(m)

    def _idx(self, agent) -> int:
        try:
            return self.index[agent]
        except KeyError:
            raise KeyError(f"unknown agent id {agent!r}") from None

    def pair(self, x, y) -> Evidence:
        i, j = self._idx(x), self._idx(y)
        return Evidence(self.pair_alpha[i, j], self.pair_beta[i, j])

    def reputation(self, y) -> Evidence:
        j = self._idx(y)
        return Evidence(self.glob_alpha[j], self.glob_beta[j])

    def record(self, x, y, positive: bool) -> None:
        i, j = self._idx(x), self._idx(y)
        if positive:
            self.pair_alpha[i, j] += 1.0
            self.glob_alpha[j] += 1.0
        else:
            self.pair_beta[i, j] += 1.0
            self.glob_beta[j] += 1.0

    def record_many(self, src, dst, positive) -> None:
        """Vectorised :meth:`record` over index arrays.

        ``src``/``dst`` are integer row/column indices; (src, dst) pairs in one
        call must be distinct.
        """
        src = np.asarray(src, dtype=np.intp)
        dst = np.asarray(dst, dtype=np.intp)
        positive = np.broadcast_to(np.asarray(positive, dtype=bool), src.shape)
        m = len(self.ids)
        pos_src, pos_dst = src[positive], dst[positive]
        neg_src, neg_dst = src[~positive], dst[~positive]
        self.pair_alpha[pos_src, pos_dst] += 1.0
        self.pair_beta[neg_src, neg_dst] += 1.0
        self.glob_alpha += np.bincount(pos_dst, minlength=m)
        self.glob_beta += np.bincount(neg_dst, minlength=m)


def record_interaction(ledger: EvidenceLedger, from_agent, toward, positive: bool) -> EvidenceLedger:
    """Record one outcome of ``from_agent``'s dealing with ``toward``."""
    ledger.record(from_agent, toward, positive)
    return ledger
