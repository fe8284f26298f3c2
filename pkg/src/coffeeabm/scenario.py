"""Scenario configurations, the five built-in cases and parameter sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .agents import COOPERATIVE, MARKET, BehaviorParams, BuyerSpec
from .evaluation import THIRD, EvaluationParams, TopWeights
from .proxy import ProxyParams

ROLES = ("producer", "cooperative", "market", "lender")
DECISION_MODELS = ("proxy", "full")
LENDER_TOPOLOGIES = ("cooperative", "separate")

# (trust, risk, cost) priority mixes: equal, one prioritised, one dropped
WEIGHT_SCENARIOS = (
    ("equal", (THIRD, THIRD, THIRD)),
    ("trust100", (1.0, 0.0, 0.0)),
    ("risk100", (0.0, 1.0, 0.0)),
    ("cost100", (0.0, 0.0, 1.0)),
    ("trust50-cost50", (0.5, 0.0, 0.5)),
    ("trust50-risk50", (0.5, 0.5, 0.0)),
    ("risk50-cost50", (0.0, 0.5, 0.5)),
)
THRESHOLD_SCENARIOS = (("strict", 1.0), ("neutral", 0.5), ("lenient", 0.0))
DEMAND_SPLITS = tuple((c, 100 - c) for c in (10, 20, 30, 40, 50, 60, 80, 90))

COOP_BUYER = BuyerSpec(
    name="cooperative",
    kind=COOPERATIVE,
    gcb_price=(102.61, 211.11),
    fresh_price=(35.0, 40.0),
)
MARKET_BUYER = BuyerSpec(name="equilibrium", kind=MARKET, gcb_price=(250.0, 300.0))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to build and run one world.

    ``weight_mix`` and ``threshold`` are the producer's buyer-selection
    priorities and acceptance threshold.  ``eval_params`` is the evaluation
    set every other role uses unless ``role_params`` overrides it.
    Demand is ``total_demand`` tons GCB-equivalent per year, split between
    cooperatives and markets by ``demand_split`` percentages; a buyer with an
    explicit ``annual_demand`` keeps it.

    ``ticks_per_year`` is 12 for monthly ticks or 1 for a yearly mode (use
    e.g. ``horizon=20``).  Household expenses in ``behavior`` are monthly and
    are scaled to the tick length.
    """

    label: str = "default"
    description: str = ""
    decision_model: str = "proxy"
    buyers: tuple[BuyerSpec, ...] = (COOP_BUYER, MARKET_BUYER)
    lender: str = "cooperative"
    producer_count: int = 200
    member_fraction: float = 0.68
    farm_area: tuple[float, float] = (1.0, 3.0)
    total_demand: float = 500.0
    demand_split: tuple[float, float] = (70.0, 30.0)
    weight_mix: TopWeights = TopWeights(0.0, 0.0, 1.0)
    threshold: float = 0.25
    eval_params: EvaluationParams = field(default_factory=EvaluationParams)
    role_params: dict = field(default_factory=dict)
    proxy_params: ProxyParams = field(default_factory=ProxyParams)
    behavior: BehaviorParams = field(default_factory=BehaviorParams)
    horizon: int = 1000
    ticks_per_year: int = 12
    replications: int = 250
    base_seed: int = 0
    sweep: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "buyers", tuple(self.buyers))
        object.__setattr__(self, "demand_split", tuple(float(v) for v in self.demand_split))
        object.__setattr__(self, "farm_area", tuple(float(v) for v in self.farm_area))
        self.validate()

    def validate(self) -> None:
        if self.decision_model not in DECISION_MODELS:
            raise ValueError(f"decision_model must be one of {DECISION_MODELS}")
        if self.lender not in LENDER_TOPOLOGIES:
            raise ValueError(f"lender must be one of {LENDER_TOPOLOGIES}")
        if not self.buyers:
            raise ValueError("at least one buyer is required")
        names = [b.name for b in self.buyers]
        if len(set(names)) != len(names):
            raise ValueError("buyer names must be unique")
        if self.producer_count < 1:
            raise ValueError("producer_count must be >= 1")
        if not 0.0 <= self.member_fraction <= 1.0:
            raise ValueError("member_fraction must lie in [0, 1]")
        lo, hi = self.farm_area
        if not 1.0 <= lo <= hi <= 3.0:
            raise ValueError("farm_area must be a sub-range of [1, 3] ha")
        if len(self.demand_split) != 2 or any(v < 0 for v in self.demand_split):
            raise ValueError("demand_split must be two non-negative percentages")
        if abs(sum(self.demand_split) - 100.0) > 1e-9:
            raise ValueError("demand_split must sum to 100")
        if self.total_demand < 0:
            raise ValueError("total_demand must be non-negative")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        unknown = set(self.role_params) - set(ROLES)
        if unknown:
            raise ValueError(f"unknown roles in role_params: {sorted(unknown)}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.ticks_per_year not in (1, 12):
            raise ValueError("ticks_per_year must be 12 (monthly) or 1 (yearly)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    # ------------------------------------------------------------------
    def params_for(self, role: str) -> EvaluationParams:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        base = self.role_params.get(role, self.eval_params)
        if role == "producer":
            return replace(base, top=self.weight_mix, threshold=self.threshold)
        return base

    def resolved_buyers(self) -> tuple[BuyerSpec, ...]:
        """Buyers with ``annual_demand`` filled in from the demand split."""
        n_coop = sum(b.kind == COOPERATIVE for b in self.buyers)
        n_mkt = len(self.buyers) - n_coop
        coop_pct, mkt_pct = self.demand_split
        out = []
        for b in self.buyers:
            if b.annual_demand is None:
                pct = coop_pct / n_coop if b.kind == COOPERATIVE else mkt_pct / n_mkt
                b = replace(b, annual_demand=self.total_demand * pct / 100.0)
            out.append(b)
        return tuple(out)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def same_model(self, other: "ScenarioConfig") -> bool:
        """Equality ignoring labels, descriptions and sweep markers."""
        strip = dict(label="", description="", sweep=None)
        return replace(self, **strip) == replace(other, **strip)


# --------------------------------------------------------------------------
# Built-in cases
# --------------------------------------------------------------------------


def builtin_cases() -> list[ScenarioConfig]:
    single = ScenarioConfig(
        label="case1",
        description="single cooperative buyer, random prices, all producers members",
        buyers=(COOP_BUYER,),
        member_fraction=1.0,
        demand_split=(100.0, 0.0),
    )
    competition = ScenarioConfig(
        label="case2",
        description="cooperative and market compete, random prices",
    )
    sd_buyers = tuple(replace(b, price_mode="supply_demand") for b in (COOP_BUYER, MARKET_BUYER))
    priced = ScenarioConfig(
        label="case3",
        description="supply-and-demand pricing, 70/30 coop/market demand, cost-only producer weights",
        buyers=sd_buyers,
    )
    return [
        single,
        competition,
        priced,
        priced.with_(label="case4", description="case 3 base for the demand-split sweep", sweep="demand"),
        priced.with_(label="case5", description="case 3 base for the weight-priority sweep", sweep="weight"),
    ]


def get_case(label: str) -> ScenarioConfig:
    for c in builtin_cases():
        if c.label == label:
            return c
    raise KeyError(f"unknown case {label!r}; expected one of case1..case5")


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:g}"


def demand_sweep(base: ScenarioConfig) -> list[ScenarioConfig]:
    """The eight demand splits at 10% steps, skipping the 70/30 default."""
    if len(base.buyers) != 2:
        raise ValueError("demand sweep needs exactly two buyers (cooperative and market)")
    prefix = base.label or "demand"
    return [
        base.with_(
            label=f"{prefix}-coop{c}-market{m}",
            description=f"cooperative demands {c}%, market demands {m}%",
            demand_split=(float(c), float(m)),
            sweep=None,
        )
        for c, m in DEMAND_SPLITS
    ]


def weight_sweep(base: ScenarioConfig) -> list[ScenarioConfig]:
    """The seven producer priority mixes over (trust, risk, cost)."""
    prefix = base.label or "weight"
    return [
        base.with_(
            label=f"{prefix}-{name}",
            description=f"producer weights trust={_fmt(w[0])} risk={_fmt(w[1])} cost={_fmt(w[2])}",
            weight_mix=TopWeights(*w),
            sweep=None,
        )
        for name, w in WEIGHT_SCENARIOS
    ]


def full_sweep(defaults: ScenarioConfig) -> list[ScenarioConfig]:
    """Cross of roles x weight mixes x thresholds under full evaluation.

    For every evaluating role the seven weight mixes are combined with the
    role's default threshold and the strict/neutral/lenient values.  The
    default configuration comes first; any combination that reproduces it
    exactly is dropped so it appears once.  See :func:`sweep_composition`.
    """
    base = defaults.with_(decision_model="full", sweep=None)
    default = base.with_(label="default", description="default parameters and initial conditions")
    out = [default]
    for role in ROLES:
        role_default_t = base.params_for(role).threshold
        thresholds = (("default", role_default_t),) + THRESHOLD_SCENARIOS
        for wname, w in WEIGHT_SCENARIOS:
            for tname, t in thresholds:
                if role == "producer":
                    cfg = base.with_(weight_mix=TopWeights(*w), threshold=t)
                else:
                    rp = dict(base.role_params)
                    rp[role] = replace(base.params_for(role), top=TopWeights(*w), threshold=t)
                    cfg = base.with_(role_params=rp)
                if cfg.same_model(default):
                    continue
                out.append(
                    cfg.with_(
                        label=f"{role}-{wname}-{tname}",
                        description=f"{role} weights {wname}, threshold {_fmt(t)}",
                    )
                )
    return out


def sweep_composition(configs: list[ScenarioConfig]) -> dict:
    """Count summary of a :func:`full_sweep` result, for output metadata."""
    per_role = {r: sum(c.label.startswith(r + "-") for c in configs) for r in ROLES}
    crossed = len(ROLES) * len(WEIGHT_SCENARIOS) * (len(THRESHOLD_SCENARIOS) + 1)
    return {
        "roles": len(ROLES),
        "weight_scenarios": len(WEIGHT_SCENARIOS),
        "threshold_scenarios": len(THRESHOLD_SCENARIOS) + 1,
        "crossed": crossed,
        "per_role": per_role,
        "dropped_as_default": crossed - sum(per_role.values()),
        "total": len(configs),
    }


def sweep_for(base: ScenarioConfig, kind: str) -> list[ScenarioConfig]:
    if kind == "demand":
        return demand_sweep(base)
    if kind == "weight":
        return weight_sweep(base)
    if kind == "full":
        return full_sweep(base)
    raise ValueError(f"unknown sweep kind {kind!r}")
