import pytest

from coffeeabm.agents import COOPERATIVE, MARKET
from coffeeabm.scenario import (
    ROLES,
    ScenarioConfig,
    builtin_cases,
    demand_sweep,
    full_sweep,
    get_case,
    sweep_composition,
    sweep_for,
    weight_sweep,
)


def test_five_cases():
    labels = [c.label for c in builtin_cases()]
    assert labels == ["case1", "case2", "case3", "case4", "case5"]
    c1 = get_case("case1")
    assert [b.kind for b in c1.buyers] == [COOPERATIVE] and c1.member_fraction == 1.0
    assert get_case("case4").sweep == "demand" and get_case("case5").sweep == "weight"
    with pytest.raises(KeyError):
        get_case("case6")


def test_demand_sweep():
    cfgs = demand_sweep(get_case("case4"))
    splits = [c.demand_split for c in cfgs]
    assert len(cfgs) == 8
    assert (90.0, 10.0) in splits and (70.0, 30.0) not in splits
    assert all(sum(s) == 100.0 for s in splits)
    assert len({c.label for c in cfgs}) == 8


def test_demand_split_reaches_buyers():
    cfg = get_case("case3").with_(demand_split=(40.0, 60.0))
    caps = {b.kind: b.annual_demand for b in cfg.resolved_buyers()}
    assert caps == {COOPERATIVE: pytest.approx(200.0), MARKET: pytest.approx(300.0)}


def test_weight_sweep():
    cfgs = weight_sweep(get_case("case5"))
    assert len(cfgs) == 7
    for c in cfgs:
        assert sum(c.weight_mix.as_tuple()) == pytest.approx(1.0)
    assert cfgs[1].weight_mix.as_tuple() == (1.0, 0.0, 0.0)


def test_full_sweep_contents():
    cfgs = full_sweep(get_case("case3"))
    comp = sweep_composition(cfgs)
    assert [c.label for c in cfgs].count("default") == 1
    assert cfgs[0].label == "default"
    assert all(c.decision_model == "full" for c in cfgs)
    assert comp["crossed"] == 112
    assert comp["total"] == len(cfgs) == 1 + 112 - comp["dropped_as_default"]
    assert comp["per_role"]["market"] == 28
    # distinct models, and none equal to the default one
    for c in cfgs[1:]:
        assert not c.same_model(cfgs[0])
    assert len({c.label for c in cfgs}) == len(cfgs)


def test_full_sweep_is_stable():
    a = [c.label for c in full_sweep(get_case("case3"))]
    b = [c.label for c in full_sweep(get_case("case3"))]
    assert a == b


def test_full_sweep_producer_block():
    cfgs = [c for c in full_sweep(get_case("case3")) if c.label.startswith("producer-")]
    # cost100 at the default threshold is the default itself
    assert len(cfgs) == 27
    assert "producer-cost100-default" not in {c.label for c in cfgs}
    mixes = {(c.weight_mix.as_tuple(), c.threshold) for c in cfgs}
    assert len(mixes) == len(cfgs)


def test_sweep_for():
    assert len(sweep_for(get_case("case4"), "demand")) == 8
    with pytest.raises(ValueError):
        sweep_for(get_case("case4"), "bogus")


@pytest.mark.parametrize(
    "kw",
    [
        dict(decision_model="neural"),
        dict(lender="bank"),
        dict(buyers=()),
        dict(demand_split=(60.0, 60.0)),
        dict(farm_area=(0.5, 2.0)),
        dict(threshold=1.5),
        dict(horizon=-1),
        dict(replications=0),
        dict(ticks_per_year=4),
        dict(role_params={"farmer": None}),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ScenarioConfig(**kw)


def test_params_for_roles():
    cfg = get_case("case3")
    assert cfg.params_for("producer").threshold == cfg.threshold
    for r in ROLES[1:]:
        assert cfg.params_for(r) == cfg.eval_params
    with pytest.raises(ValueError):
        cfg.params_for("bank")
