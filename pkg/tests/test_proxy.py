import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coffeeabm.evaluation import TopWeights
from coffeeabm.proxy import (
    FactorSignals,
    FundsState,
    ProxyParams,
    choose_buyer,
    init_income,
    init_risk,
    init_trust,
    population_mean,
    score_buyers,
    update_funds,
    update_risk,
    update_trust,
)

P = ProxyParams()


def test_init_draws():
    rng = np.random.default_rng(1)
    assert init_trust(rng, ProxyParams(trust_init=(0.3, 0.3))) == 0.3
    x = init_trust(rng, P, 1000)
    assert x.min() >= 0.2 and x.max() <= 0.4
    big = init_risk(rng, ProxyParams(risk_init=(0.0, 1.0)), 10_000)
    assert abs(big.mean() - 0.5) < 0.02
    inc = init_income(rng, P, 100)
    assert inc.min() >= 0 and inc.max() <= 5000


def test_bad_bounds_rejected():
    with pytest.raises(ValueError):
        ProxyParams(trust_init=(0.5, 0.4))
    with pytest.raises(ValueError):
        ProxyParams(risk_init=(0.5, 1.4))
    with pytest.raises(ValueError):
        ProxyParams(weights=(1.0,) * 7)


def test_update_trust_examples():
    assert update_trust(0.3, FactorSignals(), P) == 0.3
    assert update_trust(0.3, FactorSignals(u1=1, u2=1), P) == pytest.approx(0.32)
    assert update_trust(0.999, FactorSignals(u1=1, u2=1), ProxyParams(step_size=1.0)) == 1.0


def test_update_risk_examples():
    assert update_risk(0.5, FactorSignals(), P) == 0.5
    ones = dict(u3=1, u4=1, u5=1, u6=1, u7=1, u8=1)
    assert update_risk(0.5, FactorSignals(**ones), P) == pytest.approx(0.56)
    neg = {k: -1 for k in ones}
    assert update_risk(0.02, FactorSignals(**neg), P) == 0.0


def test_signals_must_be_bounded():
    with pytest.raises(ValueError):
        FactorSignals(u4=1.5)
    FactorSignals(u4=np.array([-1.0, 1.0]))


def test_weights_scale_their_factor():
    p = P.with_weights(w1=0.0, w2=2.0)
    assert p.weights[:2] == (0.0, 2.0)
    assert update_trust(0.5, FactorSignals(u1=1, u2=0.5), p) == pytest.approx(0.51)


def test_population_mean():
    assert population_mean([0.5]) == 0.5
    assert population_mean([0.2, 0.4]) == pytest.approx(0.3)
    assert population_mean([0.37] * 200) == pytest.approx(0.37)
    with pytest.raises(ValueError):
        population_mean([])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_recursions_stay_in_unit_interval_for_long_runs(seed):
    rng = np.random.default_rng(seed)
    n = 100_000
    t, r = init_trust(rng, P, 8), init_risk(rng, P, 8)
    p = ProxyParams(step_size=0.5)
    for u in rng.uniform(-1, 1, (n // 1000, 8, 8)):
        t = update_trust(t, FactorSignals(u1=u[0], u2=u[1]), p)
        r = update_risk(r, FactorSignals(*u[:, 0]), p)
    assert np.all((0 <= t) & (t <= 1)) and np.all((0 <= r) & (r <= 1))


def test_clamp_holds_over_1e5_updates():
    rng = np.random.default_rng(7)
    p = ProxyParams(step_size=0.3)
    u = rng.uniform(-1, 1, (100_000, 8))
    t = r = 0.3
    lo_t = lo_r = 1.0
    hi_t = hi_r = 0.0
    for row in u:
        s = FactorSignals(*row)
        t, r = update_trust(t, s, p), update_risk(r, s, p)
        lo_t, hi_t, lo_r, hi_r = min(lo_t, t), max(hi_t, t), min(lo_r, r), max(hi_r, r)
    assert 0.0 <= lo_t and hi_t <= 1.0 and 0.0 <= lo_r and hi_r <= 1.0


# ------------------------------------------------------------------- funds


def test_update_funds_example():
    trees = 2 * 693
    gcb = round(trees * 0.58 / 12, 2)
    need = round(trees * (25.40 + 11.44) / 12, 2)
    assert (gcb, need) == (66.99, 4255.02)
    f = update_funds(FundsState(0.0, trees, 0.0), gcb, 250.0, need, 0.0, need)
    assert f.cash == pytest.approx(16747.50, abs=1e-9)
    assert f.outstanding_loan == need


def test_update_funds_trivial_and_repayment():
    f = FundsState(100.0, 10, 50.0)
    assert update_funds(f, 0, 0, 0, 0, 0) == f
    g = update_funds(f, 0, 0, 0, 50.0, 0)
    assert g.outstanding_loan == 0 and g.cash == 50.0
    with pytest.raises(ValueError):
        update_funds(f, 0, 0, 0, 60.0, 0)
    with pytest.raises(ValueError):
        update_funds(f, -1, 0, 0, 0, 0)


# ------------------------------------------------------------ buyer choice


def test_choose_buyer_examples():
    prices = {"coop": 200.0, "market": 280.0}
    trust = {"coop": 0.8, "market": 0.3}
    assert choose_buyer(trust, 0.3, prices, TopWeights(0, 0, 1), {"coop"}) == "market"
    assert choose_buyer(trust, 0.3, prices, TopWeights(1, 0, 0), {"coop"}) == "coop"
    same = {"a": 100.0, "b": 100.0}
    assert choose_buyer({"a": 0.5, "b": 0.5}, 0.5, same, TopWeights(), ()) == "a"
    with pytest.raises(ValueError):
        choose_buyer({}, 0.5, {}, TopWeights())


def test_risk_appetite_pulls_toward_market():
    prices = {"coop": 200.0, "market": 200.0}
    trust = {"coop": 0.5, "market": 0.5}
    mix = TopWeights(0, 1, 0)
    assert choose_buyer(trust, 0.1, prices, mix, {"coop"}) == "coop"
    assert choose_buyer(trust, 0.9, prices, mix, {"coop"}) == "market"


@given(st.floats(0.1, 1e3), st.floats(1.01, 3.0), st.floats(0.01, 100))
def test_price_rescaling_does_not_change_choice(p, ratio, k):
    trust = np.array([[0.4, 0.6]])
    mix = TopWeights(0.2, 0.3, 0.5)
    a = score_buyers(trust, [0.3], [p, p * ratio], np.array([True, False]), mix)
    b = score_buyers(trust, [0.3], [p * k, p * ratio * k], np.array([True, False]), mix)
    assert np.argmax(a) == np.argmax(b)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_score_buyers_rejects_bad_prices():
    with pytest.raises(ValueError):
        score_buyers(np.zeros((1, 1)), [0.3], [0.0], np.array([True]), TopWeights())
