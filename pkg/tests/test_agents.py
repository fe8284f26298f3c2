import numpy as np
import pytest

from coffeeabm import agents as ag
from coffeeabm.evaluation import EvaluationParams, EvidenceLedger
from coffeeabm.scenario import COOP_BUYER, MARKET_BUYER


def producer(i=0, area=2.0, member=True):
    p = ag.ProducerAgent(id=i, farm_area=area, is_member=member)
    return p


def test_trees_and_input_need():
    assert ag.trees_for_area(1.0) == 693
    assert ag.compute_input_need(693) == pytest.approx(2127.51, abs=1e-9)
    assert ag.compute_input_need(2079) == pytest.approx(6382.53, abs=1e-9)
    assert ag.compute_input_need(0) == 0
    assert ag.compute_input_need(693, ticks_per_year=1) == pytest.approx(693 * 36.84)


def test_produce():
    assert ag.produce(693, True) == pytest.approx(187.11)
    assert ag.produce(693, False, 0.5) == pytest.approx(93.555)
    assert ag.produce(1386, True) == pytest.approx(374.22)
    np.testing.assert_allclose(ag.produce(np.array([693, 693]), np.array([True, False])), [187.11, 93.555])


def test_process_to_gcb():
    gcb, fresh = ag.process_to_gcb(187.11, 1.0)
    assert gcb == pytest.approx(33.495, abs=1e-3) and fresh == 0
    assert ag.process_to_gcb(100, 0) == (0, 100)
    assert ag.process_to_gcb(0, 0.4) == (0, 0)
    with pytest.raises(ValueError):
        ag.process_to_gcb(1, 1.2)


def test_market_update_price():
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert 250 <= ag.market_update_price(270, (250, 300), 0.5, "random", rng) <= 300
    assert ag.market_update_price(270.0, (250, 300), 0.0, "supply_demand") == pytest.approx(283.5)
    assert ag.market_update_price(299.0, (250, 300), 0.0, "supply_demand") == 300.0
    p = 300.0
    for _ in range(200):
        p = ag.market_update_price(p, (250, 300), 1.0, "supply_demand")
    assert p == 250.0
    with pytest.raises(ValueError):
        ag.market_update_price(1, (1, 2), 0, "auction")


def test_fallback_prices():
    fb = ag.fallback_prices([COOP_BUYER, MARKET_BUYER], 0.8)
    assert fb["gcb"] == pytest.approx(0.8 * 102.61)
    assert fb["fresh"] == pytest.approx(0.8 * 35.0)
    assert ag.fallback_prices([MARKET_BUYER])["fresh"] == pytest.approx(0.8 * ag.REFERENCE_PRICE["fresh"])


def test_buyer_spec_validation():
    with pytest.raises(ValueError):
        ag.BuyerSpec("x", "wholesaler", gcb_price=(1, 2))
    with pytest.raises(ValueError):
        ag.BuyerSpec("x", ag.MARKET)
    with pytest.raises(ValueError):
        ag.BuyerSpec("x", ag.MARKET, gcb_price=(3, 2))
    spec = ag.BuyerSpec("x", ag.MARKET, annual_demand=4.0, gcb_price=(1, 2))
    assert spec.monthly_cap_kg == pytest.approx(333.333333333)


def _sale_setup():
    spec = ag.BuyerSpec("mkt", ag.MARKET, annual_demand=4.0, gcb_price=(250, 300))
    buyer = ag.BuyerAgent(spec, prices={"gcb": 260.0})
    farmer = producer()
    ledger = EvidenceLedger([farmer.id, buyer.id])
    return farmer, buyer, ledger


def test_allocate_sale_within_cap():
    farmer, buyer, ledger = _sale_setup()
    acc, res = ag.allocate_sale(farmer, buyer, 100.0, "gcb", ledger, fallback_price=100.0)
    assert (acc, res) == (100.0, 0.0)
    assert farmer.funds.cash == pytest.approx(26000.0)
    assert ledger.pair(farmer.id, buyer.id).alpha == 2


def test_allocate_sale_over_cap_goes_to_fallback():
    farmer, buyer, ledger = _sale_setup()
    acc, res = ag.allocate_sale(farmer, buyer, 500.0, "gcb", ledger, fallback_price=100.0)
    assert acc == pytest.approx(333.3333333)
    assert res == pytest.approx(166.6666667)
    assert buyer.remaining_kg == pytest.approx(0.0)
    assert farmer.funds.cash == pytest.approx(acc * 260 + res * 100)
    assert farmer.funds.cash == pytest.approx(-buyer.funds + res * 100)


def test_allocate_sale_nothing_offered():
    farmer, buyer, ledger = _sale_setup()
    assert ag.allocate_sale(farmer, buyer, 0.0, "gcb", ledger) == (0.0, 0.0)
    assert ledger.pair(farmer.id, buyer.id).alpha == 1


def _loan_setup(threshold):
    farmer = producer()
    lender = ag.LoanProviderAgent("coop", EvaluationParams(threshold=threshold))
    ledger = EvidenceLedger([farmer.id, lender.id])
    return farmer, lender, ledger


def test_lenient_lender_grants():
    farmer, lender, ledger = _loan_setup(0.0)
    assert ag.request_and_grant_loan(farmer, lender, 1000.0, "full", ledger)
    assert farmer.funds.cash == 1000.0 and farmer.funds.outstanding_loan == 1000.0
    assert lender.funds == -1000.0 and len(lender.loan_book) == 1
    assert ledger.pair(farmer.id, lender.id).alpha == 2


def test_strict_lender_refuses_defaulter():
    farmer, lender, ledger = _loan_setup(1.0)
    for _ in range(5):
        ledger.record(lender.id, farmer.id, False)
    assert not ag.request_and_grant_loan(farmer, lender, 1000.0, "full", ledger)
    assert ledger.pair(farmer.id, lender.id).beta == 2
    assert farmer.funds.cash == 0.0 and not lender.loan_book


def test_lender_evaluation_penalises_bad_history():
    farmer, lender, ledger = _loan_setup(0.5)
    fresh = ag.lender_evaluation(farmer, lender, 1000.0, ledger, repayments=[500.0, 500.0])
    assert ag.lender_evaluation(farmer, lender, 1000.0, ledger, repayments=[0.0, 1000.0]) < fresh
    ledger.record(lender.id, farmer.id, False)
    assert ag.lender_evaluation(farmer, lender, 1000.0, ledger, repayments=[500.0, 500.0]) < fresh


def test_proxy_loan_rule_blocks_recent_defaulters():
    farmer, lender, ledger = _loan_setup(1.0)
    beh = ag.BehaviorParams(default_memory=12)
    farmer.last_default_tick = 5
    assert not ag.request_and_grant_loan(farmer, lender, 100.0, "proxy", ledger, tick=10, behavior=beh)
    assert ag.request_and_grant_loan(farmer, lender, 100.0, "proxy", ledger, tick=18, behavior=beh)


def test_loan_record_state():
    rec = ag.LoanRecord(0, 100.0, 3)
    assert rec.is_open and rec.outstanding == 100.0
    rec.repaid = 100.0
    assert not rec.is_open
    off = ag.LoanRecord(0, 100.0, 3, 20.0, written_off=True)
    assert not off.is_open and off.outstanding == 0.0
    with pytest.raises(ValueError):
        ag.LoanRecord(0, 0.0, 0)


def test_producer_area_validated():
    with pytest.raises(ValueError):
        producer(area=0.5)
    assert producer(area=3.0).trees == 2079
