import math

import numpy as np
import pytest

import dsauction as da
from dsauction.errors import DegenerateMarketError


def unit_seller(g=1.0):
    return da.SellerSpec(da.LogUtility(1.0, 1.0), g)


def test_buyer_bid_fixed_points():
    u = da.LogUtility(1.0, 1.0)
    assert da.buyer_bid(0.0, u, 0.7) == 0.0
    assert math.isclose(da.buyer_bid(1.0, u, 0.0), 0.5, rel_tol=1e-14)
    assert math.isclose(da.buyer_bid(1.0, u, 0.5), 0.25, rel_tol=1e-14)
    assert da.buyer_bid(1.0, u, 1.0) == 0.0  # full monopsony power bids nothing


def test_buyer_bid_decreasing_in_power():
    u = da.LogUtility(1.4, 0.8)
    bids = [da.buyer_bid(2.0, u, b) for b in np.linspace(0.0, 0.99, 25)]
    assert all(b1 > b2 for b1, b2 in zip(bids, bids[1:]))


def test_seller_availability_fixed_points():
    s = unit_seller()
    # at or below the marginal value of the last retained unit: no offer
    assert da.seller_availability(0.5, s) == (0.0, 0.0)
    assert da.seller_availability(0.3, s) == (0.0, 0.0)
    a, rho = da.seller_availability(2.0 / 3.0, s)
    assert math.isclose(a, 0.5, rel_tol=1e-12) and rho == 0.0
    a, rho = da.seller_availability(2.0, s)
    assert a == 1.0 and math.isclose(rho, -1.0, rel_tol=1e-14)


def test_seller_availability_nondecreasing_in_price():
    s = da.SellerSpec(da.LogUtility(0.8, 1.3), 1.7)
    prices = np.linspace(0.05, 4.0, 200)
    avails = [da.seller_availability(p, s)[0] for p in prices]
    assert all(a2 >= a1 - 1e-15 for a1, a2 in zip(avails, avails[1:]))


def test_seller_availability_rejects_monopoly_power():
    with pytest.raises(DegenerateMarketError):
        da.seller_availability(1.0, unit_seller(), 1.0)


def test_exact_market_powers():
    assert da.market_power_buyers_exact([1.0, 1.0]).tolist() == [0.5, 0.5]
    assert da.market_power_buyers_exact([3.0]).tolist() == [1.0]
    assert da.market_power_buyers_exact([1.0, 1.0], 2.0).tolist() == [0.25, 0.25]
    assert da.market_power_sellers_exact([2.0, 2.0]).tolist() == [0.5, 0.5]
    assert da.market_power_sellers_exact([1.0]).tolist() == [1.0]
    assert da.market_power_sellers_exact([1.0, 3.0], 4.0).tolist() == [0.125, 0.375]


def test_market_power_degenerate_total():
    with pytest.raises(DegenerateMarketError):
        da.market_power_buyers_exact([0.0, 0.0])


def test_market_powers_dilute_with_virtual_size():
    bids = [1.0, 2.5, 0.3]
    prev = da.market_power_buyers_exact(bids, 0.0)
    for b0 in (0.5, 2.0, 10.0, 1e4):
        cur = da.market_power_buyers_exact(bids, b0)
        assert np.all(cur < prev)
        prev = cur
    assert np.all(cur < 1e-3)


def test_estimate_beta_round_trip():
    rng = np.random.default_rng(31)
    for _ in range(100):
        x, y = rng.uniform(0.2, 3.0, size=2)
        u = da.LogUtility(x, y)
        d = rng.uniform(1e-3, 10.0)
        beta = rng.uniform(0.0, 0.999)
        bid = da.buyer_bid(d, u, beta)
        assert math.isclose(da.estimate_beta(bid, d, u), beta,
                            rel_tol=1e-12, abs_tol=1e-12)


def test_estimate_beta_values():
    u = da.LogUtility(1.0, 1.0)
    assert da.estimate_beta(0.5, 1.0, u) == 0.0  # price-taking bid
    assert math.isclose(da.estimate_beta(0.25, 1.0, u), 0.5, rel_tol=1e-14)
    with pytest.raises(DegenerateMarketError):
        da.estimate_beta(0.1, 0.0, u)


def test_estimate_alpha_round_trip():
    rng = np.random.default_rng(32)
    hits = 0
    while hits < 100:
        x, y = rng.uniform(0.2, 3.0, size=2)
        g = rng.uniform(0.3, 3.0)
        s = da.SellerSpec(da.LogUtility(x, y), g)
        p = rng.uniform(0.05, 4.0)
        alpha = rng.uniform(0.0, 0.9)
        a, rho = da.seller_availability(p, s, alpha)
        if not 0.0 < a < g:
            continue  # round trip only holds strictly interior
        hits += 1
        assert math.isclose(da.estimate_alpha(p, a, rho, s), alpha,
                            rel_tol=1e-10, abs_tol=1e-12)


def test_estimate_alpha_values():
    s = unit_seller()
    # interior price-taking point: v'(g - a) = p, rho = 0
    a, rho = da.seller_availability(2.0 / 3.0, s, 0.0)
    assert da.estimate_alpha(2.0 / 3.0, a, rho, s) == 0.0
    # raw estimate -0.5 clips to zero
    assert da.estimate_alpha(1.0, 1.0, -0.5, s) == 0.0


def test_estimate_clipping_cap():
    from dsauction.strategy import MARKET_POWER_CAP_EPS

    u = da.LogUtility(1.0, 1.0)
    # a tiny bid against a large demand pushes the raw estimate toward 1
    assert da.estimate_beta(1e-12, 5.0, u) == 1.0 - MARKET_POWER_CAP_EPS


def test_state_invariants():
    da.BuyerState(bid=1.0, demand=0.5, market_power=0.3)
    da.SellerState(availability=0.5, market_power=0.2, capacity_dual=-0.1)
    with pytest.raises(ValueError):
        da.BuyerState(bid=-1.0)
    with pytest.raises(ValueError):
        da.SellerState(capacity_dual=0.5)
    with pytest.raises(ValueError):
        da.SellerState(market_power=1.5)
