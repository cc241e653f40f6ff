import math

import numpy as np
import pytest

import dsauction as da
from dsauction.errors import DegenerateMarketError


def scenario(buyers, sellers, a0=0.0, ps=0.0):
    return da.Scenario(
        tuple(da.BuyerSpec(da.LogUtility(x, y)) for x, y in buyers),
        tuple(da.SellerSpec(da.LogUtility(x, y), g) for x, y, g in sellers),
        da.AggregatorConfig(a0, ps))


# ---------------------------------------------------------------------------
# aggregate curves
# ---------------------------------------------------------------------------

def test_demand_function_values(r1):
    assert math.isclose(da.demand_function(r1, 2.0 / 3.0), 0.5, rel_tol=1e-12)
    assert da.demand_function(r1, 1.0) == 0.0
    assert da.demand_function(r1, 1.7) == 0.0
    two = scenario([(1, 1), (1, 1)], [(1, 1, 1)])
    assert math.isclose(da.demand_function(two, 0.5), 2.0, rel_tol=1e-12)


def test_availability_function_values(r1):
    assert da.availability_function(r1, 0.5) == 0.0
    assert math.isclose(da.availability_function(r1, 2.0 / 3.0), 0.5,
                        rel_tol=1e-12)
    assert da.availability_function(r1, 1.5) == 1.0


def test_curves_monotone_on_grid(family):
    for s in family[:10]:
        p = np.linspace(1e-3, 5.0, 1000)
        demand = da.demand_function(s, p)
        avail = da.availability_function(s, p)
        assert np.all(np.diff(demand) <= 1e-12)
        assert np.all(np.diff(avail) >= -1e-12)


def test_surcharge_upper_bound(r1):
    assert math.isclose(da.surcharge_upper_bound(r1), 0.5, rel_tol=1e-14)
    stronger = scenario([(2, 1)], [(1, 1, 1)])
    assert math.isclose(da.surcharge_upper_bound(stronger), 1.5, rel_tol=1e-14)


# ---------------------------------------------------------------------------
# price taking
# ---------------------------------------------------------------------------

def test_price_taking_analytic(r1):
    eq = da.solve_price_taking(r1)
    assert math.isclose(eq.price, 2.0 / 3.0, abs_tol=1e-10)
    assert math.isclose(float(eq.demands[0]), 0.5, abs_tol=1e-10)
    assert math.isclose(float(eq.availabilities[0]), 0.5, abs_tol=1e-10)
    assert math.isclose(eq.welfare, 2.0 * math.log(1.5), abs_tol=1e-10)
    assert eq.loss == 0.0 and eq.revenue == 0.0


def test_price_taking_capacity_bound():
    # strong buyer against a small seller: the capacity bound binds
    s = scenario([(4, 1)], [(1, 1, 0.5)])
    eq = da.solve_price_taking(s)
    assert math.isclose(eq.price, 8.0 / 3.0, abs_tol=1e-9)
    assert float(eq.availabilities[0]) == 0.5
    lam = float(eq.kkt.lambdas[0])
    assert math.isclose(lam, 1.0 - 8.0 / 3.0, abs_tol=1e-9)
    assert lam < 0
    assert da.kkt_residual(s, eq) < 1e-9


def test_price_taking_replication_invariance(r1):
    doubled = da.Scenario(r1.buyers * 2, r1.sellers * 2)
    eq = da.solve_price_taking(doubled)
    assert math.isclose(eq.price, 2.0 / 3.0, abs_tol=1e-10)
    assert math.isclose(eq.volume, 1.0, abs_tol=1e-9)


def test_price_taking_crossing_residual(family):
    for s in family:
        eq = da.solve_price_taking(s)
        gap = abs(da.availability_function(s, eq.price)
                  - da.demand_function(s, eq.price))
        assert gap < 1e-9 * max(1.0, eq.volume)
        # marginal conditions at the solution
        for b, d in zip(s.buyers, eq.demands):
            if d > 0:
                assert abs(float(b.utility.marginal(d)) - eq.price) < 1e-7
        for sj, a in zip(s.sellers, eq.availabilities):
            if 0 < a < sj.generation:
                assert abs(float(sj.utility.marginal(sj.generation - a))
                           - eq.price) < 1e-7


def test_price_taking_no_trade_error():
    s = scenario([(0.4, 1)], [(1, 1, 1)])
    with pytest.raises(da.ScenarioValidationError):
        da.solve_price_taking(s)


# ---------------------------------------------------------------------------
# surcharge
# ---------------------------------------------------------------------------

def test_surcharge_zero_matches_price_taking(r1):
    eq0 = da.solve_surcharge(r1, 0.0)
    eq = da.solve_price_taking(r1)
    assert eq0.price == eq.price and eq0.revenue == 0.0


def test_surcharge_analytic(r1):
    eq = da.solve_surcharge(r1, 0.2)
    d_expected = (11.0 - math.sqrt(109.0)) / 2.0
    assert math.isclose(float(eq.demands[0]), d_expected, abs_tol=1e-9)
    assert math.isclose(eq.revenue, 0.2 * d_expected, abs_tol=1e-9)
    assert math.isclose(eq.price, 1.0 / (1.0 + d_expected) - 0.2, abs_tol=1e-9)
    assert da.kkt_residual(r1_with_ps(r1, 0.2), eq) < 1e-9


def r1_with_ps(r1, ps):
    return da.Scenario(r1.buyers, r1.sellers, da.AggregatorConfig(0.0, ps))


def test_surcharge_zero_trade(r1):
    for ps in (0.5, 0.7, 2.0):
        eq = da.solve_surcharge(r1, ps)
        assert eq.volume == 0.0 and eq.revenue == 0.0
        assert eq.welfare == pytest.approx(math.log(2.0), abs=1e-12)


def test_surcharge_volume_below_efficient(family):
    for s in family[:10]:
        bound = da.surcharge_upper_bound(s)
        eff = da.solve_price_taking(s)
        eq = da.solve_surcharge(s, 0.3 * bound)
        assert eq.volume < eff.volume
        assert eq.welfare < eff.welfare
        assert eq.loss > 0


def test_optimal_surcharge_interior(r1):
    ps_opt, r_opt = da.optimal_surcharge(r1, scan_points=200)
    bound = da.surcharge_upper_bound(r1)
    assert 0.0 < ps_opt < bound
    assert r_opt > 0.0
    # no scanned point beats the polished maximum
    grid = np.linspace(0.0, bound, 500)
    revs = [da.solve_surcharge(r1, p).revenue for p in grid]
    assert r_opt >= max(revs) - 1e-9


# ---------------------------------------------------------------------------
# price anticipation
# ---------------------------------------------------------------------------

def nash_residual(s, eq):
    """Independent check of the stationarity system at the solved point."""
    bx, by = s.buyer_params()
    sx, sy, sg = s.seller_params()
    pool = s.aggregator.virtual_availability + float(eq.availabilities.sum())
    ps = s.aggregator.surcharge
    res = 0.0
    for i in range(s.n_buyers):
        d = float(eq.demands[i])
        if d > 0:
            lhs = (1.0 - d / pool) * bx[i] * by[i] / (by[i] * d + 1.0)
            res = max(res, abs(lhs - (eq.price + ps)))
    for j in range(s.n_sellers):
        a = float(eq.availabilities[j])
        if 0 < a < sg[j]:
            lhs = sx[j] * sy[j] / (sy[j] * (sg[j] - a) + 1.0)
            res = max(res, abs(lhs - (1.0 - a / pool) * eq.price))
    return res


def test_anticipation_single_pair_with_virtual(r1):
    s = da.Scenario(r1.buyers, r1.sellers, da.AggregatorConfig(1.0, 0.0))
    eq = da.solve_price_anticipation(s)
    # independently solve (1+a)^3 = 2 - a by Newton iteration
    a = 0.2
    for _ in range(60):
        f = (1.0 + a) ** 3 + a - 2.0
        a -= f / (3.0 * (1.0 + a) ** 2 + 1.0)
    assert math.isclose(float(eq.availabilities[0]), a, abs_tol=1e-9)
    assert math.isclose(eq.price, (1.0 + a) / (2.0 - a), abs_tol=1e-9)
    assert nash_residual(s, eq) < 1e-9


def test_anticipation_thin_market_collapse(r1):
    # two identical unit pairs: the mutual markup exceeds the gains from
    # trade and the anticipatory market shuts down
    s = da.Scenario(r1.buyers * 2, r1.sellers * 2)
    eq = da.solve_price_anticipation(s)
    assert eq.volume == 0.0
    assert math.isclose(eq.price, 1.0, abs_tol=1e-9)
    assert eq.welfare == pytest.approx(2.0 * math.log(2.0), abs=1e-12)
    assert da.kkt_residual(s, eq) < 1e-9


def test_anticipation_matches_price_taking_in_the_limit(family):
    for s in family[:5]:
        total_g = sum(x.generation for x in s.sellers)
        big = da.Scenario(s.buyers, s.sellers,
                          da.AggregatorConfig(1e6 * total_g, 0.0))
        pa = da.solve_price_anticipation(big)
        pt = da.solve_price_taking(s)
        assert np.max(np.abs(pa.demands - pt.demands)) < 1e-3
        assert np.max(np.abs(pa.availabilities - pt.availabilities)) < 1e-3


def test_anticipation_welfare_ordering(family):
    for s in family[:20]:
        pa = da.solve_price_anticipation(s)
        pt = da.solve_price_taking(s)
        assert pa.welfare <= pt.welfare + 1e-12
        assert 0.0 <= pa.loss <= 1.0


def test_anticipation_monopoly_guard(r1):
    with pytest.raises(DegenerateMarketError):
        da.solve_price_anticipation(r1)  # one seller, no virtual trader


def test_anticipation_stationarity(family):
    for s in family[:20]:
        eq = da.solve_price_anticipation(s)
        assert nash_residual(s, eq) < 1e-9
        assert da.kkt_residual(s, eq) < 1e-7
        assert abs(eq.kkt.mu - eq.price) == 0.0


def test_anticipation_balance(family):
    for s in family[:20]:
        eq = da.solve_price_anticipation(s)
        assert abs(float(eq.demands.sum() - eq.availabilities.sum())) \
            <= 1e-12 * max(1.0, eq.volume)


def test_loss_decreases_along_virtual_ladder(r1):
    s0 = da.Scenario(r1.buyers * 2, r1.sellers * 2)
    losses = []
    for a0 in (0.0, 1.0, 10.0, 100.0, 1000.0):
        s = da.Scenario(s0.buyers, s0.sellers, da.AggregatorConfig(a0, 0.0))
        losses.append(da.solve_price_anticipation(s).loss)
    assert all(l2 <= l1 + 1e-12 for l1, l2 in zip(losses, losses[1:]))


def test_concavity_along_segments(template_scenarios):
    s = template_scenarios[(2, 3)]
    s = da.Scenario(s.buyers, s.sellers, da.AggregatorConfig(0.5, 0.0))
    _, _, sg = s.seller_params()
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        a_end = rng.uniform(0.05, 0.95, size=(2, s.n_sellers)) * sg
        totals = a_end.sum(axis=1)
        d_end = rng.dirichlet(np.ones(s.n_buyers), size=2) * totals[:, None]
        mid_d = 0.5 * (d_end[0] + d_end[1])
        mid_a = 0.5 * (a_end[0] + a_end[1])
        val = [da.anticipation_objective(s, d_end[i], a_end[i]) for i in (0, 1)]
        mid = da.anticipation_objective(s, mid_d, mid_a)
        assert mid >= 0.5 * (val[0] + val[1]) - 1e-9


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def test_oracle_agrees_with_solver_small():
    s = scenario([(1, 1)], [(1, 1, 1)], a0=10.0)
    bf = da.brute_force_pi_max(s, 1e-3)
    eq = da.solve_price_anticipation(s)
    assert np.max(np.abs(bf.availabilities - eq.availabilities)) <= 2e-3
    assert np.max(np.abs(bf.demands - eq.demands)) <= 2e-3
    assert eq.anticipation_objective <= bf.objective + 1e-6


def test_oracle_monotone_refinement():
    s = scenario([(1.2, 0.9)], [(1, 1.1, 0.6), (0.8, 1, 0.6)], a0=8.0)
    values = [da.brute_force_pi_max(s, step).objective
              for step in (8e-3, 4e-3, 2e-3)]
    assert values[0] <= values[1] <= values[2]


def test_oracle_instance_caps():
    big = scenario([(1, 1)] * 3, [(1, 1, 1)] * 2, a0=1.0)
    with pytest.raises(ValueError):
        da.brute_force_pi_max(big, 1e-2)
    lone = scenario([(1, 1)], [(1, 1, 1)])
    with pytest.raises(DegenerateMarketError):
        da.brute_force_pi_max(lone, 1e-2)
