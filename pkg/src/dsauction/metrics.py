"""Welfare, payoffs, anticipation objectives, efficiency loss and sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMarketError
from .model import LogUtility, Scenario, SellerSpec


def _check_feasible(scenario: Scenario, demands, availabilities):
    d = np.asarray(demands, dtype=float)
    a = np.asarray(availabilities, dtype=float)
    if d.shape != (scenario.n_buyers,) or a.shape != (scenario.n_sellers,):
        raise ValueError("allocation lengths must match the agent counts")
    _, _, g = scenario.seller_params()
    if np.any(d < 0) or np.any(a < 0) or np.any(a > g * (1 + 1e-12) + 1e-15):
        raise ValueError("infeasible allocation: negative amounts or a_j > g_j")
    return d, np.minimum(a, g)


def social_welfare(scenario: Scenario, demands, availabilities) -> float:
    """Total utility of the allocation: sum of buyer utilities at their
    demands plus seller utilities at their retained energy."""
    d, a = _check_feasible(scenario, demands, availabilities)
    total = 0.0
    for bi, di in zip(scenario.buyers, d):
        total += float(bi.utility.value(di))
    for sj, aj in zip(scenario.sellers, a):
        total += float(sj.utility.value(sj.generation - aj))
    return total


def buyer_payoff(utility: LogUtility, demand: float, bid: float) -> float:
    """Consumption utility minus money paid; may be negative."""
    if demand < 0 or bid < 0:
        raise ValueError("demand and bid must be >= 0")
    return float(utility.value(demand)) - bid


def seller_payoff(seller: SellerSpec, availability: float, price: float) -> float:
    """Retained-energy utility plus sale proceeds at the seller price."""
    if not 0.0 <= availability <= seller.generation:
        raise ValueError("availability must lie in [0, generation]")
    if price < 0:
        raise ValueError("price must be >= 0")
    return float(seller.utility.value(seller.generation - availability)) + price * availability


def pi_buyer(utility: LogUtility, demand: float, total_availability: float) -> float:
    """Anticipation payoff of a buyer against a fixed availability pool.

    pi = (1 - d/T) * u(d) + (1/T) * integral_0^d u(z) dz, where T is the
    total availability including any virtual component.  Its derivative in d
    is (1 - d/T) * u'(d), so price anticipators discount their marginal
    value by their allocation share.
    """
    if total_availability <= 0:
        raise DegenerateMarketError("availability pool must be positive")
    if not 0.0 <= demand <= total_availability:
        raise ValueError("demand must lie in [0, total availability]")
    share = demand / total_availability
    return float((1.0 - share) * utility.value(demand)
                 + utility.integral(demand) / total_availability)


def pi_seller(seller: SellerSpec, availability: float, others_total: float) -> float:
    """Anticipation payoff of a seller against the other sellers' total.

    pi = v(g - a) * T/O - (1/O) * integral_0^a v(g - z) dz with O the
    others' total (including any virtual component) and T = O + a.  Its
    derivative in a is -v'(g - a) * T/O.
    """
    if others_total <= 0:
        raise DegenerateMarketError(
            "seller anticipation payoff undefined without competing availability")
    if not 0.0 <= availability <= seller.generation:
        raise ValueError("availability must lie in [0, generation]")
    u = seller.utility
    g = seller.generation
    total = others_total + availability
    # integral_0^a v(g - z) dz = V(g) - V(g - a) with V the antiderivative
    tail = float(u.integral(g)) - float(u.integral(g - availability))
    return float(u.value(g - availability)) * total / others_total - tail / others_total


def anticipation_objective(scenario: Scenario, demands, availabilities) -> float:
    """Sum of all agents' anticipation payoffs at a feasible allocation.

    Totals are extended by the aggregator's virtual availability, so each
    seller competes against the others plus the virtual trader.
    """
    d, a = _check_feasible(scenario, demands, availabilities)
    a0 = scenario.aggregator.virtual_availability
    if a0 <= 0 and scenario.n_sellers < 2:
        raise DegenerateMarketError(
            "anticipation objective needs >= 2 sellers or a virtual trader")
    total = a0 + a.sum()
    if total <= 0:
        if np.any(d > 0):
            raise DegenerateMarketError(
                "positive demand against an empty availability pool")
        # no-trade limit: only the sellers' retained utility remains
        return float(sum(sj.utility.value(sj.generation)
                         for sj in scenario.sellers))
    value = 0.0
    for bi, di in zip(scenario.buyers, d):
        value += pi_buyer(bi.utility, float(di), float(total))
    for sj, aj in zip(scenario.sellers, a):
        value += pi_seller(sj, float(aj), float(total - aj))
    return value


def efficiency_loss(scenario: Scenario, demands, availabilities) -> float:
    """Relative welfare gap to the efficient allocation, clamped to [0, 1]."""
    from . import equilibrium as _eq  # local import to avoid a module cycle

    d, a = _check_feasible(scenario, demands, availabilities)
    best = _eq.solve_price_taking(scenario).welfare
    if best <= 0:
        raise DegenerateMarketError("efficient welfare is not positive")
    loss = (best - social_welfare(scenario, d, a)) / best
    return float(min(max(loss, 0.0), 1.0))


def revenue(surcharge: float, availabilities) -> float:
    """Aggregator revenue: surcharge times traded volume.

    The virtual trader's volume is excluded; its energy is bought back, not
    traded outward.
    """
    if surcharge < 0:
        raise ValueError("surcharge must be >= 0")
    return float(surcharge * np.asarray(availabilities, dtype=float).sum())


# ---------------------------------------------------------------------------
# sweep drivers
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Tabulated equilibria along one aggregator parameter.

    Rows are ordered by strictly increasing parameter value.  A row whose
    solve failed carries NaNs and converged=False; the sweep continues.
    """

    parameter: str
    values: np.ndarray
    prices: np.ndarray
    volumes: np.ndarray
    welfares: np.ndarray
    revenues: np.ndarray
    losses: np.ndarray
    converged: list[bool] = field(default_factory=list)

    def __len__(self):
        return len(self.values)


def _sweep(scenario: Scenario, parameter: str, values, solve_one) -> SweepResult:
    values = np.asarray(values, dtype=float)
    if np.any(np.diff(values) <= 0):
        raise ValueError("sweep grid must be strictly increasing")
    n = len(values)
    out = SweepResult(parameter, values,
                      np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan),
                      np.full(n, np.nan), np.full(n, np.nan), [])
    for i, v in enumerate(values):
        try:
            eq = solve_one(float(v))
        except Exception:
            out.converged.append(False)
            continue
        out.prices[i] = eq.price
        out.volumes[i] = eq.availabilities.sum()
        out.welfares[i] = eq.welfare
        out.revenues[i] = eq.revenue
        out.losses[i] = eq.loss
        out.converged.append(True)
    return out


def sweep_surcharge(scenario: Scenario, surcharges) -> SweepResult:
    """Price-taking equilibria across a grid of surcharge values."""
    from . import equilibrium as _eq

    return _sweep(scenario, "ps", surcharges,
                  lambda ps: _eq.solve_surcharge(scenario, ps))


def sweep_virtual(scenario: Scenario, virtual_availabilities) -> SweepResult:
    """Anticipatory equilibria across a grid of virtual-trader sizes."""
    from . import equilibrium as _eq
    from .model import AggregatorConfig

    def solve_one(a0):
        s = Scenario(scenario.buyers, scenario.sellers,
                     AggregatorConfig(a0, scenario.aggregator.surcharge))
        return _eq.solve_price_anticipation(s)

    return _sweep(scenario, "a0", virtual_availabilities, solve_one)
