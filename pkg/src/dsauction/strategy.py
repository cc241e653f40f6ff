"""Agent best responses and market-power bookkeeping.

Buyers respond to an allocated demand with a money bid; sellers respond to
an announced price with an availability.  Market power is an agent's share
of the total money (buyers) or the total availability (sellers); it is zero
for price takers and can either be computed exactly from everyone's bids or
estimated by each agent alone from its own previous-round data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMarketError
from .model import LogUtility, SellerSpec

# Estimates are clipped into [0, 1 - MARKET_POWER_CAP_EPS]: a market power of
# exactly 1 makes the seller response unsolvable (perceived revenue is zero).
MARKET_POWER_CAP_EPS = 1e-6


@dataclass(frozen=True)
class BuyerState:
    """One buyer's view of an auction round: bid, demand, market power."""

    bid: float = 0.0
    demand: float = 0.0
    market_power: float = 0.0

    def __post_init__(self):
        if self.bid < 0:
            raise ValueError("bid must be >= 0")
        if self.demand < 0:
            raise ValueError("demand must be >= 0")
        if not 0.0 <= self.market_power <= 1.0:
            raise ValueError("buyer market power must lie in [0, 1]")


@dataclass(frozen=True)
class SellerState:
    """One seller's view of a round: availability, market power, capacity dual.

    The dual is zero whenever the seller is not offering its entire
    generation; it is nonpositive at the capacity boundary.
    """

    availability: float = 0.0
    market_power: float = 0.0
    capacity_dual: float = 0.0

    def __post_init__(self):
        if self.availability < 0:
            raise ValueError("availability must be >= 0")
        if not 0.0 <= self.market_power <= 1.0:
            raise ValueError("seller market power must lie in [0, 1]")
        if self.capacity_dual > 0:
            raise ValueError("capacity dual must be <= 0")


def buyer_bid(demand: float, utility: LogUtility, market_power: float = 0.0) -> float:
    """Optimal money bid for an allocated demand: d * u'(d) * (1 - beta).

    With market_power = 0 this is the price-taking bid.  A zero demand bids
    zero money.
    """
    if demand < 0:
        raise ValueError("demand must be >= 0")
    if not 0.0 <= market_power <= 1.0:
        raise ValueError("market power must lie in [0, 1]")
    if demand == 0.0:
        return 0.0
    return float(demand * utility.marginal(demand) * (1.0 - market_power))


def seller_availability(price: float, seller: SellerSpec,
                        market_power: float = 0.0) -> tuple[float, float]:
    """Optimal availability and capacity dual at an announced price.

    Solves v'(g - a) = p*(1 - alpha) for the interior offer and clips it to
    [0, g].  Returns (availability, rho) where the dual rho is zero off the
    capacity bound and v'(0) - p*(1 - alpha) <= 0 when the whole generation
    is offered.  A perceived price at or below v'(g) yields (0, 0).
    """
    if price <= 0:
        raise ValueError("price must be positive")
    if not 0.0 <= market_power < 1.0:
        raise DegenerateMarketError(
            "seller market power must lie in [0, 1); a full monopoly has no "
            "finite best response")
    u = seller.utility
    g = seller.generation
    perceived = price * (1.0 - market_power)
    if perceived <= float(u.marginal(g)):
        return 0.0, 0.0
    if perceived >= float(u.marginal(0.0)):
        return g, float(u.marginal(0.0)) - perceived
    retained = u.x / perceived - 1.0 / u.y  # solves v'(retained) = perceived
    return g - retained, 0.0


def market_power_buyers_exact(bids, virtual_bid: float = 0.0) -> np.ndarray:
    """Exact buyer market powers: each bid over the virtual-extended total."""
    bids = np.asarray(bids, dtype=float)
    if np.any(bids < 0) or virtual_bid < 0:
        raise ValueError("bids must be >= 0")
    total = virtual_bid + bids.sum()
    if total <= 0:
        raise DegenerateMarketError("no money in the market: total bids are zero")
    return bids / total


def market_power_sellers_exact(availabilities, virtual_availability: float = 0.0) -> np.ndarray:
    """Exact seller market powers: each availability over the extended total."""
    avails = np.asarray(availabilities, dtype=float)
    if np.any(avails < 0) or virtual_availability < 0:
        raise ValueError("availabilities must be >= 0")
    total = virtual_availability + avails.sum()
    if total <= 0:
        raise DegenerateMarketError("no energy offered: total availability is zero")
    return avails / total


def estimate_beta(prev_bid: float, prev_demand: float, utility: LogUtility,
                  cap: float = 1.0 - MARKET_POWER_CAP_EPS) -> float:
    """A buyer's own market-power estimate from its last bid and demand.

    Inverts the bid rule: beta = 1 - b / (d * u'(d)), clipped into [0, cap].
    Undefined at zero demand; the caller should keep its previous estimate
    in that case.
    """
    if prev_demand <= 0:
        raise DegenerateMarketError(
            "market-power estimate undefined at zero demand")
    raw = 1.0 - prev_bid / (prev_demand * float(utility.marginal(prev_demand)))
    return float(min(max(raw, 0.0), cap))


def estimate_alpha(prev_price: float, prev_availability: float, prev_rho: float,
                   seller: SellerSpec,
                   cap: float = 1.0 - MARKET_POWER_CAP_EPS) -> float:
    """A seller's own market-power estimate from its last round.

    Inverts the availability rule: alpha = 1 - (v'(g - a) - rho) / p,
    clipped into [0, cap].
    """
    if prev_price <= 0:
        raise ValueError("price must be positive")
    if not 0.0 <= prev_availability <= seller.generation:
        raise ValueError("availability must lie in [0, generation]")
    retained = seller.generation - prev_availability
    raw = 1.0 - (float(seller.utility.marginal(retained)) - prev_rho) / prev_price
    return float(min(max(raw, 0.0), cap))
