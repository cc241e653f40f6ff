"""Iterative distributed double auction.

Each round the aggregator announces a price to the sellers and a demand to
each buyer, collects availabilities and money bids, clears the books, and
re-allocates energy in proportion to the bids.  The loop terminates when
neither the price nor any bid moves beyond tolerance, which is the market's
(generalized Nash) equilibrium.

Round structure (price first, then demands, so the books of every recorded
round clear exactly):

1. sellers respond to the announced price with availabilities and duals;
2. buyers respond to their current demand signals with bids;
3. the clearing price equates money in to energy out;
4. demands are re-allocated proportionally to bids at the cleared price;
5. in anticipatory mode each agent re-estimates its market power from its
   own previous round;
6. the announced price moves toward the cleared price under damping.

The announced price is damped because the raw best-response map can
overshoot: its local gain on the seller side is about (p+ps)*A'(p)/A(p),
which for saturating log utilities routinely exceeds one in magnitude.  The
gain is available in closed form from the sellers' responses, so each round
the effective damping weight is capped at 0.8/(1 + gain); a deterministic
backstop additionally halves the weight whenever the price oscillation
keeps growing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import equilibrium as eqm
from . import metrics
from .errors import DegenerateMarketError
from .model import (
    Scenario,
    log_utility_marginal,
    log_utility_marginal_inverse,
    log_utility_value,
    require_valid,
)
from .strategy import MARKET_POWER_CAP_EPS

PRICE_TAKING = "price-taking"
PRICE_ANTICIPATING = "price-anticipating"
_MODE_ALIASES = {
    "pt": PRICE_TAKING, PRICE_TAKING: PRICE_TAKING,
    "pa": PRICE_ANTICIPATING, PRICE_ANTICIPATING: PRICE_ANTICIPATING,
}


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of the iterative auction.

    mode: "price-taking" (market powers pinned at zero) or
        "price-anticipating" ("pt"/"pa" accepted).
    damping: upper bound on the weight of the newly cleared price in the
        announced price update, in (0, 1]; the engine lowers the effective
        weight when the measured local gain of the clearing map demands it.
    price_tol / bid_tol: termination thresholds on the change of the
        cleared price and of any single bid between consecutive rounds.
        Because best-response dynamics approach their fixed point
        geometrically, the loop also projects the remaining drift from the
        measured contraction rate and keeps going until that tail fits
        within the price budget, so the reported price is within about ten
        price_tol of the true fixed point even on slowly relaxing markets.
    initial_price: first price announced to sellers; None picks the
        geometric midpoint of the price interval on which both market sides
        are active, which keeps the first round alive.
    initial_demands: first demand signals; None gives every buyer its
        price-taking demand at the initial effective buyer price.
    power_estimates: "estimated" has each anticipatory agent infer its own
        market power from its previous round only; "exact" uses everyone's
        shares of the books (full awareness).
    """

    mode: str = PRICE_TAKING
    damping: float = 0.25
    price_tol: float = 1e-8
    bid_tol: float = 1e-8
    max_iters: int = 10_000
    initial_price: float | None = None
    initial_demands: tuple[float, ...] | None = None
    power_estimates: str = "estimated"

    def __post_init__(self):
        if self.mode not in _MODE_ALIASES:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "mode", _MODE_ALIASES[self.mode])
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.price_tol <= 0 or self.bid_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.initial_price is not None and not self.initial_price > 0:
            raise ValueError("initial price must be positive")
        if self.power_estimates not in ("estimated", "exact"):
            raise ValueError("power_estimates must be 'estimated' or 'exact'")


@dataclass(frozen=True)
class IterationRecord:
    """One cleared round: the books and everyone's state.

    price is the exact clearing price of this round's books, so each record
    satisfies the balance identity
    sum(demands) = (sum(bids) + virtual bid)/(price + ps) - a0.
    """

    k: int
    price: float
    bids: np.ndarray
    availabilities: np.ndarray
    demands: np.ndarray
    betas: np.ndarray
    alphas: np.ndarray
    rhos: np.ndarray


@dataclass
class AuctionOutcome:
    converged: bool
    iterations: list[IterationRecord] = field(default_factory=list)
    final: eqm.Equilibrium | None = None

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)


def clearing_price(bids, extra_virtual_bid: float, availabilities,
                   virtual_availability: float, surcharge: float) -> float:
    """Price at which money in equals energy out, floored at zero.

    The virtual trader offers virtual_availability units and buys them all
    back at the effective buyer price, so its money and energy cancel and
    the clearing equation reduces to

        extra_virtual_bid + sum(bids) = (p + ps) * sum(availabilities).

    extra_virtual_bid is money injected on top of that buy-back (normally
    zero).  Raises when the sellers offer nothing at all.
    """
    bids = np.asarray(bids, dtype=float)
    avail = np.asarray(availabilities, dtype=float)
    if extra_virtual_bid < 0 or np.any(bids < 0):
        raise ValueError("bids must be >= 0")
    if virtual_availability < 0 or surcharge < 0:
        raise ValueError("a0 and ps must be >= 0")
    total_avail = float(avail.sum())
    if total_avail <= 0:
        raise DegenerateMarketError("cannot clear: total availability is zero")
    price = (extra_virtual_bid + float(bids.sum())) / total_avail - surcharge
    return max(price, 0.0)


def allocate(bids, price: float, surcharge: float = 0.0) -> np.ndarray:
    """Proportional allocation d_i = b_i / (p + ps)."""
    if price + surcharge <= 0:
        raise ValueError("effective buyer price must be positive")
    return np.asarray(bids, dtype=float) / (price + surcharge)


def _seller_responses(price, sx, sy, sg, alphas):
    """Vectorized seller best responses at an announced price.

    Returns (availabilities, rhos): the clipped solutions of
    v'(g - a) = p (1 - alpha) with the capacity duals v'(0) - p (1 - alpha)
    where the full generation is offered.
    """
    perceived = price * (1.0 - alphas)
    retained = sx / perceived - 1.0 / sy
    avail = np.clip(sg - retained, 0.0, sg)
    rho = np.minimum(sx * sy - perceived, 0.0) * (avail >= sg)
    return avail, rho


def _clearing_gain(price, buyer_price, sx, sy, sg, alphas, avails):
    """Magnitude of d(cleared price)/d(announced price) at the current books.

    An interior seller moves by dA/dp = x/(p^2 (1 - alpha)) and the cleared
    price responds through B/A by -(p_buy) A'/A.  A seller pinned at zero or
    at capacity has no local slope, but its full slope is blended back in as
    the perceived price approaches its kink, so a step across the kink never
    lands with damping tuned for the flat side.
    """
    perceived = price * (1.0 - alphas)
    slopes = sx / (price ** 2 * (1.0 - alphas))
    v_full = log_utility_marginal(sx, sy, sg)
    v_zero = sx * sy
    weight = np.ones_like(slopes)
    out = avails <= 0.0
    bound = avails >= sg
    margin = 0.25 * perceived
    weight[out] = np.maximum(1.0 - (v_full[out] - perceived[out]) / margin[out], 0.0)
    weight[bound] = np.maximum(1.0 - (perceived[bound] - v_zero[bound]) / margin[bound], 0.0)
    slope = float((weight * slopes).sum())
    total = float(avails.sum())
    return buyer_price * slope / max(total, 1e-300)


def _power_gain(price, sx, sy, sg, avails, pool):
    """Largest loop gain of the seller market-power feedback.

    A power change moves the availability by da/dalpha = -p/|v''(g - a)| and
    the availability share responds by (T - a)/T^2; their product measures
    how violently the share estimate chases itself.
    """
    interior = (avails > 0.0) & (avails < sg)
    if not interior.any() or pool <= 0:
        return 0.0
    retained = sg[interior] - avails[interior]
    curvature = sx[interior] * sy[interior] ** 2 / (sy[interior] * retained + 1.0) ** 2
    sensitivity = (pool - avails[interior]) / pool ** 2
    return float(np.max(price / curvature * sensitivity))


def _grew_mostly(deltas) -> bool:
    grown = sum(1 for a, b in zip(deltas, deltas[1:]) if b > a)
    return grown >= 0.8 * (len(deltas) - 1)


def _tail_within(price_deltas, dp, price, tol) -> bool:
    """True when the projected remaining price drift fits in ~9x the budget.

    The contraction rate is taken from the ten-step envelope of the price
    steps (robust to oscillation beats); a geometric tail then adds at most
    dp * r / (1 - r) more drift.  Steps at the floating-point noise floor
    terminate unconditionally.
    """
    if dp <= 1e-14 * max(price, 1.0):
        return True
    if len(price_deltas) < 11:
        return False
    past = price_deltas[-11]
    if past <= 0.0:
        return True
    rate = min((dp / past) ** 0.1, 0.9999)
    return dp * rate / (1.0 - rate) <= 9.0 * tol


def _zero_trade_outcome(scenario) -> AuctionOutcome:
    sx, sy, sg = scenario.seller_params()
    p = float(np.min(log_utility_marginal(sx, sy, sg)))
    eq = eqm.Equilibrium(
        "surcharge", p,
        np.zeros(scenario.n_buyers), np.zeros(scenario.n_sellers),
        welfare=float(log_utility_value(sx, sy, sg).sum()),
        revenue=0.0,
        loss=metrics.efficiency_loss(scenario,
                                     np.zeros(scenario.n_buyers),
                                     np.zeros(scenario.n_sellers)),
        kkt=eqm.KktDiagnostics(p, np.zeros(scenario.n_sellers),
                               np.zeros(scenario.n_sellers)),
        surcharge=scenario.aggregator.surcharge)
    return AuctionOutcome(converged=True, iterations=[], final=eq)


def run_auction(scenario: Scenario, config: EngineConfig | None = None) -> AuctionOutcome:
    """Run the iterative auction to convergence or max_iters.

    Returns the full per-round trace and the final state packaged as an
    Equilibrium.  Non-convergence is reported through converged=False, not
    an exception.  A surcharge at or above the zero-trade bound returns the
    no-trade outcome immediately.

    Identical scenario and configuration give a bit-identical trace.
    """
    cfg = config or EngineConfig()
    require_valid(scenario)
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    a0 = scenario.aggregator.virtual_availability
    ps = scenario.aggregator.surcharge
    n, m = scenario.n_buyers, scenario.n_sellers
    anticipating = cfg.mode == PRICE_ANTICIPATING
    if anticipating and a0 <= 0 and (n < 2 or m < 2):
        raise DegenerateMarketError(
            "anticipatory mode needs a virtual trader or at least two "
            "agents on each side")

    bound = eqm.surcharge_upper_bound(scenario)
    if ps >= bound:
        return _zero_trade_outcome(scenario)

    p_floor = float(np.min(log_utility_marginal(sx, sy, sg)))
    p_ceil = float(np.max(bx * by))
    announced = cfg.initial_price if cfg.initial_price is not None \
        else math.sqrt(p_floor * (p_ceil - ps))
    if cfg.initial_demands is not None:
        signals = np.asarray(cfg.initial_demands, dtype=float)
        if signals.shape != (n,) or np.any(signals < 0):
            raise ValueError("initial demands must be one nonnegative value per buyer")
        signals = signals.copy()
    else:
        signals = log_utility_marginal_inverse(bx, by, announced + ps)

    betas = np.zeros(n)
    alphas = np.zeros(m)
    scale = 1.0  # backstop shrink factor on the damping cap
    cap = 1.0 - MARKET_POWER_CAP_EPS
    records: list[IterationRecord] = []
    price_deltas: list[float] = []
    prev = None  # (price, bids, demands, avails, rhos) of the last cleared round
    converged = False

    for k in range(1, cfg.max_iters + 1):
        avails, rhos = _seller_responses(announced, sx, sy, sg, alphas)
        bids = signals * log_utility_marginal(bx, by, signals) * (1.0 - betas)

        if avails.sum() <= 0.0:
            # no supply at this price: raise the announcement and let the
            # sellers' power estimates decay (an agent offering nothing has
            # no market share), otherwise the loop could starve forever
            announced = (1.0 - cfg.damping) * announced + cfg.damping * p_ceil
            alphas *= 0.5
            continue
        if bids.sum() <= 0.0:
            # no money at these signals: lower the announcement to revive demand
            announced = max((1.0 - cfg.damping) * announced
                            + cfg.damping * 0.5 * p_floor, 1e-12)
            signals = log_utility_marginal_inverse(bx, by, announced + ps)
            continue

        price = clearing_price(bids, 0.0, avails, a0, ps)
        if price + ps <= 0.0:
            announced = max((1.0 - cfg.damping) * announced, 1e-12)
            continue
        demands = allocate(bids, price, ps)

        records.append(IterationRecord(k, price, bids, avails, demands,
                                       betas.copy(), alphas.copy(), rhos))

        if prev is not None:
            p_prev, b_prev, a_prev_rec = prev[0], prev[1], prev[3]
            dp = abs(price - p_prev)
            price_deltas.append(dp)
            # both sides' declarations must be still: buyers' money bids and
            # sellers' availability offers
            if (dp <= cfg.price_tol
                    and float(np.max(np.abs(bids - b_prev))) <= cfg.bid_tol
                    and float(np.max(np.abs(avails - a_prev_rec))) <= cfg.bid_tol
                    and _tail_within(price_deltas, dp, price, cfg.price_tol)):
                converged = True
                break
            # backstop: shrink the cap if the oscillation has kept growing
            if len(price_deltas) >= 10 and _grew_mostly(price_deltas[-10:]):
                scale = max(scale * 0.5, 1.0 / 64.0)
                del price_deltas[:-1]

        theta = min(
            cfg.damping,
            scale * 0.8 / (1.0 + _clearing_gain(announced, price + ps,
                                                sx, sy, sg, alphas, avails)))
        if anticipating:
            theta = min(theta, scale * 0.8 / (
                1.0 + _power_gain(announced, sx, sy, sg, avails,
                                  a0 + float(avails.sum()))))
            if cfg.power_estimates == "exact":
                virtual_bid = (price + ps) * a0
                beta_target = np.clip(bids / (virtual_bid + bids.sum()), 0.0, cap)
                alpha_target = np.clip(avails / (a0 + avails.sum()), 0.0, cap)
            elif prev is not None and prev[0] > 0.0:
                # each agent inverts its own bid rule on its previous round;
                # a buyer with no previous demand keeps its estimate
                p_prev, b_prev, d_prev, a_prev, rho_prev = prev
                beta_target = betas.copy()
                live = d_prev > 0
                est = 1.0 - b_prev[live] / (
                    d_prev[live] * log_utility_marginal(bx[live], by[live], d_prev[live]))
                beta_target[live] = np.clip(est, 0.0, cap)
                est = 1.0 - (log_utility_marginal(sx, sy, sg - a_prev) - rho_prev) / p_prev
                alpha_target = np.clip(est, 0.0, cap)
            else:
                beta_target, alpha_target = betas, alphas
            betas = betas + theta * (beta_target - betas)
            alphas = alphas + theta * (alpha_target - alphas)

        announced = (1.0 - theta) * announced + theta * price
        signals = demands.copy()
        dead = bids <= 0.0
        if dead.any():
            # a zero bidder re-enters when the price falls below its marginal
            # value at zero; the proportional rule alone would trap it at zero
            signals[dead] = log_utility_marginal_inverse(
                bx[dead], by[dead], (announced + ps) / (1.0 - betas[dead]))
        prev = (price, bids, demands, avails, rhos)

    final = _final_equilibrium(scenario, records, anticipating) if records else None
    return AuctionOutcome(converged=converged, iterations=records, final=final)


def _final_equilibrium(scenario, records, anticipating) -> eqm.Equilibrium:
    last = records[-1]
    a0 = scenario.aggregator.virtual_availability
    ps = scenario.aggregator.surcharge
    d, a = last.demands, last.availabilities
    welfare = metrics.social_welfare(scenario, d, a)
    loss = metrics.efficiency_loss(scenario, d, a)
    if anticipating:
        regime = "price-anticipating"
        pool = a0 + float(a.sum())
        shares = a / pool if pool > 0 else np.zeros_like(a)
        lam = last.rhos / np.where(shares < 1.0, 1.0 - shares, 1.0)
        try:
            objective = metrics.anticipation_objective(scenario, d, a)
        except DegenerateMarketError:
            objective = None  # corner state the payoffs are undefined at
    else:
        regime = "surcharge" if ps > 0 else "price-taking"
        lam = last.rhos
        objective = None
    kkt = eqm.KktDiagnostics(mu=last.price, lambdas=lam, rhos=last.rhos)
    return eqm.Equilibrium(regime, last.price, d.copy(), a.copy(), welfare,
                           revenue=float(ps * a.sum()), loss=loss, kkt=kkt,
                           surcharge=ps, anticipation_objective=objective)
