"""Direct (non-iterative) equilibrium solvers and their certification tools.

Three regimes are solved exactly by bisection on monotone scalar equations:

* price taking: the crossing A(p) = D(p) of the aggregate availability and
  demand curves, which is also the welfare-maximizing allocation;
* surcharge: the crossing D(p + ps) = A(p), where buyers pay ps on top of
  the price p the sellers receive;
* price anticipation: the stationary point of the anticipation payoffs,
  where every buyer discounts its marginal value by its allocation share
  and every seller marks up by its availability share of the pool
  T = a0 + sum(a_j), a0 being the aggregator's virtual availability.

The anticipatory solve nests a pool-size fixed point (given a candidate
price, find the self-consistent total availability) inside an outer
bisection on the price that balances demand and supply.  A brute-force grid
oracle over availability profiles is provided for test certification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import metrics
from .errors import DegenerateMarketError
from .model import (
    Scenario,
    log_utility_integral,
    log_utility_marginal,
    log_utility_marginal_inverse,
    log_utility_value,
    require_valid,
)

PRICE_TOL = 1e-13
BISECT_MAX_ITERS = 200


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KktDiagnostics:
    """Multipliers certifying an equilibrium.

    mu is the balance-constraint price (equal to the market price in every
    regime).  lambdas are the capacity duals of the planner system and rhos
    the capacity duals of the sellers' own problems; both are zero for
    sellers below capacity and nonpositive at the capacity bound.
    """

    mu: float
    lambdas: np.ndarray
    rhos: np.ndarray


@dataclass(frozen=True)
class Equilibrium:
    """A solved market outcome for one regime.

    regime is one of "price-taking", "surcharge", "price-anticipating".
    surcharge is the per-unit fee the outcome was solved at (buyers paid
    price + surcharge).  anticipation_objective is populated only for the
    anticipatory regime.  loss is the relative welfare gap to the efficient
    allocation.
    """

    regime: str
    price: float
    demands: np.ndarray
    availabilities: np.ndarray
    welfare: float
    revenue: float
    loss: float
    kkt: KktDiagnostics
    surcharge: float = 0.0
    anticipation_objective: float | None = None

    @property
    def volume(self) -> float:
        return float(self.availabilities.sum())


class BruteForceResult(NamedTuple):
    demands: np.ndarray
    availabilities: np.ndarray
    objective: float


# ---------------------------------------------------------------------------
# aggregate curves
# ---------------------------------------------------------------------------

def _curve_eval(price, per_agent):
    p = np.asarray(price, dtype=float)
    if np.any(p <= 0):
        raise ValueError("price must be positive")
    scalar = p.ndim == 0
    out = per_agent(np.atleast_1d(p)).sum(axis=0)
    return float(out[0]) if scalar else out


def demand_function(scenario: Scenario, price):
    """Total quantity demanded at a buyer price: sum of inverse marginals.

    Monotone nonincreasing; identically zero at and above the largest
    marginal value at zero.  Accepts a scalar or an array of prices.
    """
    bx, by = scenario.buyer_params()
    return _curve_eval(price, lambda p: np.maximum(
        bx[:, None] / p[None, :] - 1.0 / by[:, None], 0.0))


def availability_function(scenario: Scenario, price):
    """Total quantity offered at a seller price, excluding any virtual part.

    Zero at and below the smallest marginal value at full generation, then
    monotone increasing, then constant at total generation once every
    seller offers everything.
    """
    sx, sy, sg = scenario.seller_params()
    return _curve_eval(price, lambda p: np.clip(
        sg[:, None] + 1.0 / sy[:, None] - sx[:, None] / p[None, :],
        0.0, sg[:, None]))


def surcharge_upper_bound(scenario: Scenario) -> float:
    """Surcharge level at which trade vanishes entirely.

    Equals the gap between the strongest buyer's marginal value at zero and
    the cheapest seller's marginal value at full generation; nonpositive
    exactly when no profitable trade exists in the first place.
    """
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    return float(np.max(bx * by) - np.min(log_utility_marginal(sx, sy, sg)))


# ---------------------------------------------------------------------------
# scalar bisection
# ---------------------------------------------------------------------------

def _bisect(f, lo, hi, xtol=PRICE_TOL, max_iters=BISECT_MAX_ITERS):
    """Root of a sign-changing f on [lo, hi]; assumes f(lo) < 0 < f(hi) or
    the reverse."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    rising = flo < 0
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol * max(1.0, abs(mid)):
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == rising:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _price_bracket(scenario: Scenario):
    """(min_j v'_j(g_j), max of all marginals at zero): the price interval
    on which availability rises from zero while demand falls to zero."""
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    p_lo = float(np.min(log_utility_marginal(sx, sy, sg)))
    p_hi = float(max(np.max(bx * by), np.max(sx * sy)))
    return p_lo, p_hi


# ---------------------------------------------------------------------------
# price taking and surcharge
# ---------------------------------------------------------------------------

def _pt_allocations(scenario, price, buyer_price=None):
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    pb = price if buyer_price is None else buyer_price
    d = log_utility_marginal_inverse(bx, by, pb)
    a = np.clip(sg + 1.0 / sy - sx / price, 0.0, sg)
    return d, a


def _pt_duals(scenario, price, avails):
    """Capacity duals at a price-taking style solution: v'_j(0) - p where
    the capacity bound a_j = g_j binds, zero elsewhere."""
    sx, sy, sg = scenario.seller_params()
    lam = np.where(avails >= sg, np.minimum(sx * sy - price, 0.0), 0.0)
    return lam


def solve_price_taking(scenario: Scenario) -> Equilibrium:
    """Efficient equilibrium: bisection for the unique A(p) = D(p) crossing.

    Every buyer's marginal utility equals the price; every seller below
    capacity retains energy down to the same marginal value.  The welfare
    here is the maximum attainable, so the loss is zero by definition.
    """
    require_valid(scenario)
    p_lo, p_hi = _price_bracket(scenario)
    p_star = _bisect(
        lambda p: availability_function(scenario, p) - demand_function(scenario, p),
        p_lo * (1.0 + 1e-15) + 1e-300, p_hi)
    d, a = _pt_allocations(scenario, p_star)
    lam = _pt_duals(scenario, p_star, a)
    welfare = metrics.social_welfare(scenario, d, a)
    kkt = KktDiagnostics(mu=p_star, lambdas=lam, rhos=lam.copy())
    return Equilibrium("price-taking", p_star, d, a, welfare,
                       revenue=0.0, loss=0.0, kkt=kkt)


def _zero_trade_equilibrium(scenario, regime, price, surcharge=0.0,
                            objective=None):
    n, m = scenario.n_buyers, scenario.n_sellers
    d = np.zeros(n)
    a = np.zeros(m)
    welfare = metrics.social_welfare(scenario, d, a)
    loss = metrics.efficiency_loss(scenario, d, a)
    kkt = KktDiagnostics(mu=price, lambdas=np.zeros(m), rhos=np.zeros(m))
    return Equilibrium(regime, price, d, a, welfare, revenue=0.0, loss=loss,
                       kkt=kkt, surcharge=surcharge,
                       anticipation_objective=objective)


def solve_surcharge(scenario: Scenario, surcharge: float | None = None) -> Equilibrium:
    """Price-taking equilibrium when buyers pay a per-unit surcharge.

    Bisects D(p + ps) = A(p).  At or beyond the upper-bound surcharge the
    curves no longer cross and the zero-trade outcome is returned with zero
    revenue; otherwise revenue is ps times the traded volume.
    """
    require_valid(scenario)
    ps = scenario.aggregator.surcharge if surcharge is None else float(surcharge)
    if ps < 0:
        raise ValueError("surcharge must be >= 0")
    if ps == 0.0:
        return solve_price_taking(scenario)
    p_lo, _ = _price_bracket(scenario)
    bound = surcharge_upper_bound(scenario)
    if ps >= bound:
        return _zero_trade_equilibrium(scenario, "surcharge", p_lo, ps)
    bx, by = scenario.buyer_params()
    p_hi = float(np.max(bx * by)) - ps  # demand vanishes above this seller price
    p_star = _bisect(
        lambda p: availability_function(scenario, p) - demand_function(scenario, p + ps),
        p_lo * (1.0 + 1e-15) + 1e-300, p_hi)
    d, a = _pt_allocations(scenario, p_star, buyer_price=p_star + ps)
    lam = _pt_duals(scenario, p_star, a)
    welfare = metrics.social_welfare(scenario, d, a)
    loss = metrics.efficiency_loss(scenario, d, a)
    kkt = KktDiagnostics(mu=p_star, lambdas=lam, rhos=lam.copy())
    return Equilibrium("surcharge", p_star, d, a, welfare,
                       revenue=float(ps * a.sum()), loss=loss, kkt=kkt,
                       surcharge=ps)


# ---------------------------------------------------------------------------
# price anticipation
# ---------------------------------------------------------------------------

def _pa_demands(bx, by, p_eff, pool):
    """Per-buyer solution of (1 - d/T) u'(d) = p, clipped at zero.

    Closed form d = (x y - p) / (y p + x y / T); the allocation share d/T
    stays strictly below one for any positive price.
    """
    xy = bx * by
    return np.maximum((xy - p_eff) / (by * p_eff + xy / pool), 0.0)


def _pa_avails(sx, sy, sg, p, pool):
    """Per-seller solution of v'(g - a) = p (1 - a/T), clipped to [0, g].

    The interior offer is the smaller root of
    p y a^2 - p (T y + y g + 1) a + T (p (y g + 1) - x y) = 0; the larger
    root always exceeds max(T, g + 1/y).  A nonpositive constant term means
    the price does not beat v'(g) and the seller stays out.
    """
    aq = p * sy
    bq = -p * (pool * sy + sy * sg + 1.0)
    cq = pool * (p * (sy * sg + 1.0) - sx * sy)
    disc = np.maximum(bq * bq - 4.0 * aq * cq, 0.0)
    q = 0.5 * (np.sqrt(disc) - bq)  # bq < 0, so q > 0
    return np.clip(cq / q, 0.0, sg)


def _seller_entry_shares(sx, sy, sg, p):
    """Limiting availability shares kappa_j = max(0, 1 - v'_j(g_j)/p) as the
    pool shrinks to zero; sellers can jointly sustain a positive pool at p
    only when these sum to at least one."""
    return np.maximum(1.0 - log_utility_marginal(sx, sy, sg) / p, 0.0)


def _solve_pool(sx, sy, sg, p, a0, tol=PRICE_TOL):
    """Self-consistent availability pool T = a0 + sum_j a_j(p, T).

    Each seller's offer grows with the pool but by less than its own share,
    so the positive fixed point is unique.  Returns a0 when no seller
    enters, or None when a0 = 0 and no positive pool exists at this price.
    """
    g_total = float(sg.sum())
    hi = a0 + g_total

    def excess(pool):
        return a0 + _pa_avails(sx, sy, sg, p, pool).sum() - pool

    if a0 > 0:
        if _pa_avails(sx, sy, sg, p, a0 + 1e-300).sum() == 0.0:
            return a0
        lo = a0
    else:
        lo = 1e-9 * g_total
        if excess(lo) <= 0:
            return None
    flo = excess(lo)
    if flo <= 0:
        return lo
    for _ in range(BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, mid):
            return mid
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _pa_entry_price(sx, sy, sg):
    """Smallest price at which the sellers' limiting shares sum to one."""
    lo = float(np.min(log_utility_marginal(sx, sy, sg)))
    hi = 2.0 * float(np.max(log_utility_marginal(sx, sy, sg)))
    while _seller_entry_shares(sx, sy, sg, hi).sum() < 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise DegenerateMarketError("sellers cannot jointly sustain trade")
    return _bisect(lambda p: _seller_entry_shares(sx, sy, sg, p).sum() - 1.0,
                   lo, hi)


def _certify_nash(scenario, price, demands, avails, rng_seed=0,
                  n_checks=10_000, rtol=1e-8):
    """Verify no agent can improve its own payoff by a unilateral deviation.

    Buyers deviate in their money bid (allocation and price respond through
    the clearing rule); sellers deviate in their availability on [0, g].
    Raises if any sampled deviation beats the equilibrium payoff beyond
    numerical tolerance.
    """
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    a0 = scenario.aggregator.virtual_availability
    ps = scenario.aggregator.surcharge
    total_a = float(avails.sum())
    if total_a <= 0:
        return  # zero-trade corner: no books to deviate against
    p_buy = price + ps
    bids = p_buy * demands
    b_virtual = p_buy * a0
    total_b = b_virtual + bids.sum()
    rng = np.random.default_rng(rng_seed)
    half = n_checks // 2

    # buyers: payoff u(b'/(p'+ps)) - b' with p'+ps = (b0 + b' + B_-i)/(a0 + A)
    i = rng.integers(0, scenario.n_buyers, size=half)
    b_alt = rng.uniform(0.0, 3.0 * max(float(bids.max()), 1e-6), size=half)
    b_others = total_b - bids[i]
    d_alt = b_alt * (a0 + total_a) / (b_others + b_alt)
    pay_alt = log_utility_value(bx[i], by[i], d_alt) - b_alt
    pay_eq = log_utility_value(bx[i], by[i], demands[i]) - bids[i]
    slack = pay_alt - pay_eq
    if np.any(slack > rtol * np.maximum(1.0, np.abs(pay_eq))):
        raise RuntimeError("buyer best-response certification failed")

    # sellers: payoff v(g - a') + p(a') a' with p(a') + ps = B_tot/(a0 + A_-j + a')
    j = rng.integers(0, scenario.n_sellers, size=n_checks - half)
    a_alt = rng.uniform(0.0, sg[j])
    a_others = a0 + total_a - avails[j]
    p_alt = total_b / (a_others + a_alt) - ps
    pay_alt = log_utility_value(sx[j], sy[j], sg[j] - a_alt) + p_alt * a_alt
    pay_eq = (log_utility_value(sx[j], sy[j], sg[j] - avails[j])
              + price * avails[j])
    slack = pay_alt - pay_eq
    if np.any(slack > rtol * np.maximum(1.0, np.abs(pay_eq))):
        raise RuntimeError("seller best-response certification failed")


def solve_price_anticipation(scenario: Scenario, certify: bool = True) -> Equilibrium:
    """Equilibrium with fully price-anticipating buyers and sellers.

    Solves the stationarity system

        (1 - d_i/T) u'_i(d_i) = p,
        v'_j(g_j - a_j) = (1 - a_j/T) (p + lambda_j),   lambda_j <= 0 at
                                                        capacity, else 0,
        sum_i d_i = sum_j a_j,      T = a0 + sum_j a_j,

    by bisecting the price on the demand-minus-supply excess, where for any
    candidate price the pool T is resolved by an inner fixed point.  Thin
    markets without a virtual trader can fail both sides' participation
    conditions, in which case the zero-trade outcome is returned at the
    sellers' entry price.

    With certify=True the solution is checked against random unilateral
    payoff deviations (the defining property of the equilibrium) and the
    stationarity residual is verified.
    """
    require_valid(scenario)
    a0 = scenario.aggregator.virtual_availability
    ps = scenario.aggregator.surcharge
    n, m = scenario.n_buyers, scenario.n_sellers
    if a0 <= 0 and m < 2:
        raise DegenerateMarketError(
            "a single anticipating seller without a virtual trader has no "
            "equilibrium (its market power is total)")
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()

    bound = surcharge_upper_bound(scenario)
    p_hi = float(np.max(bx * by)) - ps
    if ps >= bound:
        p_lo, _ = _price_bracket(scenario)
        return _zero_trade_equilibrium(
            scenario, "price-anticipating", p_lo, ps,
            objective=float(log_utility_value(sx, sy, sg).sum()))

    if a0 > 0:
        p_left, _ = _price_bracket(scenario)
        p_left *= 1.0 + 1e-14
    else:
        p_left = _pa_entry_price(sx, sy, sg)
        buyer_entry = np.maximum(1.0 - (p_left + ps) / (bx * by), 0.0).sum()
        if buyer_entry <= 1.0 or p_left >= p_hi:
            # both sides cannot sustain a positive pool: trade collapses
            return _zero_trade_equilibrium(
                scenario, "price-anticipating", p_left, ps,
                objective=float(log_utility_value(sx, sy, sg).sum()))
        p_left *= 1.0 + 1e-12

    def excess_demand(p):
        pool = _solve_pool(sx, sy, sg, p, a0)
        if pool is None:
            return float(_pa_demands(bx, by, p + ps, 1e-12 * sg.sum()).sum())
        supply = pool - a0
        return float(_pa_demands(bx, by, p + ps, pool).sum() - supply)

    p_dag = _bisect(lambda p: -excess_demand(p), p_left, p_hi)
    pool = _solve_pool(sx, sy, sg, p_dag, a0)
    if pool is None:
        pool = 1e-12 * sg.sum()
    a = _pa_avails(sx, sy, sg, p_dag, pool)
    d = _pa_demands(bx, by, p_dag + ps, pool)
    # tiny bisection slack lands on the demand side; rescale to exact balance
    total_d, total_a = d.sum(), a.sum()
    if total_d > 0 and total_a > 0:
        d = d * (total_a / total_d)

    alphas = a / pool
    lam = np.where(a >= sg,
                   np.minimum(sx * sy / (1.0 - alphas) - p_dag, 0.0),
                   0.0)
    rho = (1.0 - alphas) * lam
    welfare = metrics.social_welfare(scenario, d, a)
    loss = metrics.efficiency_loss(scenario, d, a)
    objective = metrics.anticipation_objective(scenario, d, a) \
        if (a0 > 0 or m >= 2) else None
    eq = Equilibrium("price-anticipating", p_dag, d, a, welfare,
                     revenue=float(ps * a.sum()), loss=loss,
                     kkt=KktDiagnostics(mu=p_dag, lambdas=lam, rhos=rho),
                     surcharge=ps, anticipation_objective=objective)
    if certify:
        res = kkt_residual(scenario, eq)
        if res > 1e-7:
            raise RuntimeError(f"stationarity residual {res:.3e} exceeds 1e-7")
        _certify_nash(scenario, p_dag, d, a)
    return eq


# ---------------------------------------------------------------------------
# KKT residuals
# ---------------------------------------------------------------------------

def kkt_residual(scenario: Scenario, eq: Equilibrium) -> float:
    """Largest violation of the stationarity system matching eq.regime.

    Covers per-agent stationarity (with complementarity inequalities for
    inactive buyers and out-of-market or capacity-bound sellers), the
    balance constraint, and mu = p.
    """
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    a0 = scenario.aggregator.virtual_availability
    mu = eq.kkt.mu
    d, a = eq.demands, eq.availabilities
    res = [abs(mu - eq.price), abs(float(d.sum() - a.sum()))]

    if eq.regime == "price-anticipating":
        pool = a0 + float(a.sum())
        p_eff = mu + eq.surcharge
        if pool <= 0:
            betas = np.maximum(1.0 - p_eff / (bx * by), 0.0)
            alphas = np.maximum(1.0 - log_utility_marginal(sx, sy, sg) / mu, 0.0)
        else:
            betas = d / pool
            alphas = a / pool
        u0 = bx * by
        for i in range(scenario.n_buyers):
            if d[i] > 0:
                res.append(abs((1.0 - betas[i])
                               * float(log_utility_marginal(bx[i], by[i], d[i]))
                               - p_eff))
            else:
                res.append(max(0.0, (1.0 - betas[i]) * u0[i] - p_eff))
        for j in range(scenario.n_sellers):
            vg = float(log_utility_marginal(sx[j], sy[j], sg[j] - min(a[j], sg[j])))
            if a[j] <= 0:
                res.append(max(0.0, (1.0 - alphas[j]) * mu - vg))
            elif a[j] >= sg[j]:
                res.append(max(0.0, vg - (1.0 - alphas[j]) * mu))  # lambda_j <= 0
            else:
                res.append(abs(vg - (1.0 - alphas[j]) * mu))
        return max(res)

    ps = eq.surcharge if eq.regime == "surcharge" else 0.0
    if eq.regime == "surcharge" and eq.volume == 0.0:
        # zero trade: inequalities only
        for i in range(scenario.n_buyers):
            res.append(max(0.0, bx[i] * by[i] - (mu + ps)))
        for j in range(scenario.n_sellers):
            vg = float(log_utility_marginal(sx[j], sy[j], sg[j]))
            res.append(max(0.0, mu - vg))
        return max(res)

    p_eff = mu + ps
    for i in range(scenario.n_buyers):
        if d[i] > 0:
            res.append(abs(float(log_utility_marginal(bx[i], by[i], d[i])) - p_eff))
        else:
            res.append(max(0.0, bx[i] * by[i] - p_eff))
    for j in range(scenario.n_sellers):
        vg = float(log_utility_marginal(sx[j], sy[j], sg[j] - min(a[j], sg[j])))
        if a[j] <= 0:
            res.append(max(0.0, mu - vg))
        elif a[j] >= sg[j]:
            res.append(max(0.0, vg - mu))  # lambda_j = v'(0) - mu <= 0
        else:
            res.append(abs(vg - mu))
    return max(res)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

_GRID_POINT_LIMIT = 600_000


def _split_demands(bx, by, pools, totals, iters=48):
    """Distribute each grid point's volume across buyers so the diluted
    marginals (1 - d_i/T) u'_i(d_i) are equal: vectorized bisection on the
    common marginal value."""
    n_points = len(totals)
    lo = np.zeros(n_points)
    hi = np.full(n_points, float(np.max(bx * by)))
    for _ in range(iters):
        w = 0.5 * (lo + hi)
        dsum = _pa_demands(bx[:, None], by[:, None], w[None, :], pools[None, :]).sum(0)
        too_low = dsum > totals
        lo = np.where(too_low, w, lo)
        hi = np.where(too_low, hi, w)
    w = 0.5 * (lo + hi)
    return _pa_demands(bx[:, None], by[:, None], w[None, :], pools[None, :])


def _pi_totals(bx, by, sx, sy, sg, a0, d_matrix, a_matrix):
    """Vectorized anticipation objective for a batch of allocation points."""
    pools = a0 + a_matrix.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        buyer_part = ((1.0 - d_matrix / pools[None, :])
                      * log_utility_value(bx[:, None], by[:, None], d_matrix)
                      + log_utility_integral(bx[:, None], by[:, None], d_matrix)
                      / pools[None, :]).sum(0)
        others = pools[:, None] - a_matrix
        tail = (log_utility_integral(sx, sy, sg)[None, :]
                - log_utility_integral(sx[None, :], sy[None, :],
                                       sg[None, :] - a_matrix))
        seller_part = (log_utility_value(sx[None, :], sy[None, :],
                                         sg[None, :] - a_matrix)
                       * pools[:, None] / others - tail / others).sum(1)
    total = buyer_part + seller_part
    bad = ~np.isfinite(total)
    total[bad] = -np.inf
    no_trade = pools <= 0
    total[no_trade] = float(log_utility_value(sx, sy, sg).sum())
    return total


def _evaluate_profiles(scenario, profiles):
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    a0 = scenario.aggregator.virtual_availability
    pools = a0 + profiles.sum(axis=1)
    totals = profiles.sum(axis=1)
    live = pools > 0
    d_matrix = np.zeros((scenario.n_buyers, len(profiles)))
    if live.any():
        d_matrix[:, live] = _split_demands(bx, by, pools[live], totals[live])
    values = _pi_totals(bx, by, sx, sy, sg, a0, d_matrix, profiles)
    # profiles with a positive offer but an empty "others" pool are undefined
    if a0 <= 0:
        degenerate = ((profiles > 0) & ((pools[:, None] - profiles) <= 0)).any(axis=1)
        values[degenerate] = -np.inf
    return d_matrix, values


def _grid_axes(sg, step):
    return [np.linspace(0.0, g, int(round(g / step)) + 1) for g in sg]


def _search_grid(scenario, axes):
    mesh = np.meshgrid(*axes, indexing="ij")
    profiles = np.stack([mm.ravel() for mm in mesh], axis=1)
    d_matrix, values = _evaluate_profiles(scenario, profiles)
    best = int(np.argmax(values))
    return profiles[best], d_matrix[:, best], float(values[best])


def brute_force_pi_max(scenario: Scenario, grid_step: float) -> BruteForceResult:
    """Grid-search maximizer of the anticipation objective, used as a test
    oracle for the anticipatory solver.

    Searches availability profiles exhaustively (demands are split optimally
    at every grid point).  Instances beyond a few million grid nodes are
    handled hierarchically: an exhaustive coarse pass followed by an
    exhaustive fine pass in a window around the coarse optimum that always
    contains the coarse optimum itself, so refining the step can never
    lower the reported objective.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if scenario.n_buyers > 2 or scenario.n_sellers > 3:
        raise ValueError("oracle instances are capped at 2 buyers and 3 sellers")
    if scenario.aggregator.virtual_availability <= 0 and scenario.n_sellers < 2:
        raise DegenerateMarketError(
            "oracle needs a virtual trader when there is a single seller")
    require_valid(scenario)
    _, _, sg = scenario.seller_params()

    axes = _grid_axes(sg, grid_step)
    n_points = math.prod(len(ax) for ax in axes)
    if n_points <= _GRID_POINT_LIMIT:
        a_best, d_best, value = _search_grid(scenario, axes)
        return BruteForceResult(d_best, a_best, value)

    coarse_factor = math.ceil((n_points / _GRID_POINT_LIMIT)
                              ** (1.0 / len(sg)))
    coarse_axes = _grid_axes(sg, grid_step * coarse_factor)
    a_coarse, _, _ = _search_grid(scenario, coarse_axes)
    window = (coarse_factor + 1) * grid_step
    fine_axes = []
    for g, centre in zip(sg, a_coarse):
        lo = max(0.0, centre - window)
        hi = min(g, centre + window)
        k0 = int(np.floor(lo / grid_step))
        k1 = int(np.ceil(hi / grid_step))
        ax = np.unique(np.clip(np.arange(k0, k1 + 1) * grid_step, 0.0, g))
        fine_axes.append(np.unique(np.append(ax, centre)))
    a_best, d_best, value = _search_grid(scenario, fine_axes)
    return BruteForceResult(d_best, a_best, value)


# ---------------------------------------------------------------------------
# revenue-optimal surcharge
# ---------------------------------------------------------------------------

def optimal_surcharge(scenario: Scenario, scan_points: int = 1000,
                      tol: float = 1e-10) -> tuple[float, float]:
    """Surcharge maximizing aggregator revenue, with the revenue attained.

    Revenue is zero at both ends of [0, upper bound], so an interior
    maximizer exists.  A dense scan brackets the global maximum (robust to
    plateaus), then golden-section search polishes the bracket.
    """
    require_valid(scenario)
    bound = surcharge_upper_bound(scenario)
    if bound <= 0:
        return 0.0, 0.0

    def rev(ps):
        return solve_surcharge(scenario, ps).revenue

    grid = np.linspace(0.0, bound, scan_points)
    values = np.array([rev(ps) for ps in grid])
    k = int(np.argmax(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, scan_points - 1)]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = rev(x1), rev(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = rev(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = rev(x2)
    ps_opt = 0.5 * (lo + hi)
    return float(ps_opt), float(rev(ps_opt))
