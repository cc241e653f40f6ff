"""Walk through the basic market: curves, direct solve, iterative auction.

The market here is the smallest interesting one: a single buyer and a single
seller, both with the unit log utility u(z) = log(z + 1), and the seller
holding one unit of energy.  Everything about this market is known in closed
form, which makes it a good first look at the library.

Run:  python3 demos/equilibrium_basics.py
Outputs land in demos/output/.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import dsauction as da

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

market = da.Scenario(
    buyers=(da.BuyerSpec(da.LogUtility(1.0, 1.0)),),
    sellers=(da.SellerSpec(da.LogUtility(1.0, 1.0), generation=1.0),),
)
print("valid:", da.validate_scenario(market).ok)

# The aggregate demand and availability curves cross at the market price.
prices = np.linspace(0.05, 1.2, 400)
demand = da.demand_function(market, prices)
avail = da.availability_function(market, prices)

eq = da.solve_price_taking(market)
print(f"\ndirect solve: p* = {eq.price:.6f} (analytic 2/3)")
print(f"traded volume = {eq.volume:.6f}, welfare = {eq.welfare:.6f} "
      f"(analytic 2*log(1.5) = {2*np.log(1.5):.6f})")
print("stationarity residual:", da.kkt_residual(market, eq))

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(prices, demand, label="demand D(p)")
ax.plot(prices, avail, label="availability A(p)")
ax.axvline(eq.price, color="k", ls=":", lw=1, label="cleared price")
ax.set_xlabel("price")
ax.set_ylabel("energy")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "curves.png"), dpi=120)
print("\nwrote demos/output/curves.png")

# The same equilibrium emerges from the iterative mechanism: each round the
# sellers see a price, the buyers see their allocations, and the aggregator
# clears the books.
outcome = da.run_auction(market)
print(f"\niterative auction: converged={outcome.converged} "
      f"in {outcome.n_iterations} rounds, p = {outcome.final.price:.8f}")

trace_path = os.path.join(OUT, "r1_trace.csv")
da.emit_trace(outcome, trace_path)
print("wrote", trace_path)

ks = [r.k for r in outcome.iterations]
ps = [r.price for r in outcome.iterations]
fig, ax = plt.subplots(figsize=(6, 3.2))
ax.plot(ks, ps, marker=".", ms=3, lw=1)
ax.axhline(eq.price, color="k", ls=":", lw=1)
ax.set_xlabel("round")
ax.set_ylabel("cleared price")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "r1_price_trace.png"), dpi=120)
print("wrote demos/output/r1_price_trace.png")

# Per-agent outcomes at the equilibrium.
buyer = market.buyers[0]
seller = market.sellers[0]
d, a = float(eq.demands[0]), float(eq.availabilities[0])
print(f"\nbuyer: consumes {d:.4f}, pays {eq.price * d:.4f}, "
      f"payoff {da.buyer_payoff(buyer.utility, d, eq.price * d):.4f}")
print(f"seller: sells {a:.4f}, earns {eq.price * a:.4f}, "
      f"payoff {da.seller_payoff(seller, a, eq.price):.4f}")
