"""The aggregator's cut: surcharge revenue against social welfare.

With a per-unit surcharge ps, buyers pay p + ps while sellers receive p.
The wedge shrinks the traded volume, so revenue ps * volume starts at zero,
peaks at an interior optimum, and returns to zero at the surcharge level
that kills the market.  Welfare falls monotonically along the way, tracing
a Pareto front between the two objectives.

Run:  python3 demos/surcharge_tradeoff.py
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import dsauction as da

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

scenario = da.generate_scenario(da.GenerationConfig(
    n_buyers=3, n_sellers=2, seed=77_003))
bound = da.surcharge_upper_bound(scenario)
print(f"surcharge upper bound (zero-trade level): {bound:.5f}")

sweep = da.sweep_surcharge(scenario, np.linspace(0.0, bound, 200))
da.emit_sweep(sweep, os.path.join(OUT, "surcharge_sweep.csv"))

ps_opt, r_opt = da.optimal_surcharge(scenario)
print(f"revenue-optimal surcharge: ps = {ps_opt:.5f}, revenue = {r_opt:.5f}")
print(f"welfare there: {da.solve_surcharge(scenario, ps_opt).welfare:.5f} "
      f"vs efficient {da.solve_price_taking(scenario).welfare:.5f}")

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
axes[0].plot(sweep.values, sweep.revenues)
axes[0].axvline(ps_opt, color="k", ls=":", lw=1)
axes[0].set_xlabel("surcharge ps")
axes[0].set_ylabel("aggregator revenue R")

# Pareto front: welfare on one axis, revenue on the other, traced by ps up
# to the revenue peak (beyond it both objectives worsen).
upto = sweep.values <= ps_opt
axes[1].plot(sweep.welfares[upto], sweep.revenues[upto], marker=".", ms=3)
axes[1].set_xlabel("social welfare U")
axes[1].set_ylabel("revenue R")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "surcharge_tradeoff.png"), dpi=120)
print("wrote demos/output/surcharge_sweep.csv and surcharge_tradeoff.png")

# Spot check against the iterative mechanism at one surcharge level.
ps = 0.5 * ps_opt
run = da.run_auction(da.Scenario(scenario.buyers, scenario.sellers,
                                 da.AggregatorConfig(0.0, ps)))
direct = da.solve_surcharge(scenario, ps)
print(f"\nat ps = {ps:.4f}: engine p = {run.final.price:.6f} "
      f"(in {run.n_iterations} rounds), solver p = {direct.price:.6f}")
print(f"money check: buyers paid {(run.final.price + ps) * run.final.volume:.6f}, "
      f"sellers received {run.final.price * run.final.volume:.6f}, "
      f"aggregator kept {run.final.revenue:.6f}")
