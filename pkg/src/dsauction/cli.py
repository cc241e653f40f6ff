"""Command-line front end.

Subcommands: gen, run, solve, sweep-surcharge, sweep-virtual, curves,
compare.  Exit codes: 0 success, 1 I/O problems, 2 invalid scenarios or
degenerate markets, 3 non-convergence (the trace is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import equilibrium as eqm
from . import metrics, scenario_io
from .engine import EngineConfig, run_auction
from .errors import (
    DegenerateMarketError,
    GenerationError,
    ScenarioFormatError,
    ScenarioValidationError,
)
from .model import AggregatorConfig, Scenario

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3

# agent counts of the five stock study templates
STUDY_SIZES = ((2, 3), (2, 6), (2, 10), (3, 2), (4, 4))


def _load(args) -> Scenario:
    scenario = scenario_io.load_scenario(args.scenario)
    a0 = scenario.aggregator.virtual_availability if args.a0 is None else args.a0
    ps = scenario.aggregator.surcharge if args.ps is None else args.ps
    return Scenario(scenario.buyers, scenario.sellers, AggregatorConfig(a0, ps))


def _summary_line(tag, converged, iters, eq) -> str:
    return (f"{tag} converged={converged} iters={iters} "
            f"p={eq.price:.8f} volume={eq.volume:.8f} U={eq.welfare:.8f} "
            f"R={eq.revenue:.8f} L={eq.loss:.8f}")


def cmd_gen(args) -> int:
    cfg = scenario_io.GenerationConfig(
        n_buyers=args.buyers, n_sellers=args.sellers, seed=args.seed,
        param_halfwidth=args.halfwidth, g_min=args.g_min, g_max=args.g_max,
        virtual_availability=args.a0 or 0.0, surcharge=args.ps or 0.0)
    scenario = generate = scenario_io.generate_scenario(cfg)
    scenario_io.save_scenario(generate, args.out)
    print(f"wrote {args.out}: {scenario.n_buyers} buyers, "
          f"{scenario.n_sellers} sellers (seed {args.seed})")
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = _load(args)
    cfg = EngineConfig(mode=args.mode, damping=args.theta,
                       price_tol=args.tol, bid_tol=args.tol,
                       max_iters=args.max_iters,
                       power_estimates=args.power_estimates)
    outcome = run_auction(scenario, cfg)
    if args.out:
        scenario_io.emit_trace(outcome, args.out)
    print(_summary_line("run", outcome.converged, outcome.n_iterations,
                        outcome.final))
    return EXIT_OK if outcome.converged else EXIT_NO_CONVERGENCE


def _equilibrium_json(scenario, eq) -> dict:
    return {
        "regime": eq.regime,
        "price": eq.price,
        "demands": [float(v) for v in eq.demands],
        "availabilities": [float(v) for v in eq.availabilities],
        "welfare": eq.welfare,
        "anticipation_objective": eq.anticipation_objective,
        "revenue": eq.revenue,
        "loss": eq.loss,
        "kkt": {
            "mu": eq.kkt.mu,
            "lambdas": [float(v) for v in eq.kkt.lambdas],
            "rhos": [float(v) for v in eq.kkt.rhos],
            "residual": eqm.kkt_residual(scenario, eq),
        },
    }


def cmd_solve(args) -> int:
    scenario = _load(args)
    if args.mode == "pa":
        eq = eqm.solve_price_anticipation(scenario)
    elif scenario.aggregator.surcharge > 0:
        eq = eqm.solve_surcharge(scenario)
    else:
        eq = eqm.solve_price_taking(scenario)
    text = json.dumps(_equilibrium_json(scenario, eq), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_sweep_surcharge(args) -> int:
    scenario = _load(args)
    bound = eqm.surcharge_upper_bound(scenario)
    grid = np.linspace(0.0, bound, args.points)
    result = metrics.sweep_surcharge(scenario, grid)
    scenario_io.emit_sweep(result, args.out)
    k = int(np.nanargmax(result.revenues))
    print(f"sweep-surcharge wrote {args.out}: {args.points} points, "
          f"R peaks at ps={result.values[k]:.6f}")
    return EXIT_OK


def cmd_sweep_virtual(args) -> int:
    scenario = _load(args)
    total_g = sum(s.generation for s in scenario.sellers)
    grid = np.concatenate([[0.0], np.logspace(np.log10(args.lo), np.log10(args.hi),
                                              args.points - 1)]) * total_g
    result = metrics.sweep_virtual(scenario, grid)
    scenario_io.emit_sweep(result, args.out)
    print(f"sweep-virtual wrote {args.out}: {args.points} points, "
          f"final L={result.losses[-1]:.3e}")
    return EXIT_OK


def cmd_curves(args) -> int:
    scenario = _load(args)
    bx, by = scenario.buyer_params()
    sx, sy, sg = scenario.seller_params()
    from .model import log_utility_marginal

    l_mark = float(np.min(log_utility_marginal(sx, sy, sg)))
    m_mark = float(np.max(sx * sy))
    n_mark = float(np.max(bx * by))
    top = 1.1 * max(m_mark, n_mark)
    prices = np.linspace(top / args.points, top, args.points)
    demand = eqm.demand_function(scenario, prices)
    avail = eqm.availability_function(scenario, prices)
    with open(args.out, "w") as fh:
        fh.write(f"# l={l_mark!r} m={m_mark!r} n={n_mark!r}\n")
        fh.write("p,D,A\n")
        for p, d, a in zip(prices, demand, avail):
            fh.write(f"{float(p)!r},{float(d)!r},{float(a)!r}\n")
    print(f"curves wrote {args.out}: {args.points} points on (0, {top:.6f}]")
    return EXIT_OK


def cmd_compare(args) -> int:
    print(f"{'scenario':>10} {'U_PT':>12} {'U_PA':>12} "
          f"{'buyers_PT':>12} {'buyers_PA':>12} {'sellers_PT':>12} {'sellers_PA':>12}")
    for idx, (nb, ns) in enumerate(STUDY_SIZES):
        scenario = scenario_io.generate_scenario(
            scenario_io.GenerationConfig(nb, ns, seed=args.seed + idx))
        pt = eqm.solve_price_taking(scenario)
        pa = eqm.solve_price_anticipation(scenario)

        def split(eq):
            buyers = sum(float(b.utility.value(d))
                         for b, d in zip(scenario.buyers, eq.demands))
            sellers = sum(float(s.utility.value(s.generation - a))
                          for s, a in zip(scenario.sellers, eq.availabilities))
            return buyers, sellers

        b_pt, s_pt = split(pt)
        b_pa, s_pa = split(pa)
        print(f"{f'{nb}x{ns}':>10} {pt.welfare:>12.6f} {pa.welfare:>12.6f} "
              f"{b_pt:>12.6f} {b_pa:>12.6f} {s_pt:>12.6f} {s_pa:>12.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsauction",
        description="Proportional-allocation double-sided auction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="output file path")
        p.add_argument("--a0", type=float, default=None,
                       help="override the aggregator's virtual availability")
        p.add_argument("--ps", type=float, default=None,
                       help="override the aggregator's surcharge")

    p = sub.add_parser("gen", help="generate a random scenario file")
    p.add_argument("--buyers", type=int, required=True)
    p.add_argument("--sellers", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--halfwidth", type=float, default=0.5)
    p.add_argument("--g-min", type=float, default=0.5)
    p.add_argument("--g-max", type=float, default=2.0)
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--ps", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run the iterative auction")
    common(p)
    p.add_argument("--mode", choices=["pt", "pa"], default="pt")
    p.add_argument("--theta", type=float, default=0.25, help="price damping")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--power-estimates", choices=["estimated", "exact"],
                   default="estimated")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve", help="solve an equilibrium directly")
    common(p)
    p.add_argument("--mode", choices=["pt", "pa"], default="pt")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep-surcharge",
                       help="equilibria across surcharge levels")
    common(p)
    p.add_argument("--points", type=int, default=100)
    p.set_defaults(func=cmd_sweep_surcharge)
    p.set_defaults(out_required=True)

    p = sub.add_parser("sweep-virtual",
                       help="anticipatory equilibria across virtual trader sizes")
    common(p)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--lo", type=float, default=1e-2,
                   help="smallest positive a0, in multiples of total generation")
    p.add_argument("--hi", type=float, default=1e4,
                   help="largest a0, in multiples of total generation")
    p.set_defaults(func=cmd_sweep_virtual)

    p = sub.add_parser("curves", help="tabulate the demand and availability curves")
    common(p)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("compare",
                       help="price taking vs anticipation on the stock scenarios")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    needs_out = args.command in ("sweep-surcharge", "sweep-virtual", "curves")
    if needs_out and not args.out:
        parser.error(f"{args.command} requires --out")
    try:
        return args.func(args)
    except (ScenarioValidationError, DegenerateMarketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ScenarioFormatError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
