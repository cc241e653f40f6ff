"""Proportional-allocation double-sided auction toolkit.

A library for simulating and solving a double-sided auction of a divisible
resource (energy) among buyers and sellers with saturating log utilities:
an iterative distributed market mechanism, direct solvers for the
price-taking, price-anticipating and surcharge equilibria, loss mitigation
through a virtual trader, and welfare/revenue trade-off studies.
"""

from .engine import (
    AuctionOutcome,
    EngineConfig,
    IterationRecord,
    allocate,
    clearing_price,
    run_auction,
)
from .equilibrium import (
    BruteForceResult,
    Equilibrium,
    KktDiagnostics,
    availability_function,
    brute_force_pi_max,
    demand_function,
    kkt_residual,
    optimal_surcharge,
    solve_price_anticipation,
    solve_price_taking,
    solve_surcharge,
    surcharge_upper_bound,
)
from .errors import (
    DegenerateMarketError,
    GenerationError,
    ScenarioFormatError,
    ScenarioValidationError,
)
from .metrics import (
    SweepResult,
    anticipation_objective,
    buyer_payoff,
    efficiency_loss,
    pi_buyer,
    pi_seller,
    revenue,
    seller_payoff,
    social_welfare,
    sweep_surcharge,
    sweep_virtual,
)
from .model import (
    AggregatorConfig,
    BuyerSpec,
    LogUtility,
    Scenario,
    SellerSpec,
    ValidationReport,
    validate_scenario,
)
from .scenario_io import (
    GenerationConfig,
    emit_sweep,
    emit_trace,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .strategy import (
    BuyerState,
    SellerState,
    buyer_bid,
    estimate_alpha,
    estimate_beta,
    market_power_buyers_exact,
    market_power_sellers_exact,
    seller_availability,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatorConfig", "AuctionOutcome", "BruteForceResult", "BuyerSpec",
    "BuyerState", "DegenerateMarketError", "EngineConfig", "Equilibrium",
    "GenerationConfig", "GenerationError", "IterationRecord",
    "KktDiagnostics", "LogUtility", "Scenario", "ScenarioFormatError",
    "ScenarioValidationError", "SellerSpec", "SellerState", "SweepResult",
    "ValidationReport", "allocate", "anticipation_objective",
    "availability_function", "brute_force_pi_max", "buyer_bid",
    "buyer_payoff", "clearing_price", "demand_function", "efficiency_loss",
    "emit_sweep", "emit_trace", "estimate_alpha", "estimate_beta",
    "generate_scenario", "kkt_residual", "load_scenario",
    "market_power_buyers_exact", "market_power_sellers_exact",
    "optimal_surcharge", "pi_buyer", "pi_seller", "revenue", "run_auction",
    "save_scenario", "seller_availability", "seller_payoff",
    "social_welfare", "solve_price_anticipation", "solve_price_taking",
    "solve_surcharge", "surcharge_upper_bound", "sweep_surcharge",
    "sweep_virtual", "validate_scenario",
]
