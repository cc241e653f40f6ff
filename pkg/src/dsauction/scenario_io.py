"""Scenario generation, persistence, and result emission.

Scenario files are JSON:

    {
      "buyers":  [{"x": 1.0, "y": 1.0}, ...],
      "sellers": [{"x": 1.0, "y": 1.0, "g": 1.0}, ...],
      "aggregator": {"a0": 0.0, "ps": 0.0}
    }

Numbers are written with Python's shortest round-trip decimal
representation (at most 17 significant digits), so save/load is lossless
for every finite value.

Random generation uses numpy's seeded PCG64 generator
(``numpy.random.default_rng``); utility parameters are drawn uniformly on
[center - halfwidth, center + halfwidth] and generations uniformly on
[g_min, g_max].  Draw order is fixed (per buyer x then y, then per seller
x, y, g), so a seed pins the scenario bit for bit.

Trace CSV columns: k, p, then per-agent blocks b_i, d_i, beta_i (buyers,
1-based suffixes) and a_j, alpha_j, rho_j (sellers).
Sweep CSV columns: param, p, volume, U, R, L, converged.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import GenerationError, ScenarioFormatError, ScenarioValidationError
from .metrics import SweepResult
from .model import (
    AggregatorConfig,
    BuyerSpec,
    LogUtility,
    Scenario,
    SellerSpec,
    validate_scenario,
)

MAX_GENERATION_ATTEMPTS = 100


@dataclass(frozen=True)
class GenerationConfig:
    """Parameters of the random scenario family.

    Utility parameters x, y are uniform around param_center (default 1)
    with half-width param_halfwidth; generations are uniform on
    [g_min, g_max].  The half-width must leave the support positive.
    """

    n_buyers: int
    n_sellers: int
    seed: int
    param_center: float = 1.0
    param_halfwidth: float = 0.5
    g_min: float = 0.5
    g_max: float = 2.0
    virtual_availability: float = 0.0
    surcharge: float = 0.0

    def __post_init__(self):
        if self.n_buyers < 1 or self.n_sellers < 1:
            raise ValueError("need at least one buyer and one seller")
        if not self.param_center - self.param_halfwidth > 0:
            raise ValueError("parameter support must stay positive")
        if not 0 < self.g_min <= self.g_max:
            raise ValueError("need 0 < g_min <= g_max")


def generate_scenario(config: GenerationConfig) -> Scenario:
    """Draw a random valid scenario, retrying up to 100 times.

    Deterministic given the seed; invalid draws (no profitable trade) are
    rejected and redrawn from the same stream.
    """
    rng = np.random.default_rng(config.seed)
    lo = config.param_center - config.param_halfwidth
    hi = config.param_center + config.param_halfwidth
    for _ in range(MAX_GENERATION_ATTEMPTS):
        buyers = tuple(
            BuyerSpec(LogUtility(x=rng.uniform(lo, hi), y=rng.uniform(lo, hi)))
            for _ in range(config.n_buyers))
        sellers = tuple(
            SellerSpec(LogUtility(x=rng.uniform(lo, hi), y=rng.uniform(lo, hi)),
                       generation=rng.uniform(config.g_min, config.g_max))
            for _ in range(config.n_sellers))
        scenario = Scenario(buyers, sellers,
                            AggregatorConfig(config.virtual_availability,
                                             config.surcharge))
        if validate_scenario(scenario).ok:
            return scenario
    raise GenerationError(
        f"no valid scenario in {MAX_GENERATION_ATTEMPTS} draws "
        f"(seed {config.seed})")


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _field(record, name, where, kind=float):
    if name not in record:
        raise ScenarioFormatError(f"{where}: missing field {name!r}")
    value = record[name]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ScenarioFormatError(f"{where}: field {name!r} must be a number")
    return kind(value)


def save_scenario(scenario: Scenario, path) -> None:
    """Write a scenario as JSON; load_scenario(save_scenario(s)) == s."""
    obj = {
        "buyers": [{"x": b.utility.x, "y": b.utility.y} for b in scenario.buyers],
        "sellers": [{"x": s.utility.x, "y": s.utility.y, "g": s.generation}
                    for s in scenario.sellers],
        "aggregator": {"a0": scenario.aggregator.virtual_availability,
                       "ps": scenario.aggregator.surcharge},
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises ScenarioFormatError naming the offending field for structural
    problems and ScenarioValidationError listing every violated market
    assumption for semantic ones.
    """
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(
                f"{path}: invalid JSON at line {exc.lineno}, column "
                f"{exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{path}: top level must be an object")
    for key in ("buyers", "sellers"):
        if key not in obj:
            raise ScenarioFormatError(f"{path}: missing field {key!r}")
        if not isinstance(obj[key], list):
            raise ScenarioFormatError(f"{path}: field {key!r} must be a list")

    violations = []
    buyers, sellers = [], []
    for i, rec in enumerate(obj["buyers"]):
        where = f"buyers[{i}]"
        if not isinstance(rec, dict):
            raise ScenarioFormatError(f"{path}: {where} must be an object")
        x = _field(rec, "x", where)
        y = _field(rec, "y", where)
        if x <= 0 or y <= 0:
            violations.append(
                f"{where}: utility parameters must be strictly positive "
                "(strict concavity)")
        else:
            buyers.append(BuyerSpec(LogUtility(x, y)))
    for j, rec in enumerate(obj["sellers"]):
        where = f"sellers[{j}]"
        if not isinstance(rec, dict):
            raise ScenarioFormatError(f"{path}: {where} must be an object")
        x = _field(rec, "x", where)
        y = _field(rec, "y", where)
        g = _field(rec, "g", where)
        if x <= 0 or y <= 0:
            violations.append(
                f"{where}: utility parameters must be strictly positive "
                "(strict concavity)")
        elif g < 0:
            violations.append(f"{where}: generation must be >= 0")
        else:
            sellers.append(SellerSpec(LogUtility(x, y), g))

    agg = obj.get("aggregator", {})
    if not isinstance(agg, dict):
        raise ScenarioFormatError(f"{path}: field 'aggregator' must be an object")
    a0 = _field(agg, "a0", "aggregator") if "a0" in agg else 0.0
    ps = _field(agg, "ps", "aggregator") if "ps" in agg else 0.0
    if a0 < 0:
        violations.append("aggregator: a0 must be >= 0")
    if ps < 0:
        violations.append("aggregator: ps must be >= 0")
    if violations:
        raise ScenarioValidationError(violations)

    scenario = Scenario(tuple(buyers), tuple(sellers), AggregatorConfig(a0, ps))
    report = validate_scenario(scenario)
    if not report.ok:
        raise ScenarioValidationError(report.violations)
    return scenario


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def trace_header(n_buyers: int, n_sellers: int) -> list[str]:
    cols = ["k", "p"]
    cols += [f"b_{i}" for i in range(1, n_buyers + 1)]
    cols += [f"d_{i}" for i in range(1, n_buyers + 1)]
    cols += [f"beta_{i}" for i in range(1, n_buyers + 1)]
    cols += [f"a_{j}" for j in range(1, n_sellers + 1)]
    cols += [f"alpha_{j}" for j in range(1, n_sellers + 1)]
    cols += [f"rho_{j}" for j in range(1, n_sellers + 1)]
    return cols


def emit_trace(outcome, path) -> None:
    """Write one CSV row per auction round."""
    rows = outcome.iterations
    if rows:
        n, m = len(rows[0].bids), len(rows[0].availabilities)
    else:
        n = m = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_header(n, m))
        for r in rows:
            writer.writerow(
                [r.k, repr(float(r.price))]
                + [repr(float(v)) for v in r.bids]
                + [repr(float(v)) for v in r.demands]
                + [repr(float(v)) for v in r.betas]
                + [repr(float(v)) for v in r.availabilities]
                + [repr(float(v)) for v in r.alphas]
                + [repr(float(v)) for v in r.rhos])


SWEEP_HEADER = ["param", "p", "volume", "U", "R", "L", "converged"]


def emit_sweep(result: SweepResult, path) -> None:
    """Write one CSV row per sweep grid point, ordered by parameter."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for i in range(len(result)):
            writer.writerow([
                repr(float(result.values[i])),
                repr(float(result.prices[i])),
                repr(float(result.volumes[i])),
                repr(float(result.welfares[i])),
                repr(float(result.revenues[i])),
                repr(float(result.losses[i])),
                result.converged[i],
            ])
