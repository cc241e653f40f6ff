"""Market model: agents, logarithmic utilities, and scenario validation.

A market is a set of buyers, a set of sellers with fixed energy endowments
(generations), and an aggregator that may operate a virtual trader of size
``a0`` and collect a per-unit surcharge ``ps``.  Every agent values energy
through a saturating logarithmic utility

    u(z) = x * log(y * z + 1),        x > 0, y > 0,

which is strictly increasing and strictly concave on [0, inf) with u(0) = 0.
The closed forms for the marginal, the inverse marginal and the
antiderivative below are what the solvers and the iterative engine rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ScenarioValidationError


# ---------------------------------------------------------------------------
# array kernels for the logarithmic utility family
# ---------------------------------------------------------------------------

def log_utility_value(x, y, z):
    """Utility x*log(y*z + 1) of consuming z. Elementwise on arrays."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("utility argument must be nonnegative")
    return x * np.log1p(y * z)


def log_utility_marginal(x, y, z):
    """Marginal utility x*y/(y*z + 1); positive and strictly decreasing."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("utility argument must be nonnegative")
    return x * y / (y * z + 1.0)


def log_utility_marginal_inverse(x, y, p):
    """Quantity z at which the marginal utility equals p, clipped at zero.

    Solves x*y/(y*z + 1) = p for z, giving z = x/p - 1/y.  For p at or above
    the marginal at zero (x*y) the result is 0.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("price must be positive")
    return np.maximum(x / p - 1.0 / y, 0.0)


def log_utility_integral(x, y, d):
    """Exact integral of the utility value from 0 to d.

    Antiderivative: (x/y) * ((y*d + 1)*log(y*d + 1) - y*d).
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("integration limit must be nonnegative")
    yd = y * d
    return (x / y) * ((yd + 1.0) * np.log1p(yd) - yd)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogUtility:
    """Saturating log utility u(z) = x*log(y*z + 1).

    Attributes:
        x: money scale of the curve; u saturates toward x*log(...) levels.
        y: curvature per energy unit; larger y saturates faster.

    Both parameters must be strictly positive so that u' > 0 and u'' < 0
    everywhere on (0, inf).
    """

    x: float
    y: float

    def __post_init__(self):
        if not (self.x > 0 and np.isfinite(self.x)):
            raise ValueError(f"utility scale x must be > 0, got {self.x}")
        if not (self.y > 0 and np.isfinite(self.y)):
            raise ValueError(f"utility curvature y must be > 0, got {self.y}")

    def value(self, z):
        return log_utility_value(self.x, self.y, z)

    def marginal(self, z):
        return log_utility_marginal(self.x, self.y, z)

    def marginal_inverse(self, p):
        return log_utility_marginal_inverse(self.x, self.y, p)

    def integral(self, d):
        return log_utility_integral(self.x, self.y, d)


@dataclass(frozen=True)
class BuyerSpec:
    """A buyer, characterized entirely by its utility curve."""

    utility: LogUtility


@dataclass(frozen=True)
class SellerSpec:
    """A seller with utility for retained energy and a fixed generation g."""

    utility: LogUtility
    generation: float

    def __post_init__(self):
        if not (self.generation >= 0 and np.isfinite(self.generation)):
            raise ValueError(f"generation must be >= 0, got {self.generation}")


@dataclass(frozen=True)
class AggregatorConfig:
    """Aggregator-side knobs.

    virtual_availability: size a0 of the virtual trader that offers a0 units
        and buys them back each round, diluting everyone's market power.
        a0 = 0 disables it.
    surcharge: per-unit fee ps collected from buyers; sellers receive the
        market price p while buyers pay p + ps.

    The selfless aggregator is (0, 0).
    """

    virtual_availability: float = 0.0
    surcharge: float = 0.0

    def __post_init__(self):
        if not (self.virtual_availability >= 0 and np.isfinite(self.virtual_availability)):
            raise ValueError("virtual availability a0 must be >= 0")
        if not (self.surcharge >= 0 and np.isfinite(self.surcharge)):
            raise ValueError("surcharge ps must be >= 0")


@dataclass(frozen=True)
class Scenario:
    """A complete market instance: buyers, sellers and aggregator settings.

    Instances are immutable; they can be shared freely across concurrent
    solver or engine runs.
    """

    buyers: tuple[BuyerSpec, ...]
    sellers: tuple[SellerSpec, ...]
    aggregator: AggregatorConfig = field(default_factory=AggregatorConfig)

    def __post_init__(self):
        object.__setattr__(self, "buyers", tuple(self.buyers))
        object.__setattr__(self, "sellers", tuple(self.sellers))

    @property
    def n_buyers(self) -> int:
        return len(self.buyers)

    @property
    def n_sellers(self) -> int:
        return len(self.sellers)

    def buyer_params(self):
        """Per-buyer (x, y) parameter arrays."""
        x = np.array([b.utility.x for b in self.buyers], dtype=float)
        y = np.array([b.utility.y for b in self.buyers], dtype=float)
        return x, y

    def seller_params(self):
        """Per-seller (x, y, g) parameter arrays."""
        x = np.array([s.utility.x for s in self.sellers], dtype=float)
        y = np.array([s.utility.y for s in self.sellers], dtype=float)
        g = np.array([s.generation for s in self.sellers], dtype=float)
        return x, y, g


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    """Outcome of validate_scenario: ok flag plus one entry per violation."""

    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_scenario(scenario: Scenario) -> ValidationReport:
    """Check the standing market assumptions and report every violation.

    Checks, in order: both agent lists nonempty; every utility parameter
    strictly positive and finite; generations nonnegative with positive
    total; aggregator knobs nonnegative; and the gains-from-trade condition
    that some buyer's marginal value at zero exceeds some seller's marginal
    value at full generation (otherwise no mutually beneficial trade
    exists).

    Violations are report entries, not exceptions, so the caller can show
    all problems at once.
    """
    v: list[str] = []
    if not scenario.buyers:
        v.append("buyer set is empty (need at least one buyer)")
    if not scenario.sellers:
        v.append("seller set is empty (need at least one seller)")

    for i, b in enumerate(scenario.buyers):
        if not (b.utility.x > 0 and np.isfinite(b.utility.x)):
            v.append(f"buyer {i}: utility scale x must be > 0 (strict concavity)")
        if not (b.utility.y > 0 and np.isfinite(b.utility.y)):
            v.append(f"buyer {i}: utility curvature y must be > 0 (strict concavity)")
    for j, s in enumerate(scenario.sellers):
        if not (s.utility.x > 0 and np.isfinite(s.utility.x)):
            v.append(f"seller {j}: utility scale x must be > 0 (strict concavity)")
        if not (s.utility.y > 0 and np.isfinite(s.utility.y)):
            v.append(f"seller {j}: utility curvature y must be > 0 (strict concavity)")
        if not (s.generation >= 0 and np.isfinite(s.generation)):
            v.append(f"seller {j}: generation must be >= 0")

    agg = scenario.aggregator
    if not (agg.virtual_availability >= 0 and np.isfinite(agg.virtual_availability)):
        v.append("aggregator: virtual availability a0 must be >= 0")
    if not (agg.surcharge >= 0 and np.isfinite(agg.surcharge)):
        v.append("aggregator: surcharge ps must be >= 0")

    if v:
        return ValidationReport(v)

    if scenario.sellers and sum(s.generation for s in scenario.sellers) <= 0:
        v.append("total generation is zero: sellers have nothing to supply")
        return ValidationReport(v)

    # Trade condition: some buyer must value the first unit above what some
    # seller's last retained unit is worth to it.
    max_u0 = max(float(b.utility.marginal(0.0)) for b in scenario.buyers)
    min_vg = min(float(s.utility.marginal(s.generation)) for s in scenario.sellers)
    if not max_u0 > min_vg:
        v.append(
            "no profitable trade exists: max buyer marginal at zero "
            f"({max_u0:.6g}) does not exceed min seller marginal at full "
            f"generation ({min_vg:.6g})"
        )
    return ValidationReport(v)


def require_valid(scenario: Scenario) -> None:
    """Raise ScenarioValidationError unless the scenario validates cleanly."""
    report = validate_scenario(scenario)
    if not report.ok:
        raise ScenarioValidationError(report.violations)
