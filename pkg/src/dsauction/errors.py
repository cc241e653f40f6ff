"""Exception types shared across the package."""


class DegenerateMarketError(RuntimeError):
    """The market cannot clear: no money bid, no availability offered, or a
    monopoly/monopsony configuration that makes anticipatory behavior
    ill-defined."""


class ScenarioValidationError(ValueError):
    """A scenario violates one of the standing market assumptions.

    Carries the full list of violations found by ``validate_scenario``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid scenario: " + "; ".join(self.violations))


class ScenarioFormatError(ValueError):
    """A scenario file is malformed (bad JSON, missing or mistyped fields)."""


class GenerationError(RuntimeError):
    """Random scenario generation failed to produce a valid scenario."""
