"""Exception types and diagnostics shared across the toolkit."""

from dataclasses import dataclass


@dataclass
class Diagnostic:
    code: str
    message: str
    line: int | None = None
    col: int | None = None

    def __str__(self):
        if self.line is not None:
            return f"{self.line}:{self.col}: [{self.code}] {self.message}"
        return f"[{self.code}] {self.message}"


class BeliefProgError(Exception):
    """Base class for all toolkit errors."""


class ParseError(BeliefProgError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class EvalError(BeliefProgError):
    """Runtime evaluation failure (e.g. division by zero in an effect)."""


class LikelihoodContextError(BeliefProgError):
    """Likelihood contexts overlap or fail to cover an evaluation point."""


class LikelihoodSumError(BeliefProgError):
    """Outcome weights within one likelihood context do not sum to 1."""


class IncompatibleActionError(BeliefProgError):
    """A stochastic action has zero believed likelihood on the whole support."""


class IncompatibleSensingError(BeliefProgError):
    """Bayes normalizer is zero: the sensing outcome is believed impossible."""


class InadmissiblePropertyError(BeliefProgError):
    """Property lies outside the checker-decidable fragment."""


class PolicyBudgetError(BeliefProgError):
    """Proper-policy count exceeds the configured enumeration cap."""


class ObservationUniformityError(BeliefProgError):
    """States sharing an observation disagree on their enabled actions."""
