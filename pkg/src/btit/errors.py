"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called with arguments that violate its contract."""


class NumericDomainError(ValueError):
    """Non-finite input or overflow in a numeric kernel."""


class SingularGramianError(RuntimeError):
    """The reachability Gramian is singular or too ill-conditioned to invert."""


class UnsteerablePairError(RuntimeError):
    """No admissible duration connects the pair; the edge cost is infinite."""


class InfeasibleSpaceError(RuntimeError):
    """Rejection sampling failed to find any valid state."""


class ScenarioError(ValueError):
    """A scenario document is malformed; the message names the offending field."""


class SummarySchemaError(ValueError):
    """A results CSV has the wrong columns; the message names the column."""
