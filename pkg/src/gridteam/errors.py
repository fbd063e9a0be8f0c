"""Exception types shared across the package."""


class GridTeamError(Exception):
    """Base class for all domain errors."""


class InvalidMap(GridTeamError):
    """Map fields violate a structural invariant."""


class IllegalAction(GridTeamError):
    """Action is not legal in the given state."""


class InvalidPlan(GridTeamError):
    """Composite plan cannot be replayed from its initial state."""


class NoPath(GridTeamError):
    """No path exists between two cells in the selected view."""


class NoPlan(GridTeamError):
    """Search exhausted without reaching the goal."""


class BudgetExhausted(GridTeamError):
    """Search hit its node-expansion budget."""


class Infeasible(GridTeamError):
    """Exhaustive enumeration found no plan within the length bound."""


class EmptySequence(GridTeamError):
    """A score was requested for an empty label sequence."""


class InvalidPermutation(GridTeamError):
    """Room relabeling is not a bijection on the problem's room ids."""


class Unsatisfiable(GridTeamError):
    """Problem generation gave up after too many rejection rounds."""


class ParseError(GridTeamError):
    """A persisted document is malformed. Carries the offending field."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{message} (field: {field})")
        self.field = field


class MalformedMessage(GridTeamError):
    """A wire message failed validation."""


class MissingTrace(GridTeamError):
    """A human-plan evaluation row was requested without any traces."""


class DegenerateCorpusWarning(UserWarning):
    """Training corpus never exhibits one of the labels."""
