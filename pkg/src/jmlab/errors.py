class JmlabError(Exception):
    """Base class for all library errors."""


class DimensionError(JmlabError, ValueError):
    """Operands have incompatible shapes."""


class ValidationError(JmlabError, ValueError):
    """Input violates a structural invariant (hermiticity, positivity, ...)."""


class InconsistencyError(JmlabError, RuntimeError):
    """Two routes that must agree disagree; indicates a bug or bad input."""


class RelationViolation(JmlabError, RuntimeError):
    """A universally valid inequality evaluated negative beyond tolerance."""
