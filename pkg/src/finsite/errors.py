"""Exception types shared across the workbench."""


class WorkbenchError(Exception):
    """Base class for everything raised deliberately by this package."""


class ValidationError(WorkbenchError):
    """A structural law failed.  Carries a witness that replays the failure."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class TopologyAxiomError(ValidationError):
    """One of the covering axioms (maximality, stability, transitivity) failed."""


class BudgetExceededError(WorkbenchError):
    """An enumeration or closure exceeded its configured budget."""


class RecoveryError(WorkbenchError):
    """Recovered covering data failed the topology axioms.

    The candidate cover assignment and the axiom witness are kept so the
    failure can be inspected and replayed.
    """

    def __init__(self, message, candidate=None, witness=None):
        super().__init__(message)
        self.candidate = candidate
        self.witness = witness


class ParseError(WorkbenchError):
    """Input file rejected; message carries path and line number."""

    def __init__(self, message, path=None, line=None):
        where = path or "<input>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
