"""Exception taxonomy shared by all frontlab modules."""


class FrontlabError(Exception):
    """Base class for all package errors."""


class ParameterError(FrontlabError, ValueError):
    """A generator or solver parameter is outside its admissible range."""


class ResourceError(FrontlabError, RuntimeError):
    """A request would exceed the desk-scale resource budget."""


class DomainError(FrontlabError, ValueError):
    """A point or cell lies outside the domain an operation requires."""


class StructuralError(FrontlabError, RuntimeError):
    """The medium lacks the structure an operation needs (e.g. no spanning
    component)."""


class InsufficientDataError(FrontlabError, RuntimeError):
    """Too few usable samples/radii to produce an estimate."""


class DataError(FrontlabError, ValueError):
    """Input data violates a contract (e.g. nonpositive averaged metric)."""


class UndefinedSubgradientError(FrontlabError, ValueError):
    """Subgradient direction requested where the Hamiltonian vanishes."""


class ConfigurationError(FrontlabError, ValueError):
    """Bad solver configuration or config-file contents."""


class NumericalError(FrontlabError, RuntimeError):
    """An iterative solve failed to converge."""


class StageError(FrontlabError, RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class ResolutionWarning(UserWarning):
    """The grid under-resolves the requested oscillation scale."""
