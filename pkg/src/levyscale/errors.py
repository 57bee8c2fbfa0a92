"""Exception hierarchy.

Configuration problems (bad parameters, unsupported routes) derive from
:class:`ConfigError`; failures of a numerical procedure that was correctly
set up derive from :class:`NumericalError`.  The CLI maps the two families
to different exit codes.
"""


class LevyScaleError(Exception):
    """Base class for all library errors."""


class ConfigError(LevyScaleError, ValueError):
    """Invalid parameters or an unsupported combination of options."""


class DomainError(ConfigError):
    """Argument outside the domain where a quantity is defined."""


class PoleError(DomainError):
    """Evaluation requested (numerically) at a pole."""


class RouteError(ConfigError):
    """The requested backend cannot be used for this evaluation route."""


class PreconditionError(ConfigError):
    """A documented precondition of a constructor is not satisfied."""


class NumericalError(LevyScaleError, ArithmeticError):
    """A numerical procedure failed or could not certify its result."""


class ChecksumError(NumericalError):
    """Inversion weights fail their exact-sum check at the working precision."""


class BracketError(NumericalError):
    """A root could not be bracketed where theory says it must be."""


class TruncationError(NumericalError):
    """A series truncation bound exceeds the requested tolerance."""


class SearchLimitError(NumericalError):
    """A search ran past its configured limit without success."""
