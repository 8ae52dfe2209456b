# core/errors.py
from typing import Optional


class CFMimoError(Exception):
    """Base class for toolkit errors."""


class DomainError(CFMimoError, ValueError):
    """Argument outside the domain of a special function."""


class SeriesConvergenceError(CFMimoError, ArithmeticError):
    """Hypergeometric series did not meet tolerance within the term cap."""

    def __init__(self, message: str, terms_used: int, last_term: float):
        super().__init__(f"{message} (terms used: {terms_used}, last term: {last_term:.3e})")
        self.terms_used = terms_used
        self.last_term = last_term


class IntegrationToleranceError(CFMimoError, ArithmeticError):
    """Adaptive quadrature finished without meeting the requested tolerance."""

    def __init__(self, estimate: float, error_bound: float):
        super().__init__(f"Quadrature tolerance not met: estimate {estimate:.12g}, error bound {error_bound:.3e}")
        self.estimate = estimate
        self.error_bound = error_bound


class DegenerateLinkError(CFMimoError, ValueError):
    """A served link has zero estimated channel power."""


class DegenerateAPError(CFMimoError, ValueError):
    """An AP has no estimated channel power towards any user."""


class RankDeficiencyError(CFMimoError, ArithmeticError):
    """Gram matrix of the pilot-domain estimates is numerically singular."""


class ContractError(CFMimoError, ValueError):
    """Pilot-set precondition of a moment expression violated."""


class DegenerateMomentsError(CFMimoError, ValueError):
    """Moment pair has no positive variance, so no Gamma law matches it."""


class ClosedFormUnavailable(CFMimoError, ArithmeticError):
    """Closed-form rate cannot be evaluated reliably (pole, range or cancellation)."""


class ConfigError(CFMimoError, ValueError):
    """Invalid scenario configuration."""

    def __init__(self, field: Optional[str], message: str):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class UnknownFigureError(CFMimoError, KeyError):
    """Figure id not known to the reproducer."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown figure"
