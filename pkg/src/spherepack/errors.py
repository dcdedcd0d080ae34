"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""

from __future__ import annotations


class SpherePackError(Exception):
    code = "ERROR"

    def __init__(self, message: str, code: str | None = None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), **{
            k: v for k, v in self.details.items() if isinstance(v, (int, float, str, list))
        }}


class ValidationError(SpherePackError):
    """Raised when inputs violate a structural invariant.

    ``violations`` lists every failed check as ``(code, message)`` pairs so
    callers can report all problems at once instead of the first one.
    """

    code = "VALIDATION"

    def __init__(self, message: str, violations: list[tuple[str, str]] | None = None, code: str | None = None):
        violations = list(violations or [])
        if code is None and violations:
            code = violations[0][0]
        super().__init__(message, code=code)
        self.violations = violations


class DomainError(SpherePackError):
    code = "DOMAIN"


class ConvergenceError(SpherePackError):
    code = "NO_CONVERGENCE"


class SupportBlowupError(SpherePackError):
    code = "SUPPORT_CAP"
