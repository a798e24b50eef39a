from __future__ import annotations

from typing import Optional, Tuple


class PtNormError(Exception):
    """Base class for every error raised by ptnorm."""


# -------------------------
# Validation failures (CLI exit 2)
# -------------------------
class ValidationFailure(PtNormError, ValueError):
    pass


class ParameterError(ValidationFailure):
    pass


class PoleError(ValidationFailure):
    pass


class DegenerateRecurrence(ValidationFailure):
    pass


class LabelOutOfRange(ValidationFailure):
    pass


class UnresolvedNorm(ValidationFailure):
    pass


class NormInvalid(ValidationFailure):
    pass


class SignViolation(ValidationFailure):
    pass


class GridMismatch(ValidationFailure):
    pass


class PreconditionError(ValidationFailure):
    pass


# -------------------------
# Numerical failures (CLI exit 3)
# -------------------------
class NumericalFailure(PtNormError, RuntimeError):
    pass


class NoConvergence(NumericalFailure):
    pass


class Divergent(NumericalFailure):
    pass


class SignMismatch(NumericalFailure):
    pass


class NonRealNorm(NumericalFailure):
    pass


class GramEntryError(NumericalFailure):
    def __init__(self, index: Tuple[int, int], message: str) -> None:
        super().__init__(f"gram entry {index}: {message}")
        self.index = index


# -------------------------
# Dynamical failure (CLI exit 4)
# -------------------------
class BlowUp(PtNormError, RuntimeError):
    def __init__(self, step: int, growth: float, message: Optional[str] = None) -> None:
        super().__init__(message or f"max|psi| grew by {growth:.3e}x at step {step}")
        self.step = step
        self.growth = growth
