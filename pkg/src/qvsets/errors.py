"""Exception types raised across the package."""

from __future__ import annotations


class QVSetsError(ValueError):
    """Base class for all input and precondition errors."""


class TopologyError(QVSetsError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class SpaceMismatchError(QVSetsError):
    pass


class FormulaSyntaxError(QVSetsError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundVariableError(QVSetsError):
    pass


class UnknownDomainError(QVSetsError):
    pass


class UnevaluableAtomError(QVSetsError):
    pass


class SectionDomainError(QVSetsError):
    pass


class PresheafError(QVSetsError):
    pass


class RankError(QVSetsError):
    pass


class NotHermitianError(QVSetsError):
    pass


class NonCommutingError(QVSetsError):
    def __init__(self, message: str, pair: tuple[str, str], norm: float):
        super().__init__(message)
        self.pair = pair
        self.norm = norm


class NotInAlgebraError(QVSetsError):
    pass


class CutAxiomError(QVSetsError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class FilterError(QVSetsError):
    pass


class InvariantError(RuntimeError):
    """An internal invariant failed; signals a bug rather than bad input."""
