from __future__ import annotations

from typing import Any

__all__ = [
    'LsfactError', 'ParameterError', 'SpaceMismatchError', 'RankPreconditionError',
    'UnsupportedNormError', 'UnsupportedComputationError',
    'NumericalFailure', 'CertificationError',
]


class LsfactError(Exception):
    pass


class ParameterError(LsfactError, ValueError):
    pass


class SpaceMismatchError(ParameterError):
    pass


class RankPreconditionError(ParameterError):
    pass


class UnsupportedNormError(LsfactError, NotImplementedError):
    pass


class UnsupportedComputationError(LsfactError, NotImplementedError):
    pass


class NumericalFailure(LsfactError, RuntimeError):
    def __init__(self, msg: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class CertificationError(LsfactError, RuntimeError):
    def __init__(self, msg: str, record: Any = None) -> None:
        super().__init__(msg)
        self.record = record
