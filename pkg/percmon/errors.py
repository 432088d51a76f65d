from __future__ import annotations
from typing import Optional


class PercmonException(Exception):
    code = "percmon-error"

    def __init__(self, *args, code: Optional[str] = None, path: Optional[str] = None):
        super().__init__(*args)
        if code:
            self.code = code
        self.path = str(path) if path is not None else None

    def __str__(self):
        if self.path:
            return f"[{self.path}] {super().__str__()}"
        else:
            return super().__str__()

    def to_envelope(self) -> dict:
        return {
            "error": {
                "code": self.code,
                "type": self.__class__.__name__,
                "message": super().__str__(),
                "path": self.path,
            }
        }


class GraphError(PercmonException):
    code = "graph-invalid"


class DuplicateIdError(GraphError):
    code = "duplicate-id"


class DanglingReferenceError(GraphError):
    code = "dangling-reference"


class EmptyScopeError(GraphError):
    code = "empty-scope"


class ProbabilityError(GraphError):
    code = "malformed-probability"


class SliceError(GraphError):
    code = "invalid-slice"


class UnknownGraphError(GraphError):
    code = "unknown-graph"


class SemanticsError(PercmonException):
    code = "semantics"


class LengthMismatchError(SemanticsError):
    code = "length-mismatch"


class MissingOutcomeError(SemanticsError):
    code = "missing-outcome"


class WrongSemanticsError(SemanticsError):
    code = "wrong-semantics"


class ProbabilisticRelationError(SemanticsError):
    code = "probabilistic-relation"


class SolverError(PercmonException):
    code = "solver"


class InfeasibleError(SolverError):
    code = "infeasible"


class EnumerationCapError(SolverError):
    code = "enumeration-cap"


class BudgetExceededError(SolverError):
    code = "budget-exceeded"

    def __init__(self, *args, partial=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.partial = partial


class InferenceError(PercmonException):
    code = "inference"


class InvalidFactorError(InferenceError):
    code = "invalid-factor"


class ZeroPartitionError(InferenceError):
    code = "zero-partition"


class SizeCapError(InferenceError):
    code = "size-cap"


class MissingParameterError(InferenceError):
    code = "missing-parameter"


class DataError(PercmonException):
    code = "data"


class EmptyDatasetError(DataError):
    code = "empty-dataset"


class InvalidCountsError(DataError):
    code = "invalid-counts"


class MisalignedInputError(DataError):
    code = "misaligned-input"


class ConfigError(PercmonException):
    code = "config"


class RankingError(PercmonException):
    code = "incomplete-ranking"


class ReportConflictError(PercmonException):
    code = "report-conflict"

# vim: set et sw=4 ts=4:
