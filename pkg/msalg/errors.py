"""
Exception hierarchy

Every domain failure is an ``MsalgError`` with a stable ``code`` (reported in
``ErrorResponse.code``) and an optional ``witness`` mapping that carries the
data needed to explain it.
"""
from typing import Any, Dict, List, Optional


class MsalgError(Exception):
    """Base class for all domain errors"""

    code: str = "MSALG_ERROR"

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.witness = witness or {}


# sorted sets and mappings
class InvalidSortedSet(MsalgError):
    code = "INVALID_SORTED_SET"


class InvalidMapping(MsalgError):
    code = "INVALID_MAPPING"


class SourceMismatch(MsalgError):
    code = "SOURCE_MISMATCH"


class PartitionMismatch(MsalgError):
    code = "PARTITION_MISMATCH"


class NotRefining(MsalgError):
    code = "NOT_REFINING"


class CapExceeded(MsalgError):
    code = "CAP_EXCEEDED"


# signatures and algebras
class InvalidAlgebra(MsalgError):
    code = "INVALID_ALGEBRA"


class BadTuple(MsalgError):
    code = "BAD_TUPLE"


class CarrierMismatch(MsalgError):
    code = "CARRIER_MISMATCH"


class SignatureMismatch(MsalgError):
    code = "SIGNATURE_MISMATCH"


class NotAHomomorphism(MsalgError):
    code = "NOT_A_HOMOMORPHISM"


class NotSubset(MsalgError):
    code = "NOT_SUBSET"


class NotClosed(MsalgError):
    code = "NOT_CLOSED"


class NotCongruence(MsalgError):
    code = "NOT_CONGRUENCE"


class NotParallel(MsalgError):
    code = "NOT_PARALLEL"


class ArityMismatch(MsalgError):
    code = "ARITY_MISMATCH"


# orders and filters
class InvalidPreorder(MsalgError):
    code = "INVALID_PREORDER"


class InvalidMap(MsalgError):
    code = "INVALID_MAP"


class NotABasis(MsalgError):
    code = "NOT_A_BASIS"


class InvalidFilter(MsalgError):
    code = "INVALID_FILTER"


class NotAUffsMorphism(MsalgError):
    code = "NOT_A_UFFS_MORPHISM"


# systems and limits
class InvalidSystem(MsalgError):
    code = "INVALID_SYSTEM"


class GroundMismatch(MsalgError):
    code = "GROUND_MISMATCH"


class NotACone(MsalgError):
    code = "NOT_A_CONE"


class NotACocone(MsalgError):
    code = "NOT_A_COCONE"


# retraction
class InvalidInstance(MsalgError):
    code = "INVALID_INSTANCE"


class SortNotSupported(MsalgError):
    code = "SORT_NOT_SUPPORTED"


class JNotInFilter(MsalgError):
    code = "J_NOT_IN_FILTER"


class VoteFailure(MsalgError):
    code = "VOTE_FAILURE"


class NotASystemMorphism(MsalgError):
    code = "NOT_A_SYSTEM_MORPHISM"


# instance files
class DslError(MsalgError):
    """Base for instance-file errors; carries located diagnostics"""

    code = "DSL_ERROR"

    def __init__(self, message: str, diagnostics: Optional[List[Any]] = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class ParseError(DslError):
    code = "PARSE_ERROR"


class ResolveError(DslError):
    code = "RESOLVE_ERROR"


class ValidationFailed(DslError):
    code = "VALIDATION_FAILED"
