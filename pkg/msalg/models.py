"""
Pydantic data model definitions
"""
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .config import settings


class Defect(BaseModel):
    """A structural defect found by a validator"""
    kind: str = Field(..., description="Defect class (Totality, Codomain, Composition, ...)")
    subject: str = Field(..., description="What the defect is about (op symbol, index pair, ...)")
    detail: str = Field(..., description="Human readable explanation")
    data: Dict[str, Any] = Field(default_factory=dict, description="Witness data")


class Severity(str, Enum):
    """Diagnostic severity"""
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


class Diagnostic(BaseModel):
    """Located message about an instance file"""
    severity: Severity = Field(Severity.ERROR, description="Diagnostic severity")
    code: str = Field(..., description="Diagnostic class")
    message: str = Field(..., description="Message")
    line: int = Field(..., ge=1, description="1-based line")
    column: int = Field(..., ge=1, description="1-based column")
    end_column: Optional[int] = Field(None, description="Column just past the offending token")
    related: Optional[str] = Field(None, description="Related declaration name")

    def render(self, source: str = "<input>") -> str:
        return f"{source}:{self.line}:{self.column}: {self.severity.value}: [{self.code}] {self.message}"


class CheckStatus(str, Enum):
    """Outcome of one check"""
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"
    SKIPPED = "skipped"


class CheckOutcome(BaseModel):
    """Verdict of one named check on one subject"""
    name: str = Field(..., description="Check name")
    subject: str = Field(..., description="Declaration(s) the check ran on")
    status: CheckStatus = Field(..., description="Check status")
    message: Optional[str] = Field(None, description="Short summary")
    witness: Dict[str, Any] = Field(default_factory=dict, description="Witness data for failures")
    duration: float = Field(0.0, ge=0.0, exclude=True, description="Seconds spent (reported under timings)")

    @property
    def passed(self) -> bool:
        return self.status in (CheckStatus.PASSED, CheckStatus.SKIPPED)


class ErrorResponse(BaseModel):
    """Error response model"""
    error: str = Field(..., description="Error message")
    detail: Optional[str] = Field(None, description="Detailed error information")
    code: Optional[str] = Field(None, description="Error code")


class Report(BaseModel):
    """Command report, schema-stable JSON"""
    schema_version: int = Field(settings.REPORT_SCHEMA, alias="schema", description="Report schema version")
    command: List[str] = Field(..., description="Command echo")
    instance_digest: Optional[str] = Field(None, description="sha256 of the instance text")
    status: CheckStatus = Field(..., description="Overall status")
    verdicts: List[CheckOutcome] = Field(default_factory=list, description="Per-check verdicts")
    diagnostics: List[Diagnostic] = Field(default_factory=list, description="Located diagnostics")
    error: Optional[ErrorResponse] = Field(None, description="Fatal error, if any")
    timings: Dict[str, Any] = Field(default_factory=dict, description="Run-dependent timing data")

    model_config = {"populate_by_name": True}

    @property
    def ok(self) -> bool:
        return self.status == CheckStatus.PASSED

    def to_json(self, include_timings: bool = True) -> str:
        exclude = None if include_timings else {"timings"}
        return self.model_dump_json(by_alias=True, indent=2, exclude=exclude)


class GeneratorConfig(BaseModel):
    """Seeded instance generator configuration"""
    seed: int = Field(0, ge=0, lt=2**64, description="64-bit seed")
    sorts: int = Field(2, ge=1, le=4, description="Number of sorts")
    carrier_size: int = Field(3, ge=1, le=4, description="Maximum carrier size per sort")
    ops: int = Field(2, ge=0, le=4, description="Number of operation symbols")
    index_size: int = Field(3, ge=1, le=5, description="Number of indices of the preorder")
    max_arity: int = Field(2, ge=0, le=2, description="Maximum operation arity")
    max_tops: int = Field(2, ge=1, le=5, description="Largest number of mutually equivalent top indices")
    force_constant_support: bool = Field(False, description="Every family member has the same support")
    force_surjective_transitions: bool = Field(False, description="All transition maps are surjective")
    inject_support_violation: bool = Field(False, description="Emit a family without constant support")

    @field_validator('sorts')
    def validate_sorts(cls, v):
        if v < 1:
            raise ValueError('At least one sort is required')
        return v

    @model_validator(mode='after')
    def validate_flags(self):
        if self.inject_support_violation and (self.force_constant_support or self.force_surjective_transitions):
            raise ValueError('inject_support_violation contradicts the forcing flags')
        if self.inject_support_violation and self.sorts < 2:
            raise ValueError('inject_support_violation needs at least two sorts')
        if self.inject_support_violation and self.index_size < 2:
            raise ValueError('inject_support_violation needs at least two indices')
        return self
