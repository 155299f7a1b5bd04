"""Diagnostics and the exception hierarchy shared by every module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

# Closed set of diagnostic codes. Anything raised by the package carries one.
CODES = frozenset(
    {
        # context / formation
        "UndeclaredIndexVariable",
        "DependencyClosureViolation",
        "DuplicateVariable",
        "SelfDependentType",
        "SpecNotInContext",
        "DuplicateBindingVariable",
        "BindingIndexClash",
        "DummyPackNotConstant",
        "VariableClash",
        "FreeIndexNotInContext",
        "BindingNotFinal",
        "NonConstantFreeVariable",
        "FreeIndexVariable",
        "ArityMismatch",
        "UndeclaredVariable",
        "TypeMismatch",
        "DummyPackMismatch",
        "NotASubchain",
        "MalformedSigma",
        # parsing
        "SyntaxError",
        "DuplicateDeclaration",
        "UnknownDirective",
        # model
        "MissingCarrier",
        "MissingProjection",
        "ProjectionNotTotal",
        "IndexTypeMismatch",
        "TriangleViolation",
        "PredicateTupleOutsideSpace",
        "UnknownPredicate",
        "MissingIndexBinding",
        "UninterpretedComponent",
        "UnknownQuantifier",
        "PiNotInterpreted",
        # semantics
        "EnvOutsideParameterSpace",
        "PartialQuantifierOutsideDomain",
        "CandidateOutsideProduct",
        "StarSentenceNotEvaluable",
        "EnumerationLimit",
        # dynamics / stories
        "UndefinedFiber",
        "UnknownType",
        "UnknownSentence",
        "NotEvaluated",
        "ExpectationFailed",
    }
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError("span start after end")

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: Optional[SourceSpan] = None

    def __post_init__(self):
        if self.code not in CODES:
            raise ValueError(f"undocumented diagnostic code {self.code!r}")

    def __str__(self):
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity}: [{self.code}] {self.message}"


class DTGQError(Exception):
    """Base error; `code` is one of CODES."""

    def __init__(self, code: str, message: str, span: Optional[SourceSpan] = None):
        if code not in CODES:
            raise ValueError(f"undocumented diagnostic code {code!r}")
        super().__init__(f"[{code}] {message}")
        self.code = code
        self.message = message
        self.span = span

    @property
    def diagnostic(self) -> Diagnostic:
        return Diagnostic("error", self.code, self.message, self.span)


class FormationError(DTGQError):
    """A syntactic object violates one of the formation rules."""


class ParseError(DTGQError):
    pass


class ModelError(DTGQError):
    """The model does not interpret a context, or is internally incoherent."""

    def __init__(self, code, message, span=None, diagnostics=()):
        super().__init__(code, message, span)
        self.diagnostics = list(diagnostics) or [self.diagnostic]


class EvaluationError(DTGQError):
    pass


class DynamicsError(DTGQError):
    pass
