"""Generalized quantifiers over dependent types: syntax, finite models,
truth evaluation and dynamic context extension."""

from .errors import (
    CODES,
    Diagnostic,
    DTGQError,
    DynamicsError,
    EvaluationError,
    FormationError,
    ModelError,
    ParseError,
    SourceSpan,
)
from .syntax import (
    BaseType,
    Context,
    DepType,
    Leaf,
    Pack,
    Par,
    PiType,
    QuantifierPhrase,
    Seq,
    SigmaType,
    StarSentence,
    TType,
    VarSpec,
    check_context,
    classify,
    form_pack,
    is_convex,
    leaf,
    par_compose,
    seq_compose,
)
from .model import Model, base_type, dep_type, make_model, parameter_space, validate_diagram, validate_model
from .semantics import Evaluator, evaluate
from .dynamics import UNDEFINED, extend_context, refresh, run_story, step1_fibers, step2_types
from .parser import build_model, format_discourse, format_model, load_model, parse_discourse, parse_model

__version__ = "0.1.0"
