"""Concrete syntax for model files and discourse scripts.

Both formats share one tokenizer. Newlines end a statement unless they occur
inside brackets; ``#`` starts a comment. Parse failures raise `ParseError`
with a span inside the document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import DTGQError, ParseError, SourceSpan
from .model import Model, PredicateDenotation, QuantifierDenotation, base_type, dep_type
from .syntax import (
    ContextStep,
    DiscourseStep,
    ExpectStep,
    Leaf,
    Pack,
    Par,
    PiType,
    PreChain,
    QuantifierPhrase,
    RefreshStep,
    SentenceStep,
    Seq,
    SigmaRefresh,
    SigmaType,
    TypeExpr,
    VarSpec,
    Weaken,
    form_pack,
    make_type,
    par_compose,
    seq_compose,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>->)
  | (?P<name>[A-Za-z0-9_']+)
  | (?P<punct>[{}()\[\],:=|;.])
    """,
    re.VERBOSE,
)

_OPEN, _CLOSE = "({[", ")}]"


@dataclass(frozen=True)
class Token:
    kind: str  # name | punct | nl | eof
    text: str
    line: int
    col: int

    @property
    def end_col(self) -> int:
        return self.col + max(len(self.text), 1) - 1


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    out: list[Token] = []
    line, col, pos, depth = 1, 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            span = SourceSpan(file, line, col, line, col)
            raise ParseError("SyntaxError", f"unexpected character {text[pos]!r}", span)
        kind, s = m.lastgroup, m.group()
        if kind == "nl":
            if depth == 0:
                out.append(Token("nl", "\n", line, col))
            line, col = line + 1, 1
        elif kind not in ("ws", "comment"):
            if kind == "arrow":
                kind = "punct"
            if s in _OPEN:
                depth += 1
            elif s in _CLOSE:
                depth = max(depth - 1, 0)
            out.append(Token(kind, s, line, col))
            col += len(s)
        else:
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class _Cursor:
    def __init__(self, text: str, file: str):
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.i = min(self.i + 1, len(self.toks) - 1)
        return t

    def span(self, start: Token, end: Optional[Token] = None) -> SourceSpan:
        end = end or start
        if (end.line, end.end_col) < (start.line, start.col):
            end = start
        return SourceSpan(self.file, start.line, start.col, end.line, end.end_col)

    def last(self) -> Token:
        return self.toks[max(self.i - 1, 0)]

    def fail(self, msg: str, tok: Optional[Token] = None, code: str = "SyntaxError"):
        tok = tok or self.peek()
        raise ParseError(code, msg, self.span(tok))

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("punct", "name") and t.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            t = self.peek()
            self.fail(f"expected {text!r}, found {_describe(t)}")
        return self.next()

    def name(self, what: str = "a name") -> str:
        t = self.peek()
        if t.kind != "name":
            self.fail(f"expected {what}, found {_describe(t)}")
        return self.next().text

    def skip_newlines(self):
        while self.peek().kind == "nl":
            self.next()

    def end_statement(self):
        t = self.peek()
        if t.kind not in ("nl", "eof"):
            self.fail(f"unexpected {_describe(t)} at end of statement")
        self.skip_newlines()


def _describe(t: Token) -> str:
    if t.kind == "eof":
        return "end of input"
    if t.kind == "nl":
        return "end of line"
    return repr(t.text)


def _names(cur: _Cursor, close: str, what: str = "a name") -> list[str]:
    """Comma-separated names up to (and consuming) `close`; may be empty."""
    out = []
    if cur.at(close):
        cur.next()
        return out
    while True:
        out.append(cur.name(what))
        if cur.at(","):
            cur.next()
            continue
        cur.expect(close)
        return out


# ---------------------------------------------------------------------------
# Model files


@dataclass(frozen=True)
class TypeDecl:
    name: str
    params: tuple[tuple[str, str], ...]
    elements: tuple[tuple[str, tuple[str, ...]], ...]  # (atom, parents in param order)
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class SigEntry:
    var: str
    type: str
    args: tuple[str, ...] = ()

    def __str__(self):
        return f"{self.var}:{make_type(self.type, self.args)}"


@dataclass(frozen=True)
class PredDecl:
    name: str
    sig: tuple[SigEntry, ...]
    tuples: tuple[tuple[str, ...], ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class QuantDecl:
    """One row of a table quantifier: the accepted subsets of one ground set."""

    name: str
    ground: tuple[str, ...]
    family: tuple[tuple[str, ...], ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Pragma:
    key: str
    value: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


PRAGMAS = {"numerals": ("exactly", "atleast"), "most_on_empty": ("true", "false")}


@dataclass(frozen=True)
class ModelDesc:
    decls: tuple = ()

    @property
    def types(self) -> list[TypeDecl]:
        return [d for d in self.decls if isinstance(d, TypeDecl)]

    @property
    def predicates(self) -> list[PredDecl]:
        return [d for d in self.decls if isinstance(d, PredDecl)]

    @property
    def quantifiers(self) -> list[QuantDecl]:
        return [d for d in self.decls if isinstance(d, QuantDecl)]

    @property
    def pragmas(self) -> dict[str, str]:
        return {d.key: d.value for d in self.decls if isinstance(d, Pragma)}

    def span_of(self, name: str) -> Optional[SourceSpan]:
        for d in self.decls:
            if getattr(d, "name", None) == name:
                return d.span
        return None


def parse_model(text: str, file: str = "<model>") -> ModelDesc:
    cur = _Cursor(text, file)
    decls: list = []
    seen_types: dict[str, TypeDecl] = {}
    seen_preds: set[str] = set()
    seen_rows: set[tuple] = set()
    seen_pragmas: set[str] = set()
    cur.skip_newlines()
    while cur.peek().kind != "eof":
        start = cur.peek()
        kw = cur.name("a declaration")
        if kw == "type":
            d = _type_decl(cur, start, seen_types)
            if d.name in seen_types:
                raise ParseError("DuplicateDeclaration", f"type {d.name} declared twice", d.span)
            seen_types[d.name] = d
        elif kw == "pred":
            d = _pred_decl(cur, start)
            if d.name in seen_preds:
                raise ParseError("DuplicateDeclaration", f"predicate {d.name} declared twice", d.span)
            seen_preds.add(d.name)
        elif kw == "quant":
            d = _quant_decl(cur, start)
            key = (d.name, frozenset(d.ground))
            if key in seen_rows:
                raise ParseError("DuplicateDeclaration", f"quantifier {d.name} given twice over the same set", d.span)
            seen_rows.add(key)
        elif kw == "pragma":
            key = cur.name("a pragma name")
            cur.expect("=")
            vt = cur.peek()
            value = cur.name("a pragma value")
            if key not in PRAGMAS:
                cur.fail(f"unknown pragma {key!r}", start, "UnknownDirective")
            if value not in PRAGMAS[key]:
                cur.fail(f"pragma {key} must be one of {', '.join(PRAGMAS[key])}", vt)
            if key in seen_pragmas:
                cur.fail(f"pragma {key} given twice", start, "DuplicateDeclaration")
            seen_pragmas.add(key)
            d = Pragma(key, value, cur.span(start, cur.last()))
        else:
            cur.fail(f"unknown declaration {kw!r}", start, "UnknownDirective")
        decls.append(d)
        cur.end_statement()
    return ModelDesc(tuple(decls))


def _type_decl(cur: _Cursor, start: Token, seen: dict) -> TypeDecl:
    name = cur.name("a type name")
    params: list[tuple[str, str]] = []
    if cur.at("("):
        cur.next()
        while True:
            p = cur.name("a parameter")
            cur.expect(":")
            params.append((p, cur.name("a parameter type")))
            if cur.at(","):
                cur.next()
                continue
            cur.expect(")")
            break
    cur.expect("=")
    cur.expect("{")
    elems: list[tuple[str, tuple[str, ...]]] = []
    atoms: set[str] = set()
    if cur.at("}"):
        cur.next()
    else:
        while True:
            et = cur.peek()
            atom = cur.name("an element")
            parents: list[str] = []
            if cur.at("->"):
                cur.next()
                parents.append(cur.name("a parent element"))
                # further parents are separated by commas; stop at the next `atom ->` or `}`
                while cur.at(",") and cur.peek(1).kind == "name" and not cur.at("->", 2) and len(parents) < len(params):
                    cur.next()
                    parents.append(cur.name("a parent element"))
            if len(parents) != len(params):
                cur.fail(f"element {atom} of {name} lists {len(parents)} parents, expected {len(params)}", et)
            if atom in atoms:
                raise ParseError("DuplicateDeclaration", f"element {atom} listed twice in {name}", cur.span(et))
            atoms.add(atom)
            elems.append((atom, tuple(parents)))
            if cur.at(","):
                cur.next()
                continue
            cur.expect("}")
            break
    return TypeDecl(name, tuple(params), tuple(elems), cur.span(start, cur.last()))


def _pred_decl(cur: _Cursor, start: Token) -> PredDecl:
    name = cur.name("a predicate name")
    cur.expect("(")
    sig: list[SigEntry] = []
    while True:
        v = cur.name("a variable")
        cur.expect(":")
        t = cur.name("a type")
        args: list[str] = []
        if cur.at("("):
            cur.next()
            args = _names(cur, ")", "an index variable")
        sig.append(SigEntry(v, t, tuple(args)))
        if cur.at(","):
            cur.next()
            continue
        cur.expect(")")
        break
    cur.expect("=")
    cur.expect("{")
    tuples: list[tuple[str, ...]] = []
    if cur.at("}"):
        cur.next()
    else:
        while True:
            tt = cur.peek()
            if cur.at("("):
                cur.next()
                tup = tuple(_names(cur, ")", "an atom"))
            else:
                tup = (cur.name("an atom or tuple"),)
            if len(tup) != len(sig):
                cur.fail(f"{name} takes {len(sig)} arguments, tuple has {len(tup)}", tt)
            tuples.append(tup)
            if cur.at(","):
                cur.next()
                continue
            cur.expect("}")
            break
    return PredDecl(name, tuple(sig), tuple(tuples), cur.span(start, cur.last()))


def _quant_decl(cur: _Cursor, start: Token) -> QuantDecl:
    name = cur.name("a quantifier name")
    cur.expect("over")
    cur.expect("{")
    ground = tuple(_names(cur, "}", "an atom"))
    cur.expect("=")
    cur.expect("{")
    family: list[tuple[str, ...]] = []
    if cur.at("}"):
        cur.next()
    else:
        while True:
            st = cur.peek()
            cur.expect("{")
            member = tuple(_names(cur, "}", "an atom"))
            stray = [a for a in member if a not in ground]
            if stray:
                cur.fail(f"{', '.join(stray)} not in the ground set of {name}", st)
            family.append(member)
            if cur.at(","):
                cur.next()
                continue
            cur.expect("}")
            break
    if len(set(ground)) != len(ground):
        raise ParseError("DuplicateDeclaration", f"ground set of {name} lists an atom twice", cur.span(start))
    return QuantDecl(name, ground, tuple(family), cur.span(start, cur.last()))


def build_model(desc: ModelDesc, numerals: Optional[str] = None) -> Model:
    """Interpret a parsed model file. `numerals` overrides the pragma."""
    from .model import Model

    types = []
    for d in desc.types:
        if d.params:
            types.append(dep_type(d.name, d.params, {a: list(ps) for a, ps in d.elements}))
        else:
            types.append(base_type(d.name, (a for a, _ in d.elements)))
    preds = {}
    for d in desc.predicates:
        sig = tuple(VarSpec(e.var, make_type(e.type, e.args)) for e in d.sig)
        try:
            preds[d.name] = PredicateDenotation(d.name, sig, frozenset(d.tuples))
        except DTGQError as exc:
            raise ParseError(exc.code, exc.message, d.span) from None
    tables: dict[str, dict] = {}
    for d in desc.quantifiers:
        tables.setdefault(d.name, {})[frozenset(d.ground)] = frozenset(frozenset(s) for s in d.family)
    quants = {name: QuantifierDenotation(name, table=t) for name, t in tables.items()}
    pragmas = desc.pragmas
    return Model(
        {t.name: t for t in types},
        preds,
        quants,
        numerals or pragmas.get("numerals", "exactly"),
        pragmas.get("most_on_empty", "false") == "true",
    )


def format_model(desc: ModelDesc) -> str:
    lines = []
    for d in desc.decls:
        if isinstance(d, TypeDecl):
            params = f"({', '.join(f'{p}:{t}' for p, t in d.params)})" if d.params else ""
            elems = ", ".join(a + (f"->{', '.join(ps)}" if ps else "") for a, ps in d.elements)
            lines.append(f"type {d.name}{params} = {{{elems}}}")
        elif isinstance(d, PredDecl):
            tuples = ", ".join(f"({', '.join(t)})" for t in d.tuples)
            lines.append(f"pred {d.name}({', '.join(map(str, d.sig))}) = {{{tuples}}}")
        elif isinstance(d, QuantDecl):
            fam = ", ".join("{" + ", ".join(s) + "}" for s in d.family)
            lines.append(f"quant {d.name} over {{{', '.join(d.ground)}}} = {{{fam}}}")
        else:
            lines.append(f"pragma {d.key}={d.value}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_model(text: str, file: str = "<model>", numerals: Optional[str] = None) -> Model:
    return build_model(parse_model(text, file), numerals)


# ---------------------------------------------------------------------------
# Discourse scripts

_PARAM_QUANTS = ("atleast", "exactly")
_RESERVED = {"pack", "par", "Sigma", "Pi"}


def parse_discourse(text: str, file: str = "<script>") -> list[DiscourseStep]:
    cur = _Cursor(text, file)
    steps: list[DiscourseStep] = []
    cur.skip_newlines()
    while cur.peek().kind != "eof":
        start = cur.peek()
        kw = cur.name("a step keyword")
        if kw == "context":
            specs = [_spec(cur)]
            while cur.at(","):
                cur.next()
                specs.append(_spec(cur))
            step = ContextStep(tuple(specs), cur.span(start, cur.last()))
        elif kw == "sentence":
            sid = cur.name("a sentence id")
            cur.expect(":")
            chain = _chain(cur)
            cur.expect(".")
            pred = cur.name("a predicate")
            cur.expect("(")
            args = _names(cur, ")", "an argument")
            step = SentenceStep(sid, chain, pred, tuple(args), cur.span(start, cur.last()))
        elif kw == "refresh":
            kt = cur.peek()
            kind = cur.name("a refresh directive")
            if kind == "weaken":
                directive = Weaken(_spec(cur))
            elif kind in ("sigma", "pi"):
                var = cur.name("a variable")
                cur.expect("=")
                t = _typeref(cur, allow_binder=True)
                if not isinstance(t, SigmaType) or isinstance(t, PiType) != (kind == "pi"):
                    cur.fail(f"refresh {kind} needs a {'Pi' if kind == 'pi' else 'Sigma'} type", kt)
                directive = SigmaRefresh(var, t)
            else:
                cur.fail(f"unknown refresh directive {kind!r}", kt, "UnknownDirective")
            step = RefreshStep(directive, cur.span(start, cur.last()))
        elif kw == "expect":
            sid = cur.name("a sentence id")
            vt = cur.peek()
            value = cur.name("true or false")
            if value not in ("true", "false"):
                cur.fail("expected true or false", vt)
            step = ExpectStep(sid, value == "true", cur.span(start, cur.last()))
        else:
            cur.fail(f"unknown step {kw!r}", start, "UnknownDirective")
        steps.append(step)
        cur.end_statement()
    return steps


def _guard(cur: _Cursor, tok: Token, fn, *args):
    """Turn formation errors into parse errors located at `tok`."""
    try:
        return fn(*args)
    except ParseError:
        raise
    except DTGQError as exc:
        raise ParseError(exc.code, exc.message, cur.span(tok, cur.last())) from None


def _spec(cur: _Cursor) -> VarSpec:
    t0 = cur.peek()
    var = cur.name("a variable")
    cur.expect(":")
    t = _typeref(cur, allow_binder=True)
    return _guard(cur, t0, VarSpec, var, t)


def _typeref(cur: _Cursor, allow_binder: bool = False) -> TypeExpr:
    t0 = cur.peek()
    if cur.at("("):
        cur.next()
        t = _typeref(cur, allow_binder=True)
        cur.expect(")")
        return t
    if cur.at("Sigma") or cur.at("Pi"):
        if not allow_binder:
            cur.fail("write a Sigma or Pi type in a chain inside parentheses")
        cls = SigmaType if cur.next().text == "Sigma" else PiType
        y = cur.name("a bound variable")
        cur.expect(":")
        bound = _typeref(cur)
        cur.expect(".")
        body = _typeref(cur)
        return _guard(cur, t0, cls, y, bound, body)
    name = cur.name("a type")
    args: list[str] = []
    if cur.at("("):
        cur.next()
        args = _names(cur, ")", "an index variable")
    return _guard(cur, t0, make_type, name, args)


def _chain(cur: _Cursor) -> PreChain:
    t0 = cur.peek()
    node = _term(cur)
    while cur.at("|"):
        cur.next()
        node = _guard(cur, t0, seq_compose, node, _term(cur))
    return node


def _term(cur: _Cursor) -> PreChain:
    t0 = cur.peek()
    if cur.at("("):
        cur.next()
        node = _chain(cur)
        cur.expect(")")
        return node
    if cur.at("pack") and cur.at("(", 1):
        cur.next()
        cur.next()
        qps = [_qp(cur)]
        while cur.at(","):
            cur.next()
            qps.append(_qp(cur))
        cur.expect(")")
        return Leaf(_guard(cur, t0, form_pack, qps))
    if cur.at("par") and cur.at("(", 1):
        cur.next()
        cur.next()
        top = _chain(cur)
        cur.expect(";")
        bottom = _chain(cur)
        cur.expect(")")
        return _guard(cur, t0, par_compose, top, bottom)
    if t0.kind != "name":
        cur.fail(f"expected a quantifier phrase, found {_describe(t0)}")
    return Leaf(Pack((_qp(cur),)))


def _qp(cur: _Cursor) -> QuantifierPhrase:
    t0 = cur.peek()
    if t0.kind != "name" or t0.text in _RESERVED:
        cur.fail(f"expected a quantifier phrase, found {_describe(t0)}")
    if cur.at(":", 1):  # bare VAR:T is a dummy phrase
        quant = None
    else:
        quant = cur.name("a quantifier")
        if quant in _PARAM_QUANTS:
            cur.expect("(")
            kt = cur.peek()
            k = cur.name("a number")
            if not k.isdigit():
                cur.fail(f"{quant} needs a numeric argument", kt)
            cur.expect(")")
            quant = f"{quant}({int(k)})"
    var = cur.name("a variable")
    cur.expect(":")
    t = _typeref(cur)
    return _guard(cur, t0, QuantifierPhrase, quant, var, t)


def format_discourse(steps: Sequence[DiscourseStep]) -> str:
    return "".join(f"{s}\n" for s in steps)
