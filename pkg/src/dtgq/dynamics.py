"""Dynamic extension of contexts.

A *-sentence splits its predicate extension back down its chain tree
(`step1_fibers`), the per-pack fibers are glued into dependent T-types
(`step2_types`), and the context is rebuilt with one new variable per pack
(`extend_context`). `run_story` threads this through a discourse script.

Step 2 filters environments by restricting to env(P') together with bv(P')
for every earlier pack P', since T-type elements carry both.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import DTGQError, Diagnostic, DynamicsError, FormationError, ModelError
from .model import EMPTY, Assignment, Model, TypeDenotation, Witness, SigmaPair, require_valid, value_key
from .semantics import Evaluator, evaluate, predicate_extension
from .syntax import (
    BaseType,
    Context,
    ContextStep,
    DepType,
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
    StarSentence,
    TType,
    TypeExpr,
    VarSpec,
    Weaken,
    check_context,
    classify,
    env_vars,
    pack_order,
    subchains,
    ttype_name,
    tvar_name,
)


class _Undefined:
    def __repr__(self):
        return "UNDEFINED"


UNDEFINED = _Undefined()


@dataclass
class FiberTable:
    sentence: StarSentence
    entries: dict = field(default_factory=dict)  # (node, env) -> frozenset | UNDEFINED

    def fiber(self, node: PreChain, env: Mapping = EMPTY):
        return self.entries[(node, Assignment(env))]

    def envs(self, node: PreChain) -> list[Assignment]:
        return sorted((e for n, e in self.entries if n == node), key=value_key)

    def undefined(self) -> list:
        return [k for k, v in self.entries.items() if v is UNDEFINED]


# ---------------------------------------------------------------------------
# Step 1


def step1_fibers(s: StarSentence, m: Model, evaluator: Optional[Evaluator] = None) -> FiberTable:
    ev = evaluator or Evaluator(m)
    table = FiberTable(s)
    root = s.star_chain
    ext = predicate_extension(s, m)

    def mark_undefined(node, env):
        table.entries[(node, env)] = UNDEFINED
        if isinstance(node, Seq):
            mark_undefined(node.left, env)
            for b in ev.bv_set(node.left, env):
                mark_undefined(node.right, env | b)
        elif isinstance(node, Par):
            mark_undefined(node.top, env)
            mark_undefined(node.bottom, env)

    def visit(node, env, fib):
        if fib is UNDEFINED:
            mark_undefined(node, env)
            return
        table.entries[(node, env)] = fib
        if isinstance(node, Seq):
            lv, rv = ev.bvars(node.left), ev.bvars(node.right)
            slices: dict[Assignment, set] = {}
            for r in fib:
                slices.setdefault(r.restrict(lv), set()).add(r.restrict(rv))
            lefts = ev.bv_set(node.left, env)
            chosen = frozenset(
                b for b in lefts if ev.accepts(node.right, env | b, frozenset(slices.get(b, ())))
            )
            visit(node.left, env, chosen)
            for b in sorted(lefts, key=value_key):
                visit(node.right, env | b, frozenset(slices.get(b, ())))
        elif isinstance(node, Par):
            a, b = _par_split(ev, node, env, fib)
            visit(node.top, env, a)
            visit(node.bottom, env, b)

    visit(root, EMPTY, ext)
    return table


def _par_split(ev: Evaluator, node: Par, env: Assignment, fib: frozenset):
    if fib:
        a, b = ev.rectangle_sides(node, fib)
        if len(a) * len(b) == len(fib) and ev.accepts(node.top, env, a) and ev.accepts(node.bottom, env, b):
            return a, b
        return UNDEFINED, UNDEFINED
    # empty parent: defined only when the decomposition is unique
    empty = frozenset()
    options = set()
    if ev.accepts(node.top, env, empty):
        options.update((empty, b) for b in itertools.islice(ev.members(node.bottom, env), 2))
    if ev.accepts(node.bottom, env, empty):
        options.update((a, empty) for a in itertools.islice(ev.members(node.top, env), 2))
    if len(options) == 1:
        return options.pop()
    return UNDEFINED, UNDEFINED


# ---------------------------------------------------------------------------
# Step 2


@dataclass
class Step2Result:
    sentence: StarSentence
    types: dict  # pack id -> TypeDenotation
    undefined: dict  # pack id -> reason

    def by_name(self) -> dict[str, TypeDenotation]:
        return {den.name: den for den in self.types.values()}


def step2_types(t: FiberTable, s: StarSentence, m: Model) -> Step2Result:
    order = pack_order(s)
    ps = list(order.packs)
    pid = {p: i + 1 for i, p in enumerate(ps)}
    envs = {p: env_vars(s, Leaf(p), order) for p in ps}
    types: dict[int, TypeDenotation] = {}
    carriers: dict[Pack, set] = {}
    undefined: dict[int, str] = {}

    def witness(p: Pack, full: Mapping) -> Witness:
        full = Assignment(full)
        return Witness(full.restrict(envs[p]), tuple((y, full[y]) for y in p.binding_vars))

    for p in ps:  # leaf order is a linear extension of the pack order
        k = pid[p]
        below = order.below(p)
        bad = [pid[q] for q in below if pid[q] in undefined]
        if bad:
            undefined[k] = f"depends on undefined T-type(s) {', '.join(ttype_name(s.id, b) for b in bad)}"
            continue
        node = Leaf(p)
        elements = []
        for env in t.envs(node):
            if not all(witness(q, env) in carriers[q] for q in below):
                continue
            fib = t.fiber(node, env)
            if fib is UNDEFINED:
                undefined[k] = f"parallel decomposition undefined at {value_key(env)}"
                break
            for own in sorted(fib, key=value_key):
                elements.append(witness(p, env | own))
        if k in undefined:
            continue
        carriers[p] = set(elements)
        params = tuple(tvar_name(s.id, pid[q]) for q in below)
        projections = {
            tvar_name(s.id, pid[q]): {w: witness(q, w.full) for w in elements} for q in below
        }
        types[k] = TypeDenotation(
            ttype_name(s.id, k),
            params,
            tuple(ttype_name(s.id, pid[q]) for q in below),
            tuple(elements),
            projections,
        )
    return Step2Result(s, types, undefined)


# ---------------------------------------------------------------------------
# Context extension and refresh


@dataclass(frozen=True)
class ExtendedContext:
    base: Context
    added: tuple[VarSpec, ...]
    dropped: tuple[str, ...]

    @property
    def context(self) -> Context:
        return Context(self.base.specs + self.added)


def extend_context(ctx: Context, s: StarSentence) -> ExtendedContext:
    # argument specs go, along with anything that depended on them
    dropped = set(s.args)
    for spec in ctx:
        if dropped & set(spec.type.index_vars):
            dropped.add(spec.var)
    base = Context(tuple(spec for spec in ctx if spec.var not in dropped))
    order = pack_order(s)
    ps = list(order.packs)
    added = []
    for i, p in enumerate(ps):
        below = [ps.index(q) + 1 for q in order.below(p)]
        t = TType(s.id, i + 1, tuple(tvar_name(s.id, j) for j in below), width=len(p.phrases))
        added.append(VarSpec(tvar_name(s.id, i + 1), t))
    check_context(base.specs + tuple(added))
    return ExtendedContext(base, tuple(added), tuple(v for v in ctx.vars if v in dropped))


def _require_known(ctx: Context, t: TypeExpr, m: Optional[Model]) -> None:
    if isinstance(t, SigmaType):
        _require_known(ctx, t.bound_type, m)
        _require_known(ctx, t.body, m)
        return
    if m is not None and t.name not in m.types:
        raise DynamicsError("UnknownType", f"type {t.name} is not in scope")


def refresh(
    ctx: Union[Context, ExtendedContext], directives: Iterable, m: Optional[Model] = None
) -> Context:
    if isinstance(ctx, ExtendedContext):
        ctx = ctx.context
    for d in directives:
        if isinstance(d, Weaken):
            _require_known(ctx, d.spec.type, m)
            ctx = ctx.extend(d.spec)
        elif isinstance(d, SigmaRefresh):
            if isinstance(d.type, PiType):
                raise DynamicsError("PiNotInterpreted", f"Pi-types cannot be interpreted: {d.type}")
            _require_known(ctx, d.type, m)
            ctx = ctx.extend(VarSpec(d.var, d.type))
            if m is not None:
                m.denotation(d.type)
        else:
            raise DynamicsError("UnknownType", f"unsupported refresh directive {d!r}")
    return ctx


# ---------------------------------------------------------------------------
# Serialisation


def encode_value(v):
    if isinstance(v, str):
        return v
    if isinstance(v, Witness):
        return {k: encode_value(x) for k, x in v.full.items()}
    if isinstance(v, SigmaPair):
        return {"fst": encode_value(v.fst), "snd": encode_value(v.snd)}
    raise TypeError(v)


def _sort_key(x) -> str:
    return json.dumps(x, sort_keys=True)


def encode_type(den: TypeDenotation) -> dict:
    fibers = []
    for parents, elems in den.fibers().items():
        fibers.append(
            {
                "over": {p: encode_value(v) for p, v in zip(den.params, parents)},
                "elements": sorted((encode_value(e) for e in elems), key=_sort_key),
            }
        )
    return {
        "params": list(den.params),
        "paramTypes": list(den.param_types),
        "carrier": sorted((encode_value(e) for e in den.carrier), key=_sort_key),
        "fibers": sorted(fibers, key=_sort_key),
    }


# ---------------------------------------------------------------------------
# Stories


@dataclass
class StepReport:
    index: int
    kind: str
    line: Optional[int] = None
    id: Optional[str] = None
    text: str = ""
    context: list = field(default_factory=list)
    new_types: dict = field(default_factory=dict)  # name -> TypeDenotation
    undefined_types: dict = field(default_factory=dict)  # name -> reason
    truth: Optional[bool] = None
    is_sentence: Optional[bool] = None
    extended_from_false: bool = False
    expected: Optional[bool] = None
    passed: Optional[bool] = None

    def to_json(self) -> dict:
        out = {"index": self.index, "kind": self.kind, "line": self.line, "text": self.text, "context": self.context}
        if self.kind == "sentence":
            out.update(
                id=self.id,
                sentence=self.is_sentence,
                truth=self.truth,
                extendedFromFalse=self.extended_from_false,
                newTypes={n: encode_type(d) for n, d in sorted(self.new_types.items())},
                undefinedTypes=dict(sorted(self.undefined_types.items())),
            )
        if self.kind == "expect":
            out.update(id=self.id, expected=self.expected, passed=self.passed)
        return out


@dataclass
class StoryReport:
    steps: list = field(default_factory=list)
    error: Optional[Diagnostic] = None
    context: Context = field(default_factory=Context)
    model: Optional[Model] = None
    truths: dict = field(default_factory=dict)
    sentences: dict = field(default_factory=dict)  # id -> StarSentence
    halted_on_expectation: bool = False

    @property
    def expectations(self) -> list[StepReport]:
        return [r for r in self.steps if r.kind == "expect"]

    @property
    def expectations_passed(self) -> bool:
        return all(r.passed for r in self.expectations)

    @property
    def ok(self) -> bool:
        return self.error is None and self.expectations_passed

    def to_json(self) -> dict:
        return {
            "schemaVersion": 1,
            "ok": self.ok,
            "error": None
            if self.error is None
            else {"code": self.error.code, "message": self.error.message, "line": getattr(self.error.span, "start_line", None)},
            "steps": [r.to_json() for r in self.steps],
            "finalContext": [str(s) for s in self.context],
        }

    def dump(self) -> dict:
        extended = []
        for r in self.steps:
            if r.kind != "sentence":
                continue
            extended.append(
                {
                    "sentence": r.id,
                    "context": r.context,
                    "types": {n: encode_type(d) for n, d in sorted(r.new_types.items())},
                    "undefinedTypes": dict(sorted(r.undefined_types.items())),
                }
            )
        return {"schemaVersion": 1, "extendedContexts": extended}


class _Resolver:
    """Maps type names written in a script to T-types created earlier."""

    def __init__(self):
        self.ttypes: dict[str, TType] = {}

    def type(self, t: TypeExpr) -> TypeExpr:
        if isinstance(t, SigmaType):
            return type(t)(t.bound_var, self.type(t.bound_type), self.type(t.body))
        if isinstance(t, (BaseType, DepType)) and t.name in self.ttypes:
            proto = self.ttypes[t.name]
            return TType(proto.sentence_id, proto.pack_id, t.index_vars, proto.width)
        return t

    def spec(self, s: VarSpec) -> VarSpec:
        return VarSpec(s.var, self.type(s.type))

    def chain(self, ch: PreChain) -> PreChain:
        if isinstance(ch, Leaf):
            return Leaf(Pack(tuple(QuantifierPhrase(q.quantifier, q.var, self.type(q.type)) for q in ch.pack.phrases)))
        if isinstance(ch, Seq):
            return Seq(self.chain(ch.left), self.chain(ch.right))
        return Par(self.chain(ch.top), self.chain(ch.bottom))


def split_dummy(ch: PreChain) -> tuple[Optional[Pack], PreChain]:
    """Detach a written dummy pack from the front of a chain."""

    def has_dummy(node):
        return any(isinstance(n, Leaf) and n.pack.is_dummy for n in subchains(node))

    if not has_dummy(ch):
        return None, ch
    if isinstance(ch, Seq):
        if isinstance(ch.left, Leaf) and ch.left.pack.is_dummy and not has_dummy(ch.right):
            return ch.left.pack, ch.right
        if isinstance(ch.left, Seq) and not has_dummy(ch.right):
            dummy, rest = split_dummy(ch.left)
            return dummy, Seq(rest, ch.right)
    raise FormationError("DummyPackMismatch", "dummy phrases may only form the first pack of a chain")


def _known_type_names(t: TypeExpr) -> list[str]:
    if isinstance(t, SigmaType):
        return _known_type_names(t.bound_type) + _known_type_names(t.body)
    return [t.name]


def run_story(
    steps: Sequence[DiscourseStep], m: Model, fail_fast: bool = False, trace: bool = False
) -> StoryReport:
    report = StoryReport(model=m)
    ctx = Context()
    model = m
    resolve = _Resolver()
    undefined: dict[str, str] = {}

    def check_types(specs):
        for spec in specs:
            for name in _known_type_names(spec.type):
                if name in undefined:
                    raise DynamicsError("UndefinedFiber", f"{spec.var}:{spec.type} uses {name}, which is undefined: {undefined[name]}")
                if name not in model.types:
                    raise DynamicsError("UnknownType", f"type {name} is not in scope")

    for i, step in enumerate(steps):
        line = getattr(step.span, "start_line", None)
        rep = StepReport(i, type(step).__name__.replace("Step", "").lower(), line, text=str(step))
        try:
            if isinstance(step, ContextStep):
                specs = [resolve.spec(s) for s in step.specs]
                check_types(specs)
                ctx = ctx.extend(*specs)
            elif isinstance(step, RefreshStep):
                d = step.directive
                if isinstance(d, Weaken):
                    d = Weaken(resolve.spec(d.spec))
                    check_types([d.spec])
                else:
                    d = SigmaRefresh(d.var, resolve.type(d.type))
                    if not isinstance(d.type, PiType):
                        check_types([VarSpec(d.var, d.type)])
                ctx = refresh(ctx, [d], model)
            elif isinstance(step, SentenceStep):
                if step.id in report.sentences:
                    raise DynamicsError("DuplicateDeclaration", f"sentence id {step.id} used twice")
                rep.id = step.id
                dummy, chain = split_dummy(resolve.chain(step.chain))
                arity = model.predicate(step.predicate).arity
                s = classify(ctx, chain, step.predicate, step.args, arity, step.id, dummy)
                used = Context(tuple(ctx.closure(s.args)))
                check_types(used.specs)
                require_valid(model, used)
                ev = Evaluator(model, trace)
                truth = evaluate(s, model, trace) if s.is_sentence else None
                table = step1_fibers(s, model, ev)
                res = step2_types(table, s, model)
                ext = extend_context(ctx, s)
                new = res.by_name()
                for k, reason in res.undefined.items():
                    undefined[ttype_name(s.id, k)] = reason
                for spec in ext.added:
                    resolve.ttypes[spec.type.name] = spec.type
                model = model.with_types(new)
                ctx = ext.context
                report.sentences[s.id] = s
                report.truths[s.id] = truth
                rep.truth, rep.is_sentence = truth, s.is_sentence
                rep.extended_from_false = truth is False
                rep.new_types = new
                rep.undefined_types = {ttype_name(s.id, k): r for k, r in res.undefined.items()}
            elif isinstance(step, ExpectStep):
                rep.id, rep.expected = step.id, step.value
                if step.id not in report.sentences:
                    raise DynamicsError("UnknownSentence", f"no sentence named {step.id}")
                truth = report.truths[step.id]
                if truth is None:
                    raise DynamicsError("NotEvaluated", f"{step.id} is a *-sentence and has no truth value")
                rep.passed = truth == step.value
            else:
                raise DynamicsError("UnknownDirective", f"unknown step {step!r}")
        except DTGQError as exc:
            report.error = Diagnostic("error", exc.code, exc.message, exc.span or step.span)
            rep.context = [str(s) for s in ctx]
            report.steps.append(rep)
            break
        rep.context = [str(s) for s in ctx]
        report.steps.append(rep)
        if rep.passed is False and fail_fast:
            report.halted_on_expectation = True
            break
    report.context = ctx
    report.model = model
    return report
