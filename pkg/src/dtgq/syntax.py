"""Abstract syntax: types, contexts, quantifier phrases, packs, pre-chains and
*-sentences, together with the formation checks for each of them.

All values are immutable. Pre-chains are binary trees; `a | b | c` is
represented as ``Seq(Seq(a, b), c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import FormationError


def _ordered_union(groups: Iterable[Iterable[str]]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for group in groups:
        for v in group:
            seen.setdefault(v, None)
    return tuple(seen)


class _CachedHash:
    # Chains are hashed constantly as memo keys; the dataclass hash recurses.
    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self.__dataclass_fields__))
            object.__setattr__(self, "_hash", h)
        return h


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class BaseType:
    name: str

    @property
    def index_vars(self) -> tuple[str, ...]:
        return ()

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class DepType:
    name: str
    args: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(set(self.args)) != len(self.args):
            raise FormationError("DuplicateVariable", f"repeated index variable in {self}")

    @property
    def index_vars(self) -> tuple[str, ...]:
        return self.args

    def __str__(self):
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class TType:
    """Type generated by a *-sentence for one of its packs."""

    sentence_id: str
    pack_id: int
    args: tuple[str, ...] = ()
    width: int = 1

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(set(self.args)) != len(self.args):
            raise FormationError("DuplicateVariable", f"repeated index variable in {self}")

    @property
    def name(self) -> str:
        return ttype_name(self.sentence_id, self.pack_id)

    @property
    def index_vars(self) -> tuple[str, ...]:
        return self.args

    def __str__(self):
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class SigmaType:
    bound_var: str
    bound_type: "TypeExpr"
    body: "TypeExpr"

    def __post_init__(self):
        if self.bound_var not in self.body.index_vars:
            raise FormationError(
                "MalformedSigma", f"bound variable {self.bound_var} does not index the body {self.body}"
            )
        missing = [x for x in self.bound_type.index_vars if x not in self.body.index_vars]
        if missing:
            raise FormationError(
                "DependencyClosureViolation",
                f"body {self.body} must depend on {', '.join(missing)} (indices of {self.bound_type})",
            )

    # The declared type does not depend on the bound variable.
    @property
    def index_vars(self) -> tuple[str, ...]:
        return tuple(v for v in self.body.index_vars if v != self.bound_var)

    _keyword = "Sigma"

    def __str__(self):
        return f"{self._keyword} {self.bound_var}:{self.bound_type} . {self.body}"


@dataclass(frozen=True)
class PiType(SigmaType):
    _keyword = "Pi"


TypeExpr = Union[BaseType, DepType, TType, SigmaType, PiType]


def ttype_name(sentence_id: str, pack_id: int) -> str:
    return f"T_{sentence_id}_{pack_id}"


def tvar_name(sentence_id: str, pack_id: int) -> str:
    return f"t_{sentence_id}_{pack_id}"


def make_type(name: str, args: Sequence[str] = ()) -> TypeExpr:
    return DepType(name, tuple(args)) if args else BaseType(name)


def type_width(t: TypeExpr) -> int:
    """Number of base coordinates an element of `t` flattens to."""
    if isinstance(t, TType):
        return t.width
    if isinstance(t, SigmaType):
        return type_width(t.body)
    return 1


def type_name(t: TypeExpr) -> Optional[str]:
    return getattr(t, "name", None)


# ---------------------------------------------------------------------------
# Contexts


@dataclass(frozen=True)
class VarSpec:
    var: str
    type: TypeExpr

    def __post_init__(self):
        if self.var in self.type.index_vars:
            raise FormationError("SelfDependentType", f"{self.var} occurs in its own type {self.type}")

    def __str__(self):
        return f"{self.var}:{self.type}"


@dataclass(frozen=True)
class Context:
    specs: tuple[VarSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))

    @property
    def vars(self) -> tuple[str, ...]:
        return tuple(s.var for s in self.specs)

    def __contains__(self, var: str) -> bool:
        return any(s.var == var for s in self.specs)

    def __iter__(self) -> Iterator[VarSpec]:
        return iter(self.specs)

    def __len__(self):
        return len(self.specs)

    def spec(self, var: str) -> VarSpec:
        for s in self.specs:
            if s.var == var:
                return s
        raise FormationError("SpecNotInContext", f"{var} is not declared in the context")

    def type_of(self, var: str) -> TypeExpr:
        return self.spec(var).type

    def restrict(self, variables: Iterable[str]) -> list[VarSpec]:
        """Specs of `variables` in context order."""
        wanted = set(variables)
        return [s for s in self.specs if s.var in wanted]

    def closure(self, variables: Iterable[str]) -> list[VarSpec]:
        """Least subcontext containing the given variables."""
        wanted = set(variables)
        for s in reversed(self.specs):
            if s.var in wanted:
                wanted.update(s.type.index_vars)
        return self.restrict(wanted)

    def extend(self, *specs: VarSpec) -> "Context":
        return check_context(self.specs + tuple(specs))

    def __str__(self):
        return ", ".join(map(str, self.specs))


def check_context(raw: Iterable[VarSpec]) -> Context:
    declared: dict[str, VarSpec] = {}
    for spec in raw:
        if spec.var in declared:
            raise FormationError("DuplicateVariable", f"{spec.var} declared twice")
        t = spec.type
        if isinstance(t, SigmaType):
            # Y(x) lives in the context; Z(y) lives in the context extended by y.
            local = dict(declared)
            local[t.bound_var] = VarSpec(t.bound_var, t.bound_type)
            _check_indices(t.bound_var, t.bound_type, declared)
            _check_indices(spec.var, t.body, local)
        else:
            _check_indices(spec.var, t, declared)
        declared[spec.var] = spec
    return Context(tuple(declared.values()))


def _check_indices(var: str, t: TypeExpr, declared: dict[str, VarSpec]) -> None:
    idx = set(t.index_vars)
    for x in t.index_vars:
        if x not in declared:
            raise FormationError("UndeclaredIndexVariable", f"{x} (indexing {var}:{t}) is not declared")
    for x in t.index_vars:
        inherited = set(declared[x].type.index_vars) - idx
        if inherited:
            raise FormationError(
                "DependencyClosureViolation",
                f"{var}:{t} depends on {x} but not on {', '.join(sorted(inherited))}",
            )


def is_convex(subset: Sequence[VarSpec], ctx: Context) -> bool:
    for s in subset:
        if s not in ctx.specs:
            raise FormationError("SpecNotInContext", f"{s} is not a specification of the context")
    hull = ctx.closure(s.var for s in subset)
    rest = [s for s in hull if s not in subset]
    try:
        check_context(rest)
    except FormationError:
        return False
    return True


# ---------------------------------------------------------------------------
# Quantifier phrases, packs, pre-chains


@dataclass(frozen=True)
class QuantifierPhrase:
    quantifier: Optional[str]  # None marks a dummy phrase
    var: str
    type: TypeExpr

    def __post_init__(self):
        if self.var in self.type.index_vars:
            raise FormationError("BindingIndexClash", f"{self.var} binds and indexes in {self}")

    @property
    def is_dummy(self) -> bool:
        return self.quantifier is None

    def __str__(self):
        t = f"({self.type})" if isinstance(self.type, SigmaType) else str(self.type)
        if self.quantifier is None:
            return f"{self.var}:{t}"
        return f"{self.quantifier} {self.var}:{t}"


@dataclass(frozen=True)
class Pack(_CachedHash):
    phrases: tuple[QuantifierPhrase, ...]
    __hash__ = _CachedHash.__hash__

    def __post_init__(self):
        object.__setattr__(self, "phrases", tuple(self.phrases))

    @property
    def binding_vars(self) -> tuple[str, ...]:
        return tuple(p.var for p in self.phrases)

    @property
    def index_vars(self) -> tuple[str, ...]:
        r = self.__dict__.get("_index_vars")
        if r is None:
            r = _ordered_union(p.type.index_vars for p in self.phrases)
            object.__setattr__(self, "_index_vars", r)
        return r

    @property
    def is_dummy(self) -> bool:
        return all(p.is_dummy for p in self.phrases)

    def __str__(self):
        if len(self.phrases) == 1:
            return str(self.phrases[0])
        return f"pack({', '.join(map(str, self.phrases))})"


def form_pack(phrases: Sequence[QuantifierPhrase]) -> Pack:
    phrases = tuple(phrases)
    if not phrases:
        raise FormationError("SyntaxError", "a pack needs at least one quantifier phrase")
    pack = Pack(phrases)
    ys = pack.binding_vars
    if len(set(ys)) != len(ys):
        dup = sorted({y for y in ys if ys.count(y) > 1})
        raise FormationError("DuplicateBindingVariable", f"{', '.join(dup)} bound twice in {pack}")
    clash = set(ys) & set(pack.index_vars)
    if clash:
        raise FormationError("BindingIndexClash", f"{', '.join(sorted(clash))} both bind and index in {pack}")
    dummies = [p.is_dummy for p in phrases]
    if any(dummies):
        if not all(dummies):
            raise FormationError("DummyPackNotConstant", f"{pack} mixes dummy and quantified phrases")
        for p in phrases:
            if p.type.index_vars:
                raise FormationError("DummyPackNotConstant", f"dummy variable {p.var} has dependent type {p.type}")
    return pack


@dataclass(frozen=True)
class Leaf(_CachedHash):
    pack: Pack
    __hash__ = _CachedHash.__hash__

    def __str__(self):
        return str(self.pack)


@dataclass(frozen=True)
class Seq(_CachedHash):
    left: "PreChain"
    right: "PreChain"
    __hash__ = _CachedHash.__hash__

    def __str__(self):
        r = f"({self.right})" if isinstance(self.right, Seq) else str(self.right)
        return f"{self.left} | {r}"


@dataclass(frozen=True)
class Par(_CachedHash):
    top: "PreChain"
    bottom: "PreChain"
    __hash__ = _CachedHash.__hash__

    def __str__(self):
        return f"par({self.top} ; {self.bottom})"


PreChain = Union[Leaf, Seq, Par]


def children(ch: PreChain) -> tuple[PreChain, ...]:
    if isinstance(ch, Seq):
        return (ch.left, ch.right)
    if isinstance(ch, Par):
        return (ch.top, ch.bottom)
    return ()


def packs(ch: PreChain) -> list[Pack]:
    if isinstance(ch, Leaf):
        return [ch.pack]
    return [p for c in children(ch) for p in packs(c)]


def phrases(ch: PreChain) -> list[QuantifierPhrase]:
    """Phrases in an order compatible with their dependencies."""
    return [q for p in packs(ch) for q in p.phrases]


def subchains(ch: PreChain) -> Iterator[PreChain]:
    yield ch
    for c in children(ch):
        yield from subchains(c)


def binding_vars(ch: PreChain) -> tuple[str, ...]:
    return tuple(v for p in packs(ch) for v in p.binding_vars)


def index_vars(ch: PreChain) -> tuple[str, ...]:
    return _ordered_union(p.index_vars for p in packs(ch))


def phrase_type(ch: PreChain, var: str) -> TypeExpr:
    for q in phrases(ch):
        if q.var == var:
            return q.type
    raise KeyError(var)


def leaf(*qps: QuantifierPhrase) -> Leaf:
    return Leaf(form_pack(qps))


def seq_compose(left: PreChain, right: PreChain, ctx: Optional[Context] = None) -> Seq:
    y1, x1 = set(binding_vars(left)), set(index_vars(left))
    y2, x2 = set(binding_vars(right)), set(index_vars(right))
    clash = y2 & (y1 | x1)
    if clash:
        raise FormationError("VariableClash", f"{', '.join(sorted(clash))} rebound in {right}")
    node = Seq(left, right)
    if ctx is not None:
        free = (x1 | x2) - (y1 | y2)
        missing = [v for v in sorted(free) if v not in ctx]
        if missing:
            raise FormationError("FreeIndexNotInContext", f"{', '.join(missing)} free in {node} but undeclared")
        try:
            check_context(ctx.restrict(free))
        except FormationError as exc:
            raise FormationError(
                "FreeIndexNotInContext", f"free variables of {node} do not form a subcontext: {exc.message}"
            ) from None
    return node


def par_compose(top: PreChain, bottom: PreChain) -> Par:
    y1, x1 = set(binding_vars(top)), set(index_vars(top))
    y2, x2 = set(binding_vars(bottom)), set(index_vars(bottom))
    clash = (y2 & (y1 | x1)) | (y1 & (y2 | x2))
    if clash:
        raise FormationError("VariableClash", f"{', '.join(sorted(clash))} shared across par({top} ; {bottom})")
    return Par(top, bottom)


def check_prechain(ch: PreChain, ctx: Optional[Context] = None) -> PreChain:
    """Re-run every formation rule bottom-up; returns `ch` unchanged."""
    if isinstance(ch, Leaf):
        form_pack(ch.pack.phrases)
        if ctx is not None:
            for q in ch.pack.phrases:
                if q.var not in ctx:
                    raise FormationError("UndeclaredVariable", f"binding variable {q.var} is not declared")
                declared = ctx.type_of(q.var)
                if declared != q.type:
                    raise FormationError(
                        "TypeMismatch", f"{q.var} is declared as {declared} but quantified as {q.type}"
                    )
        return ch
    for c in children(ch):
        check_prechain(c, ctx)
    if isinstance(ch, Seq):
        seq_compose(ch.left, ch.right, ctx)
    else:
        par_compose(ch.top, ch.bottom)
    return ch


def is_chain(ch: PreChain) -> bool:
    return set(index_vars(ch)) <= set(binding_vars(ch))


# ---------------------------------------------------------------------------
# Formulas and *-sentences


@dataclass(frozen=True)
class StarSentence:
    context: Context
    chain: PreChain
    predicate: str
    args: tuple[str, ...]
    dummy: Optional[Pack] = None
    id: str = "phi"

    @property
    def is_sentence(self) -> bool:
        return self.dummy is None and is_chain(self.chain)

    @property
    def star_chain(self) -> PreChain:
        if self.dummy is None:
            return self.chain
        return Seq(Leaf(self.dummy), self.chain)

    @property
    def packs(self) -> list[Pack]:
        """Packs of the extended chain; index i is pack number i + 1."""
        return packs(self.star_chain)

    def pack_id(self, pack: Pack) -> int:
        return self.packs.index(pack) + 1

    def __str__(self):
        head = f"{self.dummy} | " if self.dummy else ""
        chain = f"({self.chain})" if self.dummy and isinstance(self.chain, Seq) else str(self.chain)
        return f"{head}{chain} . {self.predicate}({', '.join(self.args)})"


def classify(
    ctx: Context,
    chain: PreChain,
    pred: str,
    args: Sequence[str],
    arity: Optional[int] = None,
    sentence_id: str = "phi",
    explicit_dummy: Optional[Pack] = None,
) -> StarSentence:
    """Build a sentence or *-sentence, or raise FormationError.

    `arity` counts base coordinates: an argument typed by a T-type over an
    n-phrase pack contributes n.
    """
    args = tuple(args)
    check_prechain(chain, ctx)
    if len(set(args)) != len(args):
        raise FormationError("DuplicateVariable", f"repeated argument in {pred}({', '.join(args)})")
    for z in args:
        if z not in ctx:
            raise FormationError("UndeclaredVariable", f"argument {z} of {pred} is not declared")
    dangling = set(index_vars(chain)) - set(binding_vars(chain)) - set(args)
    if dangling:
        raise FormationError("FreeIndexVariable", f"index variables {', '.join(sorted(dangling))} are unbound")
    check_context(ctx.restrict(args))
    if arity is not None:
        width = sum(type_width(ctx.type_of(z)) for z in args)
        if width != arity:
            raise FormationError("ArityMismatch", f"{pred} takes {arity} coordinates, got {width}")

    ys = binding_vars(chain)
    unbound_binders = [y for y in ys if y not in args]
    if unbound_binders:
        raise FormationError(
            "BindingNotFinal", f"binding variables {', '.join(unbound_binders)} are not arguments of {pred}"
        )
    free = [s for s in ctx.restrict(args) if s.var not in ys]
    for s in free:
        if s.type.index_vars:
            raise FormationError("NonConstantFreeVariable", f"free argument {s} has a dependent type")

    dummy = form_pack([QuantifierPhrase(None, s.var, s.type) for s in free]) if free else None
    if explicit_dummy is not None:
        if dummy is None or set(explicit_dummy.binding_vars) != set(dummy.binding_vars):
            raise FormationError(
                "DummyPackMismatch",
                f"written dummy pack {explicit_dummy} does not match the free arguments "
                f"{', '.join(s.var for s in free) or '(none)'}",
            )
    return StarSentence(ctx, chain, pred, args, dummy, sentence_id)


# ---------------------------------------------------------------------------
# Pack order and environments


@dataclass(frozen=True)
class PackOrder:
    packs: tuple[Pack, ...]
    pairs: frozenset  # (i, j) with packs[i] < packs[j], 0-based

    def lt(self, a: Pack, b: Pack) -> bool:
        return (self.packs.index(a), self.packs.index(b)) in self.pairs

    def below(self, p: Pack) -> list[Pack]:
        j = self.packs.index(p)
        return [q for i, q in enumerate(self.packs) if (i, j) in self.pairs]

    def comparable(self, a: Pack, b: Pack) -> bool:
        return a == b or self.lt(a, b) or self.lt(b, a)


def pack_order(s: StarSentence) -> PackOrder:
    ps = s.packs
    pos = {p: i for i, p in enumerate(ps)}
    pairs = set()
    for node in subchains(s.star_chain):
        if isinstance(node, Seq):
            for a in packs(node.left):
                for b in packs(node.right):
                    pairs.add((pos[a], pos[b]))
    return PackOrder(tuple(ps), frozenset(pairs))


def _is_subtree(sub: PreChain, ch: PreChain) -> bool:
    return any(node == sub for node in subchains(ch))


def env_vars(s: StarSentence, sub: PreChain, order: Optional[PackOrder] = None) -> tuple[str, ...]:
    if not _is_subtree(sub, s.star_chain):
        raise FormationError("NotASubchain", f"{sub} is not a sub-pre-chain of {s}")
    order = order or pack_order(s)
    inside = packs(sub)
    earlier = [p for p in order.packs if all(order.lt(p, q) for q in inside)]
    return tuple(v for p in earlier for v in p.binding_vars)


def env_phi(s: StarSentence, sub: PreChain) -> list[VarSpec]:
    """Specs of the binding variables of every pack below all packs of `sub`."""
    return s.context.restrict(env_vars(s, sub))


# ---------------------------------------------------------------------------
# Discourse steps and refresh directives


@dataclass(frozen=True)
class Weaken:
    spec: VarSpec

    def __str__(self):
        return f"weaken {self.spec}"


@dataclass(frozen=True)
class SigmaRefresh:
    var: str
    type: SigmaType  # may also be a PiType, which refresh rejects

    def __str__(self):
        kind = "pi" if isinstance(self.type, PiType) else "sigma"
        return f"{kind} {self.var} = {self.type}"


Directive = Union[Weaken, SigmaRefresh]


@dataclass(frozen=True)
class ContextStep:
    specs: tuple[VarSpec, ...]
    span: object = field(default=None, compare=False)

    def __str__(self):
        return "context " + ", ".join(map(str, self.specs))


@dataclass(frozen=True)
class SentenceStep:
    id: str
    chain: PreChain
    predicate: str
    args: tuple[str, ...]
    span: object = field(default=None, compare=False)

    def __str__(self):
        return f"sentence {self.id}: {self.chain} . {self.predicate}({', '.join(self.args)})"


@dataclass(frozen=True)
class RefreshStep:
    directive: Directive
    span: object = field(default=None, compare=False)

    def __str__(self):
        return f"refresh {self.directive}"


@dataclass(frozen=True)
class ExpectStep:
    id: str
    value: bool
    span: object = field(default=None, compare=False)

    def __str__(self):
        return f"expect {self.id} {'true' if self.value else 'false'}"


DiscourseStep = Union[ContextStep, SentenceStep, RefreshStep, ExpectStep]
