"""Finite interpretations: carriers, projections, fibers, parameter spaces,
Sigma-types, predicate extensions and quantifier denotations.

A `Model` plays the role of the dependence diagram. Each type name maps to a
`TypeDenotation` whose projections are keyed by the type's formal
parameters; a use ``D(x)`` in a context binds parameters positionally.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence, Union

from .errors import Diagnostic, EvaluationError, FormationError, ModelError
from .syntax import (
    BaseType,
    Context,
    DepType,
    PiType,
    SigmaType,
    TType,
    TypeExpr,
    VarSpec,
    check_context,
    make_type,
)

# ---------------------------------------------------------------------------
# Values


class Assignment(Mapping):
    """Immutable map from variable names to values."""

    __slots__ = ("_d", "_items", "_hash")

    def __init__(self, items: Union[Mapping, Iterable[tuple[str, Any]]] = ()):
        d = dict(items)
        self._d = d
        self._items = tuple(sorted(d.items()))  # keys are unique, so only keys compare
        self._hash = hash(self._items)

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self):
        return (k for k, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Assignment):
            return self._hash == other._hash and self._items == other._items
        return isinstance(other, Mapping) and dict(self._items) == dict(other)

    @classmethod
    def _of(cls, d: dict) -> "Assignment":
        a = cls.__new__(cls)
        a._d = d
        a._items = tuple(sorted(d.items()))
        a._hash = hash(a._items)
        return a

    def restrict(self, variables: Iterable[str]) -> "Assignment":
        d = self._d
        sub = {v: d[v] for v in variables if v in d}
        if len(sub) == len(d):
            return self
        return Assignment._of(sub)

    def __or__(self, other: Mapping) -> "Assignment":
        if not other:
            return self
        merged = dict(self._d)
        merged.update(other)
        return Assignment._of(merged)

    def __repr__(self):
        return "{" + ", ".join(f"{k}={v!r}" for k, v in self._items) + "}"


EMPTY = Assignment()


@dataclass(frozen=True)
class Witness:
    """Element of a T-type: an environment tuple plus the pack's own coordinates."""

    env: Assignment
    own: tuple  # ((var, value), ...) in phrase order

    @property
    def full(self) -> Assignment:
        return self.env | dict(self.own)

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.full.items())
        return f"<{inner}>"


@dataclass(frozen=True)
class SigmaPair:
    fst: Any
    snd: Any

    def __repr__(self):
        return f"({self.fst!r}, {self.snd!r})"


def flatten(value) -> tuple[str, ...]:
    """Base coordinates of a value; predicates are applied to these."""
    if isinstance(value, str):
        return (value,)
    if isinstance(value, Witness):
        return tuple(a for _, v in value.own for a in flatten(v))
    if isinstance(value, SigmaPair):
        return flatten(value.snd)
    raise TypeError(f"not a model value: {value!r}")


def value_key(value) -> str:
    """Total order on values, used for deterministic output."""
    if isinstance(value, str):
        return value
    if isinstance(value, Witness):
        return "<" + ",".join(f"{k}={value_key(v)}" for k, v in value.full.items()) + ">"
    if isinstance(value, SigmaPair):
        return f"({value_key(value.fst)},{value_key(value.snd)})"
    if isinstance(value, Mapping):
        return "{" + ",".join(f"{k}={value_key(v)}" for k, v in sorted(value.items())) + "}"
    return repr(value)


# ---------------------------------------------------------------------------
# Denotations


@dataclass(frozen=True)
class TypeDenotation:
    name: str
    params: tuple[str, ...] = ()
    param_types: tuple[Optional[str], ...] = ()
    carrier: tuple = ()
    projections: Mapping = field(default_factory=dict)  # param -> {element: parent}

    @cached_property
    def _index(self) -> dict:
        index: dict[tuple, list] = {}
        for c in self.carrier:
            key = tuple(self.projections[p][c] for p in self.params)
            index.setdefault(key, []).append(c)
        return {k: tuple(v) for k, v in index.items()}

    def fiber_over(self, parents: tuple) -> tuple:
        return self._index.get(tuple(parents), ())

    def fibers(self) -> dict[tuple, tuple]:
        return dict(self._index)


@dataclass(frozen=True)
class PredicateDenotation:
    symbol: str
    sig: tuple[VarSpec, ...]
    tuples: frozenset  # of tuples of atom names

    @property
    def arity(self) -> int:
        return len(self.sig)

    def holds(self, values: Sequence) -> bool:
        flat = tuple(a for v in values for a in flatten(v))
        if len(flat) != self.arity:
            raise EvaluationError("ArityMismatch", f"{self.symbol} takes {self.arity} coordinates, got {len(flat)}")
        return flat in self.tuples


@dataclass(frozen=True)
class QuantifierDenotation:
    """Either a cardinality rule (|S|, |Z|) -> bool or a table Z -> family."""

    symbol: str
    rule: Optional[Callable[[int, int], bool]] = None
    table: Optional[Mapping] = None  # frozenset ground -> frozenset of frozensets

    def _check(self, candidate, ground):
        if not set(candidate) <= set(ground):
            raise EvaluationError("CandidateOutsideProduct", f"{self.symbol}: candidate is not a subset of its ground")

    def accepts(self, candidate: Iterable, ground: Iterable) -> bool:
        candidate, ground = frozenset(candidate), frozenset(ground)
        self._check(candidate, ground)
        if self.rule is not None:
            return self.rule(len(candidate), len(ground))
        family = self._family(ground)
        return candidate in family

    def _family(self, ground: frozenset):
        if ground not in self.table:
            raise EvaluationError(
                "PartialQuantifierOutsideDomain",
                f"{self.symbol} is not defined on {{{', '.join(sorted(map(value_key, ground)))}}}",
            )
        return self.table[ground]

    def members(self, ground: Iterable) -> Iterator[frozenset]:
        """Accepted subsets of `ground`."""
        ground = tuple(sorted(set(ground), key=value_key))
        if self.rule is None:
            yield from sorted(self._family(frozenset(ground)), key=lambda s: sorted(map(value_key, s)))
            return
        n = len(ground)
        for k in range(n + 1):
            if self.rule(k, n):
                for combo in itertools.combinations(ground, k):
                    yield frozenset(combo)

    def accepted_sizes(self, ground: Iterable) -> set[int]:
        ground = frozenset(ground)
        if self.rule is not None:
            n = len(ground)
            return {k for k in range(n + 1) if self.rule(k, n)}
        return {len(s) for s in self._family(ground)}


NUMERAL_WORDS = {
    w: i
    for i, w in enumerate(
        "zero one two three four five six seven eight nine ten eleven twelve thirteen fourteen "
        "fifteen sixteen seventeen eighteen nineteen twenty".split()
    )
}
_PARAM_Q = re.compile(r"^(atleast|exactly)\((\d+)\)$")


def builtin_quantifier(symbol: str, numerals: str = "exactly", most_on_empty: bool = False) -> QuantifierDenotation:
    word = symbol.lower()
    if word == "forall":
        return QuantifierDenotation(symbol, lambda s, z: s == z)
    if word == "exists":
        return QuantifierDenotation(symbol, lambda s, z: s > 0)
    if word == "no":
        return QuantifierDenotation(symbol, lambda s, z: s == 0)
    if word == "most":
        # strict majority; |Z| = 0 configurable
        return QuantifierDenotation(symbol, lambda s, z: 2 * s > z if z else most_on_empty)
    m = _PARAM_Q.match(symbol)
    if m:
        kind, k = m.group(1), int(m.group(2))
    elif symbol.lower() in NUMERAL_WORDS:
        kind, k = numerals, NUMERAL_WORDS[symbol.lower()]
    else:
        raise ModelError("UnknownQuantifier", f"unknown quantifier {symbol!r}")
    if kind == "atleast":
        return QuantifierDenotation(symbol, lambda s, z: s >= k)
    if kind == "exactly":
        return QuantifierDenotation(symbol, lambda s, z: s == k)
    raise ModelError("UnknownQuantifier", f"numerals mode must be 'exactly' or 'atleast', not {kind!r}")


def is_builtin_quantifier(symbol: str) -> bool:
    return symbol.lower() in {"forall", "exists", "no", "most"} or bool(_PARAM_Q.match(symbol)) or (
        symbol.lower() in NUMERAL_WORDS
    )


# ---------------------------------------------------------------------------
# The model


@dataclass(frozen=True)
class Model:
    types: Mapping[str, TypeDenotation] = field(default_factory=dict)
    predicates: Mapping[str, PredicateDenotation] = field(default_factory=dict)
    quantifiers: Mapping[str, QuantifierDenotation] = field(default_factory=dict)
    numerals: str = "exactly"
    most_on_empty: bool = False

    @cached_property
    def _sigma_cache(self) -> dict:
        return {}

    def with_types(self, extra: Mapping[str, TypeDenotation]) -> "Model":
        types = dict(self.types)
        types.update(extra)
        return Model(types, self.predicates, self.quantifiers, self.numerals, self.most_on_empty)

    def with_config(self, numerals: Optional[str] = None, most_on_empty: Optional[bool] = None) -> "Model":
        return Model(
            self.types,
            self.predicates,
            self.quantifiers,
            numerals or self.numerals,
            self.most_on_empty if most_on_empty is None else most_on_empty,
        )

    def denotation(self, t: TypeExpr) -> TypeDenotation:
        if isinstance(t, PiType):
            raise ModelError("PiNotInterpreted", f"Pi-types have no interpretation: {t}")
        if isinstance(t, SigmaType):
            cached = self._sigma_cache.get(t)
            if cached is None:
                cached = self._sigma_cache[t] = sigma_denotation(self, t)
            return cached
        try:
            return self.types[t.name]
        except KeyError:
            raise ModelError("MissingCarrier", f"type {t.name} has no carrier in the model") from None

    def project(self, t: TypeExpr, value, index_var: str):
        den = self.denotation(t)
        param = den.params[t.index_vars.index(index_var)]
        return den.projections[param][value]

    def fiber(self, t: TypeExpr, over: Mapping) -> tuple:
        den = self.denotation(t)
        missing = [x for x in t.index_vars if x not in over]
        if missing:
            raise ModelError("MissingIndexBinding", f"fiber of {t} needs values for {', '.join(missing)}")
        if len(den.params) != len(t.index_vars):
            raise ModelError("MissingProjection", f"{t} applied to {len(t.index_vars)} indices, model has {len(den.params)}")
        return den.fiber_over(tuple(over[x] for x in t.index_vars))

    def quantifier(self, symbol: str) -> QuantifierDenotation:
        if symbol in self.quantifiers:
            return self.quantifiers[symbol]
        return builtin_quantifier(symbol, self.numerals, self.most_on_empty)

    def predicate(self, name: str) -> PredicateDenotation:
        try:
            return self.predicates[name]
        except KeyError:
            raise ModelError("UnknownPredicate", f"predicate {name} is not interpreted") from None


def fiber(d: Model, dep_type: TypeExpr, over: Mapping) -> tuple:
    return d.fiber(dep_type, over)


def iter_parameter_space(d: Model, specs: Sequence[VarSpec], base: Mapping = EMPTY) -> Iterator[Assignment]:
    """Extensions of `base` to the variables of `specs`, compatible with every projection."""
    specs = list(specs)
    current = dict(base)

    def go(i):
        if i == len(specs):
            yield Assignment(current)
            return
        s = specs[i]
        for value in d.fiber(s.type, current):
            current[s.var] = value
            yield from go(i + 1)
        current.pop(s.var, None)

    yield from go(0)


def parameter_space(d: Model, ctx: Union[Context, Sequence[VarSpec]]) -> list[Assignment]:
    specs = ctx.specs if isinstance(ctx, Context) else ctx
    return list(iter_parameter_space(d, specs))


def in_parameter_space(d: Model, specs: Sequence[VarSpec], a: Mapping) -> bool:
    for s in specs:
        if s.var not in a:
            return False
        try:
            if a[s.var] not in d.fiber(s.type, a):
                return False
        except ModelError:
            return False
    return True


def sigma_denotation(d: Model, s: SigmaType) -> TypeDenotation:
    if isinstance(s, PiType):
        raise ModelError("PiNotInterpreted", f"Pi-types have no interpretation: {s}")
    try:
        ybar = d.denotation(s.bound_type)
        zden = d.denotation(s.body)
    except ModelError as exc:
        raise ModelError("UninterpretedComponent", f"{s}: {exc.message}") from None
    if len(zden.params) != len(s.body.index_vars):
        raise ModelError("MissingProjection", f"{s.body} does not match the arity of {zden.name}")
    formal = dict(zip(s.body.index_vars, zden.params))
    to_y = zden.projections[formal[s.bound_var]]
    ycarrier = set(ybar.carrier)
    carrier = tuple(SigmaPair(to_y[c], c) for c in zden.carrier if to_y[c] in ycarrier)
    residual = s.index_vars
    projections = {x: {p: zden.projections[formal[x]][p.snd] for p in carrier} for x in residual}
    ptypes = tuple(zden.param_types[zden.params.index(formal[x])] for x in residual)
    return TypeDenotation(str(s), residual, ptypes, carrier, projections)


# ---------------------------------------------------------------------------
# Diagram validation


def validate_diagram(d: Model, ctx: Context) -> list[Diagnostic]:
    """Carriers, projections, totality and commuting triangles for `ctx`."""
    out: list[Diagnostic] = []

    def err(code, msg):
        out.append(Diagnostic("error", code, msg))

    dens: dict[str, TypeDenotation] = {}
    for spec in ctx:
        try:
            dens[spec.var] = d.denotation(spec.type)
        except ModelError as exc:
            err(exc.code, f"{spec}: {exc.message}")
    for spec in ctx:
        den = dens.get(spec.var)
        if den is None:
            continue
        t = spec.type
        if len(den.params) != len(t.index_vars):
            err("MissingProjection", f"{spec}: {den.name} has {len(den.params)} projections, used with {len(t.index_vars)}")
            continue
        ok = True
        for param, ptype, x in zip(den.params, den.param_types, t.index_vars):
            proj = den.projections.get(param)
            if proj is None:
                err("MissingProjection", f"{spec}: no projection {den.name} -> {x}")
                ok = False
                continue
            xt = ctx.type_of(x)
            xname = getattr(xt, "name", None)
            if ptype is not None and xname is not None and ptype != xname:
                err("IndexTypeMismatch", f"{spec}: {x} has type {xname}, {den.name} expects {ptype}")
                ok = False
                continue
            target = set(dens[x].carrier) if x in dens else None
            for c in den.carrier:
                if c not in proj:
                    err("ProjectionNotTotal", f"{spec}: projection to {x} undefined on {value_key(c)}")
                    ok = False
                elif target is not None and proj[c] not in target:
                    err("ProjectionNotTotal", f"{spec}: {value_key(c)} projects outside the carrier of {x}")
                    ok = False
        if not ok:
            continue
        # pi_{Z,u} = pi_{Y,u} . pi_{Z,y} whenever y:Y(..u..) indexes z:Z(..y..u..)
        for y in t.index_vars:
            ydef = ctx.spec(y)
            if y not in dens:
                continue
            for u in ydef.type.index_vars:
                if u not in t.index_vars:
                    continue  # closure violation, reported by check_context
                for c in den.carrier:
                    try:
                        direct = d.project(t, c, u)
                        via = d.project(ydef.type, d.project(t, c, y), u)
                    except (KeyError, ValueError, IndexError):
                        break
                    if direct != via:
                        err(
                            "TriangleViolation",
                            f"{spec}: element {value_key(c)} projects to {value_key(direct)} on {u} "
                            f"but to {value_key(via)} through {y}",
                        )
    return out


def canonical_context(d: Model, type_name: str) -> Context:
    """The context ``p1:P1(..), ..., pn:Pn(..)`` of a declared type's parameters.

    A parameter whose type is itself dependent is indexed by the parameters of
    the same names.
    """
    den = d.types[type_name]
    specs = []
    for p, ptype in zip(den.params, den.param_types):
        pden = d.types.get(ptype)
        if pden is None:
            raise ModelError("MissingCarrier", f"{type_name}: parameter type {ptype} is not declared")
        missing = [q for q in pden.params if q not in den.params]
        if missing:
            raise ModelError(
                "DependencyClosureViolation",
                f"{type_name}: parameter {p}:{ptype} needs {', '.join(missing)} among the parameters",
            )
        specs.append(VarSpec(p, make_type(ptype, pden.params)))
    try:
        return check_context(specs)
    except FormationError as exc:
        raise ModelError(exc.code, f"{type_name}: {exc.message}") from None


def validate_model(d: Model) -> list[Diagnostic]:
    """Model-level checks: every declared type and predicate in its canonical context."""
    out: list[Diagnostic] = []
    for name, den in d.types.items():
        if not den.params:
            continue
        try:
            ctx = canonical_context(d, name)
            ctx = ctx.extend(VarSpec("_self", make_type(name, den.params)))
        except (ModelError, FormationError) as exc:
            out.append(exc.diagnostic)
            continue
        out.extend(validate_diagram(d, ctx))
    for pred in d.predicates.values():
        try:
            ctx = check_context(pred.sig)
        except FormationError as exc:
            out.append(Diagnostic("error", exc.code, f"predicate {pred.symbol}: {exc.message}"))
            continue
        diags = validate_diagram(d, ctx)
        out.extend(diags)
        if diags:
            continue
        for tup in sorted(pred.tuples):
            a = dict(zip((s.var for s in pred.sig), tup))
            if len(tup) != pred.arity or not in_parameter_space(d, pred.sig, a):
                out.append(
                    Diagnostic(
                        "error",
                        "PredicateTupleOutsideSpace",
                        f"{pred.symbol}({', '.join(tup)}) lies outside the parameter space of its signature",
                    )
                )
    # dedupe, keep order
    seen, uniq = set(), []
    for diag in out:
        if (diag.code, diag.message) not in seen:
            seen.add((diag.code, diag.message))
            uniq.append(diag)
    return uniq


def require_valid(d: Model, ctx: Context) -> None:
    diags = validate_diagram(d, ctx)
    if diags:
        raise ModelError(diags[0].code, diags[0].message, diagnostics=diags)


# ---------------------------------------------------------------------------
# Convenience constructors (used heavily by tests and scripts)


def base_type(name: str, atoms: Iterable[str]) -> TypeDenotation:
    atoms = tuple(atoms)
    if len(set(atoms)) != len(atoms):
        raise ModelError("DuplicateDeclaration", f"type {name} lists an atom twice")
    return TypeDenotation(name, (), (), atoms, {})


def dep_type(name: str, params: Sequence[tuple[str, str]], elems: Mapping[str, Sequence[str]]) -> TypeDenotation:
    """``dep_type("D", [("m", "M")], {"d1": ["m1"]})``"""
    names = tuple(p for p, _ in params)
    projections = {p: {e: parents[i] for e, parents in elems.items()} for i, p in enumerate(names)}
    return TypeDenotation(name, names, tuple(t for _, t in params), tuple(elems), projections)


def make_model(
    types: Iterable[TypeDenotation],
    predicates: Mapping[str, tuple[Sequence[tuple[str, Any]], Iterable[Sequence[str]]]] = {},
    **config,
) -> Model:
    """Build a model; predicates are given as ``name: (signature, tuples)``.

    A signature entry is ``(var, type_name)`` or ``(var, (type_name, [index vars]))``.
    """
    preds = {}
    for name, (sig, tuples) in predicates.items():
        specs = []
        for var, t in sig:
            if isinstance(t, str):
                specs.append(VarSpec(var, BaseType(t)))
            else:
                specs.append(VarSpec(var, make_type(t[0], t[1])))
        preds[name] = PredicateDenotation(name, tuple(specs), frozenset(tuple(x) for x in tuples))
    return Model({t.name: t for t in types}, preds, **config)
