"""Truth of sentences over a finite model.

Chain denotations are never materialised as families of sets. Instead every
node answers membership queries ``accepts(node, env, candidate)``, where
`env` assigns the node's environment and `candidate` is a set of
assignments over the node's binding variables.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from .errors import EvaluationError
from .model import (
    EMPTY,
    Assignment,
    Model,
    in_parameter_space,
    iter_parameter_space,
    require_valid,
    value_key,
)
from .syntax import (
    Context,
    Leaf,
    Pack,
    Par,
    PreChain,
    QuantifierPhrase,
    Seq,
    StarSentence,
    VarSpec,
    binding_vars,
    env_vars,
    phrases,
)

log = logging.getLogger("dtgq.semantics")

# Largest ground set whose subsets we are willing to enumerate.
ENUMERATION_LIMIT = 16


def _fmt(candidate) -> str:
    return "{" + ", ".join(sorted(value_key(c) for c in candidate)) + "}"


class Evaluator:
    """Membership oracle for chain denotations over one model.

    Memo tables live on the instance; create one per evaluation.
    """

    def __init__(self, model: Model, trace: bool = False):
        self.model = model
        self.trace = trace
        self._bv: dict = {}
        self._bvars: dict = {}
        self._fibers: dict = {}
        self._quants: dict = {}
        self._cuts: dict = {}

    def bvars(self, node: PreChain) -> tuple[str, ...]:
        r = self._bvars.get(node)
        if r is None:
            r = self._bvars[node] = binding_vars(node)
        return r

    def bv_set(self, node: PreChain, env: Assignment) -> frozenset:
        key = (node, env)
        hit = self._bv.get(key)
        if hit is None:
            specs = [VarSpec(q.var, q.type) for q in phrases(node)]
            ys = self.bvars(node)
            hit = frozenset(a.restrict(ys) for a in iter_parameter_space(self.model, specs, env))
            self._bv[key] = hit
        return hit

    def cut(self, r: Assignment, variables: tuple[str, ...]) -> Assignment:
        """`r.restrict(variables)`, memoised: the same tuples recur across candidates."""
        key = (r, variables)
        hit = self._cuts.get(key)
        if hit is None:
            hit = self._cuts[key] = r.restrict(variables)
        return hit

    # -- membership -------------------------------------------------------

    def accepts(self, node: PreChain, env: Assignment, candidate: frozenset) -> bool:
        if isinstance(node, Leaf):
            result = self._accepts_pack(node.pack, env, candidate)
        elif isinstance(node, Seq):
            result = self._accepts_seq(node, env, candidate)
        else:
            result = self._accepts_par(node, env, candidate)
        if self.trace:
            log.debug("%s @ %r : %s -> %s", node, env, _fmt(candidate), result)
        return result

    def _quantifier(self, symbol: str):
        q = self._quants.get(symbol)
        if q is None:
            q = self._quants[symbol] = self.model.quantifier(symbol)
        return q

    def _pack_fibers(self, pack: Pack, env: Assignment):
        if pack.is_dummy:
            raise EvaluationError("StarSentenceNotEvaluable", f"dummy pack {pack} has no quantificational force")
        key = (pack, env.restrict(pack.index_vars))
        hit = self._fibers.get(key)
        if hit is None:
            hit = self._fibers[key] = [
                (q, self._quantifier(q.quantifier), frozenset(self.model.fiber(q.type, env))) for q in pack.phrases
            ]
        return hit

    def _accepts_pack(self, pack: Pack, env: Assignment, candidate: frozenset) -> bool:
        parts = self._pack_fibers(pack, env)
        for r in candidate:
            if len(r) != len(parts) or any(q.var not in r or r[q.var] not in fib for q, _, fib in parts):
                raise EvaluationError("CandidateOutsideProduct", f"{r!r} is not in the product of the fibers of {pack}")
        return all(quant.accepts({r[q.var] for r in candidate}, fib) for q, quant, fib in parts)

    def _accepts_seq(self, node: Seq, env: Assignment, candidate: frozenset) -> bool:
        left_vars, right_vars = self.bvars(node.left), self.bvars(node.right)
        slices: dict[Assignment, set] = {}
        for r in candidate:
            slices.setdefault(self.cut(r, left_vars), set()).add(self.cut(r, right_vars))
        chosen = frozenset(
            b
            for b in self.bv_set(node.left, env)
            if self.accepts(node.right, env | b, frozenset(slices.get(b, ())))
        )
        return self.accepts(node.left, env, chosen)

    def _accepts_par(self, node: Par, env: Assignment, candidate: frozenset) -> bool:
        if not candidate:
            # the empty set is A x B with A or B empty
            empty = frozenset()
            return (self.accepts(node.top, env, empty) and self.count_members(node.bottom, env, 1) >= 1) or (
                self.accepts(node.bottom, env, empty) and self.count_members(node.top, env, 1) >= 1
            )
        a, b = self.rectangle_sides(node, candidate)
        if len(a) * len(b) != len(candidate):
            return False
        return self.accepts(node.top, env, a) and self.accepts(node.bottom, env, b)

    def rectangle_sides(self, node: Par, candidate: Iterable[Assignment]):
        tv, bv = self.bvars(node.top), self.bvars(node.bottom)
        return frozenset(self.cut(r, tv) for r in candidate), frozenset(self.cut(r, bv) for r in candidate)

    # -- family size queries ----------------------------------------------

    def count_members(self, node: PreChain, env: Assignment, limit: int) -> int:
        """Number of sets in the node's denotation, counted up to `limit`."""
        return sum(1 for _ in itertools.islice(self.members(node, env), limit))

    def members(self, node: PreChain, env: Assignment) -> Iterator[frozenset]:
        """Sets in the node's denotation.

        For packs only a prefix is produced: enough to tell zero, one, or
        several members apart, which is all the callers ask.
        """
        if isinstance(node, Leaf):
            yield from self._pack_members(node.pack, env)
            return
        ground = sorted(self.bv_set(node, env), key=value_key)
        if len(ground) > ENUMERATION_LIMIT:
            raise EvaluationError(
                "EnumerationLimit", f"{node} has {len(ground)} candidate tuples; refusing to enumerate subsets"
            )
        for k in range(len(ground) + 1):
            for combo in itertools.combinations(ground, k):
                cand = frozenset(combo)
                if self.accepts(node, env, cand):
                    yield cand

    def _pack_members(self, pack: Pack, env: Assignment) -> Iterator[frozenset]:
        parts = self._pack_fibers(pack, env)
        if all(quant.accepts((), fib) for _, quant, fib in parts):
            yield frozenset()
        # A nonempty member has nonempty accepted projections S_i. The product
        # of the S_i is one; if two S_i have two or more elements, a cyclic
        # cover of the S_i is a second, smaller one.
        options = [list(itertools.islice((s for s in quant.members(fib) if s), 2)) for _, quant, fib in parts]
        names = [q.var for q, _, _ in parts]
        for choice in itertools.product(*options):
            sides = [sorted(s, key=value_key) for s in choice]
            yield frozenset(Assignment(zip(names, vals)) for vals in itertools.product(*sides))
            if sum(1 for s in sides if len(s) >= 2) >= 2:
                width = max(len(s) for s in sides)
                yield frozenset(
                    Assignment(zip(names, (s[j % len(s)] for s in sides))) for j in range(width)
                )


# ---------------------------------------------------------------------------
# Spec-level API


@dataclass(frozen=True)
class BvSet:
    environment: Assignment
    tuples: frozenset


@dataclass(frozen=True)
class ChainDenotation:
    node: PreChain
    environment: Assignment
    model: Model

    def contains(self, candidate: Iterable) -> bool:
        cand = frozenset(c if isinstance(c, Assignment) else Assignment(c) for c in candidate)
        return Evaluator(self.model).accepts(self.node, self.environment, cand)

    __contains__ = contains


def _as_candidate(candidate: Iterable) -> frozenset:
    return frozenset(c if isinstance(c, Assignment) else Assignment(c) for c in candidate)


def check_env(s: StarSentence, sub: PreChain, env: Mapping, m: Model) -> Assignment:
    env = Assignment(env)
    want = env_vars(s, sub)
    specs = s.context.restrict(want)
    if set(env) != set(want) or not in_parameter_space(m, specs, env):
        raise EvaluationError("EnvOutsideParameterSpace", f"{env!r} is not a point of the environment of {sub}")
    return env


def bv_set(s: StarSentence, sub: PreChain, env: Mapping, m: Model) -> BvSet:
    env = check_env(s, sub, env, m)
    return BvSet(env, Evaluator(m).bv_set(sub, env))


def interpret_qp(qp: QuantifierPhrase, env: Mapping, m: Model) -> ChainDenotation:
    return ChainDenotation(Leaf(Pack((qp,))), Assignment(env), m)


def _check_inside(ev: Evaluator, node: PreChain, env: Assignment, cand: frozenset) -> None:
    if not cand <= ev.bv_set(node, env):
        raise EvaluationError("CandidateOutsideProduct", f"candidate is not contained in the binding set of {node}")


def interpret_pack(p: Pack, env: Mapping, m: Model, candidate: Iterable) -> bool:
    return Evaluator(m).accepts(Leaf(p), Assignment(env), _as_candidate(candidate))


def interpret_seq(node: Seq, env: Mapping, m: Model, candidate: Iterable, trace: bool = False) -> bool:
    ev, env, cand = Evaluator(m, trace), Assignment(env), _as_candidate(candidate)
    _check_inside(ev, node, env, cand)
    return ev.accepts(node, env, cand)


def interpret_par(node: Par, env: Mapping, m: Model, candidate: Iterable, trace: bool = False) -> bool:
    ev, env, cand = Evaluator(m, trace), Assignment(env), _as_candidate(candidate)
    _check_inside(ev, node, env, cand)
    return ev.accepts(node, env, cand)


def argument_context(s: StarSentence) -> Context:
    return Context(tuple(s.context.restrict(s.args)))


def predicate_extension(s: StarSentence, m: Model) -> frozenset:
    """The predicate's extension restricted to the arguments' parameter space."""
    ctx = argument_context(s)
    require_valid(m, ctx)
    pred = m.predicate(s.predicate)
    return frozenset(a for a in iter_parameter_space(m, ctx.specs) if pred.holds([a[z] for z in s.args]))


def evaluate(s: StarSentence, m: Model, trace: bool = False) -> bool:
    if not s.is_sentence:
        raise EvaluationError("StarSentenceNotEvaluable", f"{s} has a dummy pack and no truth value")
    ext = predicate_extension(s, m)
    return Evaluator(m, trace).accepts(s.chain, EMPTY, ext)
