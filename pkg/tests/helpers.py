"""Small builders shared by the test modules."""

from __future__ import annotations

from dtgq.dynamics import run_story
from dtgq.model import Witness, base_type, make_model
from dtgq.parser import parse_discourse


def two_sorted(X, Y, rels: dict, xname="X", yname="Y", xvar="x", yvar="y", **config):
    """Model with base types X, Y and binary predicates over them."""
    types = [base_type(xname, X), base_type(yname, Y)]
    preds = {n: ([(xvar, xname), (yvar, yname)], sorted(r)) for n, r in rels.items()}
    return make_model(types, preds, **config)


def story(model, script: str, **kw):
    return run_story(parse_discourse(script), model, **kw)


def own_values(elements, var=None):
    """Flatten T-type elements (Witnesses) to tuples of their own coordinates."""
    out = set()
    for w in elements:
        vals = tuple(_atom(v) for _, v in w.own)
        out.add(vals if len(vals) > 1 else vals[0])
    return out


def full_values(elements, order):
    return {tuple(_atom(w.full[v]) for v in order) for w in elements}


def _atom(v):
    while isinstance(v, Witness):
        (_, v), = v.own
    return v
