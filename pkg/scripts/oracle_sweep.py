"""Compare the three polyadic constructions against brute-force families.

For every quantifier pair and a sample of relations over an n x m universe,
evaluate the iteration, cumulation and branching sentences and check them
against the explicit families in tests/oracles.py. Prints agreement counts
per construction and the wall time.

    python scripts/oracle_sweep.py --rows 3 --cols 3 --samples 1000 --seed 7
"""

import argparse
import itertools
import random
import sys
import time
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import oracles  # noqa: E402
from dtgq.model import base_type, make_model  # noqa: E402
from dtgq.semantics import evaluate  # noqa: E402
from dtgq.syntax import BaseType, Leaf, Pack, Par, QuantifierPhrase, Seq, VarSpec, check_context, classify  # noqa: E402


@dataclass(frozen=True)
class SweepConfig:
    rows: int = 3
    cols: int = 3
    samples: int = 1000
    seed: int = 0
    quantifiers: tuple = tuple(oracles.RULES)


def sentences(q1: str, q2: str):
    X, Y = BaseType("X"), BaseType("Y")
    a = QuantifierPhrase(q1, "x", X)
    b = QuantifierPhrase(q2, "y", Y)
    ctx = check_context([VarSpec("x", X), VarSpec("y", Y)])
    chains = {
        "iteration": Seq(Leaf(Pack((a,))), Leaf(Pack((b,)))),
        "cumulation": Leaf(Pack((a, b))),
        "branching": Par(Leaf(Pack((a,))), Leaf(Pack((b,)))),
    }
    return {k: classify(ctx, ch, "R", ["x", "y"], 2) for k, ch in chains.items()}


def sweep(cfg: SweepConfig) -> dict:
    rnd = random.Random(cfg.seed)
    xs = [f"a{i}" for i in range(cfg.rows)]
    ys = [f"b{j}" for j in range(cfg.cols)]
    cells = list(itertools.product(xs, ys))
    rels = [frozenset(c for c in cells if rnd.random() < 0.5) for _ in range(cfg.samples)]
    families = {
        "iteration": oracles.iteration_family,
        "cumulation": oracles.cumulation_family,
        "branching": oracles.branching_family,
    }
    agree = {k: 0 for k in families}
    total = 0
    for q1, q2 in itertools.product(cfg.quantifiers, repeat=2):
        fams = {k: f(q1, q2, xs, ys) for k, f in families.items()}
        sents = sentences(q1, q2)
        for rel in rels:
            m = make_model([base_type("X", xs), base_type("Y", ys)], {"R": ([("x", "X"), ("y", "Y")], sorted(rel))})
            total += 1
            for k in families:
                agree[k] += evaluate(sents[k], m) == (rel in fams[k])
    return {"total": total, **agree}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="oracle sweep")
    ap.add_argument("--rows", type=int, default=3)
    ap.add_argument("--cols", type=int, default=3)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args(argv)
    cfg = SweepConfig(ns.rows, ns.cols, ns.samples, ns.seed)
    t0 = time.perf_counter()
    res = sweep(cfg)
    dt = time.perf_counter() - t0
    n = res["total"]
    print(f"{cfg.rows}x{cfg.cols}, {cfg.samples} relations x {len(cfg.quantifiers) ** 2} quantifier pairs")
    for k in ("iteration", "cumulation", "branching"):
        print(f"  {k:11} {res[k]}/{n} agree")
    print(f"  {dt:.2f}s")
    return 0 if all(res[k] == n for k in ("iteration", "cumulation", "branching")) else 1


if __name__ == "__main__":
    sys.exit(main())
