"""How "most farmers who own a donkey beat it" moves with the farm population.

Builds models with `lone` farmers who each own one unbeaten donkey and one
farmer who owns `herd` donkeys and beats them all, then prints, per model,
the truth value from the T-type pipeline next to two direct counts: over
farmers and over (farmer, donkey) pairs. Only the farmer count should track
the pipeline.

    python scripts/proportion_sweep.py --max-lone 12 --herd 20
"""

import argparse
import sys
from dataclasses import dataclass

from dtgq.dynamics import run_story
from dtgq.model import base_type, make_model
from dtgq.parser import parse_discourse

SCRIPT = """
context f:F, d:D
sentence own: f:F | exists d:D . O(f, d)
sentence beat: most t_own_1:T_own_1 | forall t_own_2:T_own_2(t_own_1) . B(t_own_1, t_own_2)
"""


@dataclass(frozen=True)
class Farm:
    lone: int
    herd: int
    beating_lone: int = 0  # how many lone farmers do beat their donkey

    def model(self):
        farmers = [f"lone{i}" for i in range(self.lone)] + ["rich"]
        donkeys = [f"d{i}" for i in range(self.lone)] + [f"r{i}" for i in range(self.herd)]
        owns = [(f"lone{i}", f"d{i}") for i in range(self.lone)] + [("rich", f"r{i}") for i in range(self.herd)]
        beats = [("rich", f"r{i}") for i in range(self.herd)]
        beats += [(f"lone{i}", f"d{i}") for i in range(self.beating_lone)]
        sig = [("f", "F"), ("d", "D")]
        return make_model([base_type("F", farmers), base_type("D", donkeys)], {"O": (sig, owns), "B": (sig, beats)}), owns, beats


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="proportion problem sweep")
    ap.add_argument("--max-lone", type=int, default=12)
    ap.add_argument("--herd", type=int, default=20)
    ns = ap.parse_args(argv)

    steps = parse_discourse(SCRIPT)
    print(f"{'lone':>4} {'pipeline':>8} {'farmers':>8} {'pairs':>6}")
    mismatches = 0
    for lone in range(ns.max_lone + 1):
        m, owns, beats = Farm(lone, ns.herd).model()
        pipeline = run_story(steps, m).truths["beat"]
        owners = {f for f, _ in owns}
        good = {f for f in owners if all((f, d) in beats for g, d in owns if g == f)}
        by_farmer = 2 * len(good) > len(owners)
        by_pair = 2 * len(set(beats) & set(owns)) > len(owns)
        mismatches += pipeline != by_farmer
        print(f"{lone:>4} {str(pipeline):>8} {str(by_farmer):>8} {str(by_pair):>6}")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
