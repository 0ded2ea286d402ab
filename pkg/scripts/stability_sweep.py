#!/usr/bin/env python3
"""Check that the handle indices and rank table do not depend on the seed.

    python3 scripts/stability_sweep.py -p "x^2 + y^2 - z^2" -v x,y,z --seeds 0-9
"""

import argparse
import collections
import sys

from realmilnor.pipeline import AnalysisConfig, AnalysisError, analyze


def seed_range(text: str) -> list[int]:
    if "-" in text:
        lo, hi = (int(x) for x in text.split("-"))
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",")]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-p", "--polynomial", required=True)
    ap.add_argument("-v", "--variables", required=True)
    ap.add_argument("--seeds", default="0-4", help="range 'a-b' or list 'a,b,c'")
    ap.add_argument("--delta", type=float, default=1.0)
    args = ap.parse_args(argv)

    names = tuple(args.variables.split(","))
    tally = collections.Counter()
    for seed in seed_range(args.seeds):
        try:
            env = analyze(AnalysisConfig(args.polynomial, names, delta=args.delta, seed=seed))
        except AnalysisError as err:
            print(f"seed {seed:>4}: error {err}")
            tally["error"] += 1
            continue
        sec = env.fibre("+")
        key = (tuple(sec["handles"]["indices"]), tuple(sorted(sec["homology"]["ranks"].items())))
        tally[key] += 1
        print(f"seed {seed:>4}: indices {list(key[0])}  ranks {dict(key[1])}  eps {sec['milnor_data']['epsilon']:.3g}")

    print()
    for key, count in tally.most_common():
        print(f"{count:>4} x {key}")
    return 0 if len(tally) == 1 else 1


if __name__ == "__main__":
    sys.exit(main())
