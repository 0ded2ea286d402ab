#!/usr/bin/env python3
"""Analyse the standard examples and print one summary line each.

    python3 scripts/run_suite.py [--oracle] [--seed N] [--json DIR]
"""

import argparse
import sys
import time
from pathlib import Path

from realmilnor.pipeline import AnalysisConfig, analyze, report_json

SUITE = [
    ("x^3 - y^2", "x,y", (-3, 0)),
    ("x^3 - y^2", "x,y", None),
    ("x^2 - y^2", "x,y", None),
    ("x^3 - 3*x*y^2", "x,y", None),
    ("x^2 + y^2 - z^2", "x,y,z", None),
    ("x^2 - y^2 - z^2", "x,y,z", None),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--oracle", action="store_true", help="also run the mesh oracle")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--json", type=Path, help="write each report into this directory")
    args = ap.parse_args(argv)
    if args.json:
        args.json.mkdir(parents=True, exist_ok=True)

    print(f"{'polynomial':<20} {'t':<22} {'indices':<12} {'ranks':<16} {'oracle':<9} exit  secs")
    for i, (text, names, t) in enumerate(SUITE):
        cfg = AnalysisConfig(text, tuple(names.split(",")), t=t, seed=args.seed, oracle=args.oracle)
        t0 = time.perf_counter()
        env = analyze(cfg)
        secs = time.perf_counter() - t0
        sec = env.fibre("+")
        tt = ",".join(f"{v:.3g}" for v in env.checks["perturbation"]["params"]["t"])
        oracle = sec["oracle"]["compare"]["verdict"] if sec.get("oracle") and sec["oracle"]["status"] == "ok" else "-"
        ranks = sec["homology"]["ranks"]
        print(f"{text:<20} {tt:<22} {str(sec['handles']['indices']):<12} {str(ranks):<16} {oracle:<9} "
              f"{env.exit_code:<5} {secs:.1f}")
        for c in env.caveats:
            print(f"{'':<20} caveat: {c}")
        if args.json:
            (args.json / f"report_{i}.json").write_text(report_json(env) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
