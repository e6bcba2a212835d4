"""Emit every figure dataset plus the headline report into one directory tree.

    python3 scripts/make_figures.py [--scenario FILE] [--out DIR] [--threads N]

Each figure goes to DIR/<figure>/ with its own manifest; purify goes to
DIR/purify/.  Stops at the first non-zero exit code.
"""

import argparse
import sys
from pathlib import Path

from qfc.cli import FIGURES, main as qfc_main


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario")
    ap.add_argument("--out", default="figures")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    common = ["--threads", str(args.threads)] + (["--scenario", args.scenario] if args.scenario else [])
    jobs = [("purify", ["purify", "--filter-benchmark"])]
    jobs += [(f, ["figure", "--figure", f]) for f in FIGURES]
    for name, argv in jobs:
        print(f"== {name}", flush=True)
        code = qfc_main(argv + common + ["--out", str(Path(args.out) / name)])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
