"""Positive-cone compactness: strong H^{-s,q} decay of the nonnegative multipliers h_n.

Writes <out>.csv (per-n rows) and <out>.summary.csv, then prints the summary.

    python3 scripts/run_cone_compactness.py [--out results/cone_compactness.csv] [--seed 0] [--threads 0]
"""

import argparse
import sys
from pathlib import Path

from fracsobolev.cli import run

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(HERE / "configs" / "cone_compactness.json"))
    ap.add_argument("--out", default="results/cone_compactness.csv")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--threads", default="0")
    args = ap.parse_args()
    code = run(["cone-compactness", "--config", args.config, "--out", args.out,
                "--seed", args.seed, "--threads", args.threads])
    out = Path(args.out)
    summary = out.with_name(f"{out.stem}.summary{out.suffix}")
    if summary.exists():
        print(summary.read_text(), end="")
    sys.exit(code)


if __name__ == "__main__":
    main()
