"""Mosco stability sweep: u_n -> u as the obstacles psi_n converge weakly.

Writes <out>.csv (per-n rows) and <out>.summary.csv, then prints the summary.

    python3 scripts/run_mosco_sweep.py [--out results/mosco_sweep.csv] [--seed 0] [--threads 0]
"""

import argparse
import sys
from pathlib import Path

from fracsobolev.cli import run

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(HERE / "configs" / "mosco_sweep.json"))
    ap.add_argument("--out", default="results/mosco_sweep.csv")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--threads", default="0")
    args = ap.parse_args()
    code = run(["mosco-sweep", "--config", args.config, "--out", args.out,
                "--seed", args.seed, "--threads", args.threads])
    out = Path(args.out)
    summary = out.with_name(f"{out.stem}.summary{out.suffix}")
    if summary.exists():
        print(summary.read_text(), end="")
    sys.exit(code)


if __name__ == "__main__":
    main()
