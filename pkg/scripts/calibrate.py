"""Dense-oracle calibration of the trend thresholds used by the experiment tests.

Solves the Mosco sequence on a coarse grid (M = 64, n = 1..8, the resolvable
range there) with the exact active-set oracle instead of the iterative solver,
and reports the trend statistics next to those of the iterative solver on the
same grid and on the production grid (M = 256, n = 1..32). The thresholds
(endpoint ratio 0.2, Spearman -0.8, counterexample floor 0.5) were frozen from
this run.

    python3 scripts/calibrate.py [--amplitude 3.0]
"""

import argparse

import numpy as np
from scipy import stats

from fracsobolev import (DomainMask, Grid, NormParams, ObstacleSequenceSpec, VIProblem, bump,
                         dense_vi_oracle, hsp_seminorm, make_obstacle_sequence,
                         run_counterexample, run_mosco_sweep)
from fracsobolev.experiments import default_envelope


def setup(M, amplitude, count):
    g = Grid(1, np.pi, M)
    m = DomainMask.interval(g, -1.5, 1.5)
    spec = ObstacleSequenceSpec(bump(g, 0.0, 1.0, 0.5), default_envelope(m), m,
                                amplitude=amplitude, decay_exponent=0.5, count=count)
    return g, m, spec


def oracle_errors(M, amplitude, count, s=0.5):
    g, m, spec = setup(M, amplitude, count)
    f = g.zeros()
    ref = dense_vi_oracle(VIProblem(s, m, f, spec.base))
    errs = []
    for psi in make_obstacle_sequence(spec):
        u = dense_vi_oracle(VIProblem(s, m, f, psi))
        errs.append(hsp_seminorm(u - ref, NormParams(s, 2.0)))
    return np.array(errs)


def describe(label, e):
    rho = stats.spearmanr(np.arange(1, e.size + 1), e).statistic
    print(f"{label:<34} ratio {e[-1] / e[0]:.4f}  spearman {rho:+.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitude", type=float, default=3.0)
    args = ap.parse_args()
    a = args.amplitude

    e_oracle = oracle_errors(64, a, 8)
    describe("oracle M=64, n=1..8", e_oracle)
    g, m, spec = setup(64, a, 8)
    rep = run_mosco_sweep(g.zeros(), spec, 0.5, 3.0)
    e_iter = np.array([r["seminorm_error"] for r in rep.rows])
    describe("iterative M=64, n=1..8", e_iter)
    print(f"{'max |oracle - iterative|':<34} {np.abs(e_oracle - e_iter).max():.2e}")
    g, m, spec = setup(256, a, 32)
    rep = run_mosco_sweep(g.zeros(), spec, 0.5, 3.0)
    describe("iterative M=256, n=1..32", np.array([r["seminorm_error"] for r in rep.rows]))
    describe("dual distance M=256", np.array([r["dual_distance"] for r in rep.rows]))
    print(f"{'asymptotic rate n^-s at n=32':<34} {32 ** -0.5:.4f}")
    ce = run_counterexample(m, 0.5, 1.5, 32)
    print(f"{'counterexample floor (q=1.5)':<34} {ce.summary['dual_q_floor']:.4f}")


if __name__ == "__main__":
    main()
