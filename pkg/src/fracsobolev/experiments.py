"""Desk-scale experiments on positive-cone compactness and Mosco stability.

Weak convergence is operationalised as decay against a fixed finite set of
witness fields together with boundedness of the relevant norms. Trends are
judged by an endpoint ratio and a Spearman rank correlation, since only
convergence (not a rate) is expected.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dualnorm import dual_norm_2, dual_norm_q
from .errors import ParameterError, PremiseError, ValidationError
from .grid import DomainMask, Grid, GridFunction, bump
from .norms import conjugate_exponent, lp_norm
from .spectral import frac_laplacian, lap_values
from .vi import VIProblem, VISolution, solve_vi

log = logging.getLogger(__name__)


# --- sequences -------------------------------------------------------------------

@dataclass(frozen=True)
class ObstacleSequenceSpec:
    """psi_n = base + amplitude * n^(-decay) * envelope * cos(n * stride * pi * x_1 / L)."""

    base: GridFunction
    envelope: GridFunction
    mask: DomainMask
    amplitude: float = 3.0
    decay_exponent: float = 0.5
    stride: int = 1
    count: int = 32

    def __post_init__(self):
        grid = self.mask.grid
        if self.base.grid != grid or self.envelope.grid != grid:
            raise ValidationError("sequence fields live on different grids")
        env = self.envelope.values
        if not self.mask.contains(self.envelope):
            raise ValidationError("envelope must vanish outside Omega")
        if env.min() < 0.0 or env.max() > 1.0:
            raise ValidationError("envelope must take values in [0, 1]")
        if self.count < 1 or self.stride < 1:
            raise ParameterError("count and stride must be positive integers")
        check_resolvable(grid, self.count * self.stride)


def check_resolvable(grid: Grid, top_mode: int) -> None:
    """Reject oscillations above a quarter of the Nyquist frequency."""
    xi = top_mode * np.pi / grid.half_width
    limit = np.pi * grid.M / (2.0 * grid.half_width) / 4.0
    if xi > limit * (1 + 1e-12):
        raise ValidationError(
            f"frequency {xi:.4g} for n*stride={top_mode} exceeds a quarter of Nyquist ({limit:.4g})")


def make_obstacle_sequence(spec: ObstacleSequenceSpec) -> list[GridFunction]:
    """The obstacles psi_1 .. psi_count; each is checked for feasibility."""
    grid = spec.mask.grid
    x1 = grid.coords[0]
    out = []
    for n in range(1, spec.count + 1):
        wave = np.cos(n * spec.stride * np.pi * x1 / grid.half_width)
        psi_n = spec.base + spec.amplitude * n ** (-spec.decay_exponent) * spec.envelope * wave
        if np.any(psi_n.values[~spec.mask.inside] > 0.0):
            raise ValidationError(f"obstacle psi_{n} is positive outside Omega")
        out.append(psi_n)
    return out


def obstacle_sequence_stats(seq, base: GridFunction, s: float, q: float) -> dict:
    """||(-D)^{s/2} psi_n||_q and ||psi_n - psi||_q along a sequence."""
    return {
        "seminorm": [lp_norm(frac_laplacian(p, s), q) for p in seq],
        "distance": [lp_norm(p - base, q) for p in seq],
    }


def oscillating_fields(n_max: int, envelope: GridFunction) -> list[GridFunction]:
    """f_n = eta * prod_i cos(n x_i), the textbook weakly-but-not-strongly null sequence."""
    grid = envelope.grid
    check_resolvable(grid, n_max)
    out = []
    for n in range(1, n_max + 1):
        wave = np.ones(grid.shape)
        for x in grid.coords:
            wave = wave * np.cos(n * x)
        out.append(envelope * wave)
    return out


def counterexample_sequence(n_max: int, s: float, mask: DomainMask,
                            envelope: GridFunction | None = None) -> list[GridFunction]:
    """h_n = (-Delta)^{s/2} f_n with f_n from :func:`oscillating_fields`; weak limit 0."""
    if envelope is None:
        envelope = default_envelope(mask)
    if not mask.contains(envelope):
        raise ValidationError("envelope must vanish outside Omega")
    return [frac_laplacian(fn, s) for fn in oscillating_fields(n_max, envelope)]


def default_envelope(mask: DomainMask, shrink: float = 0.95) -> GridFunction:
    """Radial bump centred in the inscribed ball of Omega (node-based estimate)."""
    grid = mask.grid
    pts = np.stack([x[mask.inside] for x in grid.coords], axis=1)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = 0.5 * (lo + hi)
    radius = shrink * 0.5 * float(np.min(hi - lo))
    env = bump(grid, center, radius)
    return mask.apply(env)


def witness_fields(mask: DomainMask, count: int = 10, seed: int = 0) -> list[GridFunction]:
    """Fixed smooth nonnegative test fields supported inside Omega."""
    env = default_envelope(mask)
    grid = mask.grid
    support = np.stack([x[env.values > 0] for x in grid.coords], axis=1)
    lo, hi = support.min(axis=0), support.max(axis=0)
    half = 0.5 * float(np.min(hi - lo))
    mid = 0.5 * (lo + hi)
    rng = np.random.default_rng([seed, 7919])
    out = []
    for _ in range(count):
        radius = rng.uniform(0.5, 0.9) * half
        center = mid + rng.uniform(-1.0, 1.0, size=grid.dim) * (half - radius)
        out.append(mask.apply(bump(grid, center, radius)))
    return out


def mollify(h: GridFunction, mask: DomainMask, passes: int = 2) -> GridFunction:
    """Restrict to Omega and smooth with the nonnegative kernel [1, 2, 1]/4 along each axis."""
    v = np.where(mask.inside, h.values, 0.0)
    for _ in range(passes):
        for ax in range(h.grid.dim):
            v = 0.25 * np.roll(v, 1, axis=ax) + 0.5 * v + 0.25 * np.roll(v, -1, axis=ax)
    return GridFunction(h.grid, v)


# --- shared solve -------------------------------------------------------------------

def _solve_family(f, psis, s, mask, tol, max_iter, threads) -> list[VISolution]:
    problems = [VIProblem(s, mask, f, psi) for psi in psis]

    def run(p):
        return solve_vi(p, tol=tol, max_iter=max_iter)

    if threads == 1 or len(problems) == 1:
        return [run(p) for p in problems]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(run, problems))


def _trend(values) -> dict:
    v = np.asarray(values, dtype=float)
    n = np.arange(1, v.size + 1)
    rho = float(stats.spearmanr(n, v).statistic) if v.size > 2 and np.ptp(v) > 0 else 0.0
    ratio = float(v[-1] / v[0]) if v[0] > 0 else (0.0 if v[-1] == 0 else np.inf)
    return {"endpoint_ratio": ratio, "spearman": rho}


def _seminorm(values, grid, s):
    lv = lap_values(values, grid, s)
    return float(np.sqrt(grid.inner(lv, lv)))


# --- Mosco sweep ----------------------------------------------------------------------

MOSCO_COLUMNS = ("n", "seminorm_error", "dual_distance", "obstacle_seminorm", "iterations",
                 "converged", "feasibility_violation", "recovery_residual",
                 "translate_residual")


@dataclass
class MoscoSweepReport:
    rows: list[dict]
    summary: dict
    reference: VISolution = field(repr=False)
    solutions: list[VISolution] = field(repr=False, default_factory=list)

    columns = MOSCO_COLUMNS


def run_mosco_sweep(f: GridFunction, spec: ObstacleSequenceSpec, s: float, q: float,
                    tol: float = 1e-8, max_iter: int = 20_000, threads: int = 1,
                    recovery_target: GridFunction | None = None,
                    dual_q: float | None = None) -> MoscoSweepReport:
    """Solve the obstacle problem for psi and every psi_n and track u_n -> u.

    Columns: seminorm error e_n = ||(-D)^{s/2}(u_n - u)||_2, dual distance of
    (-D)^s u_n - (-D)^s u in H^{-s,q'} (q' the conjugate of q unless
    ``dual_q`` is given), the obstacle seminorm ||(-D)^{s/2} psi_n||_q, and the
    two Mosco conditions. Condition I uses the recovery sequence w_n that
    solves the obstacle problem for psi_n with right-hand side (-D)^s w; the
    naive translate psi_n + w - psi is feasible but only weakly convergent,
    and its distance is reported alongside.
    """
    if not (np.isfinite(q) and q > 2.0):
        raise ParameterError(f"obstacle exponent q must exceed 2, got {q}")
    mask = spec.mask
    grid = mask.grid
    dq = conjugate_exponent(q) if dual_q is None else dual_q
    psis = make_obstacle_sequence(spec)
    ref, *sols = _solve_family(f, [spec.base] + psis, s, mask, tol, max_iter, threads)

    # Mosco condition I: a sample w in K_s(psi) and its recovery sequence
    w = ref.u if recovery_target is None else recovery_target
    if np.any((w.values < spec.base.values - 1e-12) & mask.inside) or not mask.contains(w):
        raise ValidationError("recovery target must lie in K_s(psi)")
    fw = frac_laplacian(w, 2 * s)
    rec = _solve_family(fw, psis, s, mask, tol, max_iter, threads)

    href = lap_values(ref.u.values, grid, 2 * s)
    rows = []
    for n, (psi_n, sol, rsol) in enumerate(zip(psis, sols, rec), start=1):
        diff = sol.u.values - ref.u.values
        hdiff = GridFunction(grid, lap_values(sol.u.values, grid, 2 * s) - href)
        translate = psi_n.values - spec.base.values  # (psi_n + w - psi) - w
        rows.append({
            "n": n,
            "seminorm_error": _seminorm(diff, grid, s),
            "dual_distance": dual_norm_q(hdiff, mask, s, dq).value,
            "obstacle_seminorm": lp_norm(frac_laplacian(psi_n, s), q),
            "iterations": sol.iterations,
            "converged": bool(sol.converged and rsol.converged),
            "feasibility_violation": float(np.max(
                np.maximum(psi_n.values - sol.u.values, 0.0)[mask.inside])),
            "recovery_residual": _seminorm(rsol.u.values - w.values, grid, s),
            "translate_residual": _seminorm(translate, grid, s),
        })
    e = [r["seminorm_error"] for r in rows]
    rec_res = [r["recovery_residual"] for r in rows]
    summary = {
        "seminorm_error": _trend(e),
        "dual_distance": _trend([r["dual_distance"] for r in rows]),
        "recovery_residual": _trend(rec_res),
        "recovery_ratio": float(rec_res[-1] / rec_res[0]) if rec_res[0] > 0 else 0.0,
        "condition_II_violation": max(r["feasibility_violation"] for r in rows),
        "limit_feasibility_violation": float(np.max(
            np.maximum(spec.base.values - ref.u.values, 0.0)[mask.inside])),
        "obstacle_seminorm_max_ratio": max(r["obstacle_seminorm"] for r in rows)
        / rows[0]["obstacle_seminorm"],
        "all_converged": bool(ref.converged and all(r["converged"] for r in rows)),
        "dual_q": dq,
    }
    return MoscoSweepReport(rows, summary, ref, sols)


# --- positive cone compactness ------------------------------------------------------------

CONE_COLUMNS = ("n", "dual_distance", "dual2_distance", "min_mollified", "control_dual2",
                "control_dualq", "max_witness")


@dataclass
class ConeReport:
    rows: list[dict]
    summary: dict
    witnesses: np.ndarray = field(repr=False)

    columns = CONE_COLUMNS


def run_cone_compactness(f: GridFunction, spec: ObstacleSequenceSpec, s: float, q: float,
                         tol: float = 1e-8, max_iter: int = 20_000, threads: int = 1,
                         seed: int = 0, n_witness: int = 10) -> ConeReport:
    """Strong H^{-s,q} convergence of the nonnegative multipliers h_n = (-D)^s u_n - f.

    u_n solve the obstacle problems with obstacles psi_n. Every h_n is checked
    to be nonnegative on Omega after mollification (a failure raises
    :class:`PremiseError`). The control arm measures the sign-changing
    oscillating sequence of :func:`counterexample_sequence` in the same norms.
    """
    if not (np.isfinite(q) and 1.0 < q < 2.0):
        raise ParameterError(f"q must lie in (1, 2), got {q}")
    mask = spec.mask
    grid = mask.grid
    psis = make_obstacle_sequence(spec)
    ref, *sols = _solve_family(f, [spec.base] + psis, s, mask, tol, max_iter, threads)

    def multiplier(sol):
        return GridFunction(grid, lap_values(sol.u.values, grid, 2 * s) - f.values)

    hstar = multiplier(ref)
    floor = -10.0 * tol
    wit = witness_fields(mask, n_witness, seed)
    control = counterexample_sequence(spec.count, s, mask, spec.envelope)
    rows, W = [], []
    for n, (sol, hc) in enumerate(zip(sols, control), start=1):
        hn = multiplier(sol)
        low = float(mollify(hn, mask).values[mask.inside].min())
        if low < floor:
            raise PremiseError(f"h_{n} fails the nonnegativity check (min {low:.3g})")
        d = hn - hstar
        wrow = [abs(d.pair(phi)) for phi in wit]
        W.append(wrow)
        rows.append({
            "n": n,
            "dual_distance": dual_norm_q(d, mask, s, q).value,
            "dual2_distance": dual_norm_2(d, mask, s),
            "min_mollified": low,
            "control_dual2": dual_norm_2(hc, mask, s),
            "control_dualq": dual_norm_q(hc, mask, s, q).value,
            "max_witness": max(wrow),
        })
    c2 = [r["control_dual2"] for r in rows]
    summary = {
        "dual_distance": _trend([r["dual_distance"] for r in rows]),
        "dual2_distance": _trend([r["dual2_distance"] for r in rows]),
        "control_dual2_floor": float(min(c2) / c2[0]),
        "min_mollified": min(r["min_mollified"] for r in rows),
        "reference_min_mollified": float(mollify(hstar, mask).values[mask.inside].min()),
        "all_converged": bool(ref.converged and all(x.converged for x in sols)),
    }
    return ConeReport(rows, summary, np.array(W))


# --- counterexample ---------------------------------------------------------------------

COUNTER_COLUMNS = ("n", "l2_norm", "dual_q", "dual_2", "min_mollified", "max_mollified",
                   "max_witness_f", "max_witness_h")


@dataclass
class CounterexampleReport:
    rows: list[dict]
    summary: dict
    witness_f: np.ndarray = field(repr=False)
    witness_h: np.ndarray = field(repr=False)

    columns = COUNTER_COLUMNS


def run_counterexample(mask: DomainMask, s: float, q: float, n_max: int,
                       envelope: GridFunction | None = None, seed: int = 0,
                       n_witness: int = 10) -> CounterexampleReport:
    """Weak-only convergence of h_n = (-D)^{s/2} f_n without the sign condition."""
    if not (np.isfinite(q) and 1.0 < q < 2.0):
        raise ParameterError(f"q must lie in (1, 2), got {q}")
    if envelope is None:
        envelope = default_envelope(mask)
    fs = oscillating_fields(n_max, envelope)
    hs = counterexample_sequence(n_max, s, mask, envelope)
    wit = witness_fields(mask, n_witness, seed)
    rows, Wf, Wh = [], [], []
    for n, (fn, hn) in enumerate(zip(fs, hs), start=1):
        mol = mollify(hn, mask).values[mask.inside]
        wf = [abs(fn.pair(phi)) for phi in wit]
        wh = [abs(hn.pair(phi)) for phi in wit]
        Wf.append(wf)
        Wh.append(wh)
        rows.append({
            "n": n,
            "l2_norm": lp_norm(fn, 2.0),
            "dual_q": dual_norm_q(hn, mask, s, q).value,
            "dual_2": dual_norm_2(hn, mask, s),
            "min_mollified": float(mol.min()),
            "max_mollified": float(mol.max()),
            "max_witness_f": max(wf),
            "max_witness_h": max(wh),
        })
    Wf, Wh = np.array(Wf), np.array(Wh)
    dq = [r["dual_q"] for r in rows]
    l2 = np.array([r["l2_norm"] for r in rows])
    summary = {
        "dual_q_floor": float(min(dq) / dq[0]),
        "dual_2_floor": float(min(r["dual_2"] for r in rows) / rows[0]["dual_2"]),
        "l2_band": (float(l2.min() / l2[0]), float(l2.max() / l2[0])),
        # n = 1 still feels the cos(2x) cross term against eta^2
        "l2_band_from2": ((float(l2[1:].min() / l2[1]), float(l2[1:].max() / l2[1]))
                          if l2.size > 1 else (1.0, 1.0)),
        "witness_decay_f": float(np.min(Wf[0] / np.maximum(Wf[-1], 1e-300))),
        "witness_decay_h": float(np.min(Wh[0] / np.maximum(Wh[-1], 1e-300))),
        "sign_changing": bool(all(r["min_mollified"] < -0.1 * r["max_mollified"]
                                  for r in rows)),
    }
    return CounterexampleReport(rows, summary, Wf, Wh)
