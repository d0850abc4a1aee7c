"""Command-line front end.

    fracsobolev <command> [--config cfg.json] [--seed N] [--out path.csv]
                [--threads N] [--tol X] [--grid dim:L:M] [--s S]

Exit status: 0 success, 1 invalid input, 2 numerical non-convergence.
Every CSV starts with a ``# config-hash: <sha256>`` line followed by a header.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as ex
from .dualnorm import dual_norm_2, dual_norm_q
from .errors import ConvergenceError, ValidationError
from .grid import DomainMask, Grid, GridFunction, bump, random_field
from .qvi import ObstacleMapSpec, apply_obstacle_map, solve_qvi
from .spectral import (bessel_inverse, frac_laplacian, kernel_matrix, riesz_potential,
                       DENSE_LIMIT)
from .vi import VIProblem, kkt_diagnostics, solve_vi

log = logging.getLogger("fracsobolev")

COMMANDS = ("check-ops", "solve-vi", "dual-norm", "mosco-sweep", "cone-compactness",
            "counterexample", "qvi")

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --- configuration -------------------------------------------------------------------

def _number(cfg, key, default=None, lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False,
            integer=False, where=""):
    name = f"{where}{key}"
    val = cfg.get(key, default)
    if val is None:
        raise ValidationError(f"{name}: required")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{name}: expected a number, got {val!r}")
    if integer and int(val) != val:
        raise ValidationError(f"{name}: expected an integer, got {val!r}")
    if not math.isfinite(val):
        raise ValidationError(f"{name}: must be finite")
    if val < lo or val > hi or (lo_open and val == lo) or (hi_open and val == hi):
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        raise ValidationError(f"{name}: {val} outside {lb}{lo}, {hi}{rb}")
    return int(val) if integer else float(val)


@dataclass
class ExperimentConfig:
    """Parsed run configuration; ``raw`` is the canonical dict that gets hashed."""

    command: str
    raw: dict
    grid: Grid
    mask: DomainMask
    seed: int
    tol: float
    threads: int
    out: Path | None
    rng: np.random.Generator = field(repr=False, default=None)

    @property
    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def num(self, key, default=None, **kw):
        return _number(self.raw, key, default, **kw)

    def field(self, key, default=None) -> GridFunction:
        spec = self.raw.get(key, default)
        if spec is None:
            raise ValidationError(f"{key}: required")
        return build_field(spec, self.grid, self.mask, self.rng, where=f"{key}.")


def build_field(spec, grid: Grid, mask: DomainMask, rng, where="") -> GridFunction:
    """Field from a JSON description (constant, bump, cosine, random, values, sum)."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return grid.constant(float(spec))
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError(f"{where}kind: field spec must be a number or an object with 'kind'")
    kind = spec["kind"]
    if kind == "constant":
        out = grid.constant(_number(spec, "value", where=where))
    elif kind == "bump":
        center = spec.get("center", [0.0] * grid.dim)
        center = [center] if isinstance(center, (int, float)) else list(center)
        if len(center) != grid.dim:
            raise ValidationError(f"{where}center: needs {grid.dim} coordinates")
        out = bump(grid, center, _number(spec, "radius", 1.0, lo=0, lo_open=True, where=where),
                   _number(spec, "amplitude", 1.0, where=where))
    elif kind == "cosine":
        k = spec.get("k", [1] * grid.dim)
        k = [k] if isinstance(k, (int, float)) else list(k)
        if len(k) != grid.dim:
            raise ValidationError(f"{where}k: needs {grid.dim} integers")
        amp = _number(spec, "amplitude", 1.0, where=where)
        phase = sum(int(ki) * np.pi / grid.half_width * x for ki, x in zip(k, grid.coords))
        out = GridFunction(grid, amp * np.cos(phase))
    elif kind == "random":
        smooth = spec.get("smooth")
        if smooth is not None:
            smooth = _number(spec, "smooth", lo=0, where=where)
        out = _number(spec, "scale", 1.0, where=where) * random_field(grid, rng, smooth=smooth)
    elif kind == "values":
        try:
            out = GridFunction(grid, np.asarray(spec["values"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{where}values: {exc}") from None
    elif kind == "sum":
        terms = spec.get("terms") or []
        if not terms:
            raise ValidationError(f"{where}terms: need at least one term")
        out = grid.zeros()
        for i, t in enumerate(terms):
            out = out + build_field(t, grid, mask, rng, where=f"{where}terms[{i}].")
    elif kind == "envelope":
        out = ex.default_envelope(mask, _number(spec, "shrink", 0.95, lo=0, hi=1, lo_open=True,
                                                where=where))
    else:
        raise ValidationError(f"{where}kind: unknown field kind {kind!r}")
    if spec.get("masked", False):
        out = mask.apply(out)
    return out


def build_mask(spec, grid: Grid) -> DomainMask:
    if spec is None:
        half = grid.half_width / 2.0
        return DomainMask.box(grid, [(-half, half)] * grid.dim)
    shape = spec.get("shape", "interval")
    bounds = spec.get("bounds")
    try:
        if shape == "interval":
            a, b = (float(x) for x in bounds)
            return DomainMask.box(grid, [(a, b)] * grid.dim)
        if shape == "box":
            return DomainMask.box(grid, [(float(a), float(b)) for a, b in bounds])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise ValidationError(f"mask: {exc}") from None
        raise ValidationError(f"mask.bounds: malformed ({exc})") from None
    raise ValidationError(f"mask.shape: unknown shape {shape!r}")


def load_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ValidationError(f"config: cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ValidationError("config: top level must be an object")
    if args.grid:
        g = Grid.parse(args.grid)
        raw["grid"] = {"dim": g.dim, "L": g.half_width, "M": g.M}
    if args.s is not None:
        raw["s"] = args.s
    if args.q is not None:
        raw["q"] = args.q
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.tol is not None:
        raw["tol"] = args.tol
    gspec = raw.get("grid")
    if not isinstance(gspec, dict):
        raise ValidationError("grid: required (config 'grid' object or --grid dim:L:M)")
    dims = (_number(gspec, "dim", integer=True, lo=1, hi=2, where="grid."),
            _number(gspec, "L", lo=0, lo_open=True, where="grid."),
            _number(gspec, "M", integer=True, lo=8, where="grid."))
    try:
        grid = Grid(*dims)
    except ValidationError as exc:
        raise ValidationError(f"grid: {exc}") from None
    mask = build_mask(raw.get("mask"), grid)
    seed = _number(raw, "seed", 0, lo=0, hi=2**64 - 1, integer=True)
    tol = _number(raw, "tol", 1e-8, lo=0, lo_open=True)
    threads = args.threads if args.threads is not None else 1
    if threads < 0:
        raise ValidationError("threads: must be >= 0")
    out = Path(args.out) if args.out else None
    return ExperimentConfig(args.command, raw, grid, mask, seed, tol, threads, out,
                            np.random.default_rng(seed))


# --- output --------------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.16e" % float(v)
    return str(v)


def render_csv(digest: str, columns, rows) -> str:
    lines = [f"# config-hash: {digest}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sibling(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}.{tag}{path.suffix or '.csv'}")


def _emit(cfg: ExperimentConfig, columns, rows, tag=None):
    text = render_csv(cfg.digest, columns, rows)
    if cfg.out is None:
        if tag is None:
            sys.stdout.write(text)
        return
    write_atomic(cfg.out if tag is None else _sibling(cfg.out, tag), text)


def _summary_rows(summary: dict, prefix=""):
    for k, v in summary.items():
        if isinstance(v, dict):
            yield from _summary_rows(v, f"{prefix}{k}.")
        elif isinstance(v, (tuple, list)):
            for i, x in enumerate(v):
                yield {"key": f"{prefix}{k}[{i}]", "value": x}
        else:
            yield {"key": prefix + k, "value": v}


def _field_rows(grid: Grid, named: dict):
    coords = [x.ravel() for x in grid.coords]
    data = {k: v.values.ravel() for k, v in named.items()}
    for i in range(grid.size):
        row = {"node": i}
        for d, x in enumerate(coords):
            row[f"x{d + 1}"] = float(x[i])
        row.update({k: float(v[i]) for k, v in data.items()})
        yield row


# --- commands ------------------------------------------------------------------------------

def cmd_check_ops(cfg: ExperimentConfig) -> int:
    s = cfg.num("s", 0.5, lo=0, hi=2, lo_open=True)
    trials = cfg.num("trials", 20, lo=1, integer=True)
    grid = cfg.grid
    rng = cfg.rng
    res = {k: 0.0 for k in ("integration_by_parts", "semigroup", "bessel_decomposition",
                            "riesz_roundtrip", "dense_equivalence")}
    t = min(s, 2 - s) if s < 2 else 0.5
    K = kernel_matrix(grid, s) if grid.size <= DENSE_LIMIT else None
    for _ in range(trials):
        f, g = random_field(grid, rng), random_field(grid, rng)
        scale = np.linalg.norm(f.values) * np.linalg.norm(g.values) * grid.cell_volume
        ibp = abs(frac_laplacian(f, s).pair(g) - f.pair(frac_laplacian(g, s))) / scale
        f0 = f - f.mean()
        if s + t <= 2:
            semi = (frac_laplacian(frac_laplacian(f0, s), t)
                    - frac_laplacian(f0, s + t)).max_abs() / f0.max_abs()
        else:
            semi = 0.0
        rb = 0.0
        if s < 2:
            b = bessel_inverse(f, s)
            rb = (frac_laplacian(b, s) + b - f).max_abs() / f.max_abs()
        rr = 0.0
        if s < grid.dim:
            rr = (riesz_potential(frac_laplacian(f, s), s) - f0).max_abs() / f0.max_abs()
        de = 0.0
        if K is not None:
            de = np.max(np.abs(K @ f.values.ravel() - frac_laplacian(f, s).values.ravel()))
            de /= f.max_abs()
        for k, v in zip(res, (ibp, semi, rb, rr, de)):
            res[k] = max(res[k], float(v))
    tol = 1e-10
    rows = [{"identity": k, "max_residual": v, "passed": v < tol} for k, v in res.items()]
    for r in rows:
        print(f"{r['identity']:<22} {r['max_residual']:.3e} {'ok' if r['passed'] else 'FAIL'}")
    if cfg.out is not None:
        _emit(cfg, ("identity", "max_residual", "passed"), rows)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_NONCONVERGED


def cmd_solve_vi(cfg: ExperimentConfig) -> int:
    s = cfg.num("s", 0.5, lo=0, hi=1, lo_open=True)
    max_iter = cfg.num("max_iter", 20_000, lo=1, integer=True)
    f, psi = cfg.field("f", 0.0), cfg.field("psi")
    problem = VIProblem(s, cfg.mask, f, psi)
    sol = solve_vi(problem, tol=cfg.tol, max_iter=max_iter)
    cols = ("iterations", "converged", "primal_violation", "dual_violation",
            "complementarity_gap", "energy")
    _emit(cfg, cols, [{c: getattr(sol, c) for c in cols}])
    r = cfg.mask.apply(GridFunction(cfg.grid, kkt_diagnostics(problem, sol.u.values)["residual"]))
    names = {"u": sol.u, "psi": psi, "f": f, "residual": r}
    fcols = ("node",) + tuple(f"x{d + 1}" for d in range(cfg.grid.dim)) + tuple(names)
    _emit(cfg, fcols, _field_rows(cfg.grid, names), tag="fields")
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_dual_norm(cfg: ExperimentConfig) -> int:
    s = cfg.num("s", 0.5, lo=0, hi=1, lo_open=True)
    qs = cfg.raw.get("q", [2.0, 1.5])
    qs = [qs] if isinstance(qs, (int, float)) else list(qs)
    h = cfg.field("h")
    rows, ok = [], True
    for i, q in enumerate(qs):
        q = _number({"q": q}, "q", lo=1, hi=2, lo_open=True, where=f"[{i}]")
        if q == 2.0:
            v = dual_norm_2(h, cfg.mask, s, tol=min(cfg.tol, 1e-10))
            rows.append({"q": q, "value": v, "upper_bound": v, "iterations": 0,
                         "certificate_gap": 0.0, "certified": True})
        else:
            r = dual_norm_q(h, cfg.mask, s, q, tol=cfg.tol)
            ok &= r.certified
            rows.append({"q": q, "value": r.value, "upper_bound": r.upper_bound,
                         "iterations": r.iterations, "certificate_gap": r.certificate_gap,
                         "certified": r.certified})
    _emit(cfg, ("q", "value", "upper_bound", "iterations", "certificate_gap", "certified"), rows)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _sequence_spec(cfg: ExperimentConfig, s: float) -> ex.ObstacleSequenceSpec:
    seq = cfg.raw.get("sequence", {})
    if not isinstance(seq, dict):
        raise ValidationError("sequence: must be an object")
    base = cfg.field("psi")
    env_spec = seq.get("envelope", {"kind": "envelope"})
    env = build_field(env_spec, cfg.grid, cfg.mask, cfg.rng, where="sequence.envelope.")
    return ex.ObstacleSequenceSpec(
        base=base, envelope=env, mask=cfg.mask,
        amplitude=_number(seq, "amplitude", 3.0, where="sequence."),
        decay_exponent=_number(seq, "decay_exponent", s, lo=0, where="sequence."),
        stride=_number(seq, "stride", 1, lo=1, integer=True, where="sequence."),
        count=_number(seq, "count", 32, lo=1, integer=True, where="sequence."),
    )


def cmd_mosco_sweep(cfg: ExperimentConfig) -> int:
    s = cfg.num("s", 0.5, lo=0, hi=1, lo_open=True)
    q = cfg.num("q", 3.0, lo=2, lo_open=True)
    max_iter = cfg.num("max_iter", 20_000, lo=1, integer=True)
    spec = _sequence_spec(cfg, s)
    f = cfg.field("f", 0.0)
    rep = ex.run_mosco_sweep(f, spec, s, q, tol=cfg.tol, max_iter=max_iter,
                             threads=cfg.threads)
    _emit(cfg, rep.columns, rep.rows)
    _emit(cfg, ("key", "value"), _summary_rows(rep.summary), tag="summary")
    return EXIT_OK if rep.summary["all_converged"] else EXIT_NONCONVERGED


def cmd_cone_compactness(cfg: ExperimentConfig) -> int:
    s = cfg.num("s", 0.5, lo=0, hi=1, lo_open=True)
    q = cfg.num("q", 1.5, lo=1, hi=2, lo_open=True, hi_open=True)
    max_iter = cfg.num("max_iter", 20_000, lo=1, integer=True)
    spec = _sequence_spec(cfg, s)
    f = cfg.field("f", 0.0)
    rep = ex.run_cone_compactness(f, spec, s, q, tol=cfg.tol, max_iter=max_iter,
                                  threads=cfg.threads, seed=cfg.seed)
    _emit(cfg, rep.columns, rep.rows)
    _emit(cfg, ("key", "value"), _summary_rows(rep.summary), tag="summary")
    return EXIT_OK if rep.summary["all_converged"] else EXIT_NONCONVERGED


def cmd_counterexample(cfg: ExperimentConfig) -> int:
    s = cfg.num("s", 0.5, lo=0, hi=1, lo_open=True)
    q = cfg.num("q", 1.5, lo=1, hi=2, lo_open=True, hi_open=True)
    n_max = cfg.num("n_max", 32, lo=1, integer=True)
    env = cfg.field("envelope", {"kind": "envelope"})
    rep = ex.run_counterexample(cfg.mask, s, q, n_max, envelope=env, seed=cfg.seed)
    _emit(cfg, rep.columns, rep.rows)
    _emit(cfg, ("key", "value"), _summary_rows(rep.summary), tag="summary")
    return EXIT_OK


def cmd_qvi(cfg: ExperimentConfig) -> int:
    s = cfg.num("s", 0.5, lo=0, hi=1, lo_open=True)
    spec_raw = cfg.raw.get("qvi", {})
    if not isinstance(spec_raw, dict):
        raise ValidationError("qvi: must be an object")
    env = build_field(spec_raw.get("envelope", {"kind": "envelope"}), cfg.grid, cfg.mask,
                      cfg.rng, where="qvi.envelope.")
    spec = ObstacleMapSpec(env,
                           _number(spec_raw, "mollifier_width", 0.2, lo=0, lo_open=True,
                                   where="qvi."),
                           _number(spec_raw, "shift", 0.1, lo=0, lo_open=True, where="qvi."))
    outer_tol = _number(spec_raw, "outer_tol", cfg.tol, lo=0, lo_open=True, where="qvi.")
    outer_max = _number(spec_raw, "outer_max", 200, lo=1, integer=True, where="qvi.")
    damping = _number(spec_raw, "damping", 1.0, lo=0, hi=1, lo_open=True, where="qvi.")
    f = cfg.field("f", 0.0)
    res = solve_qvi(f, spec, cfg.mask, s, outer_tol=outer_tol, outer_max=outer_max,
                    damping=damping, tol=min(cfg.tol, 1e-10))
    rows = [{"k": k + 1, "residual": r, "seminorm": m, "bound": b}
            for k, (r, m, b) in enumerate(zip(res.residual_trace, res.seminorm_trace,
                                              res.bound_trace))]
    _emit(cfg, ("k", "residual", "seminorm", "bound"), rows)
    names = {"u": res.u, "obstacle": apply_obstacle_map(res.u, spec), "f": f}
    fcols = ("node",) + tuple(f"x{d + 1}" for d in range(cfg.grid.dim)) + tuple(names)
    _emit(cfg, fcols, _field_rows(cfg.grid, names), tag="fields")
    summary = {"converged": res.converged, "outer_iterations": res.outer_iterations,
               "feasibility_violation": res.feasibility_violation}
    _emit(cfg, ("key", "value"), _summary_rows(summary), tag="summary")
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


HANDLERS = {
    "check-ops": cmd_check_ops,
    "solve-vi": cmd_solve_vi,
    "dual-norm": cmd_dual_norm,
    "mosco-sweep": cmd_mosco_sweep,
    "cone-compactness": cmd_cone_compactness,
    "counterexample": cmd_counterexample,
    "qvi": cmd_qvi,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracsobolev", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, help="64-bit seed for random fields and witnesses")
    p.add_argument("--out", help="output CSV path (stdout if omitted)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = auto (default 1)")
    p.add_argument("--tol", type=float, help="solver tolerance")
    p.add_argument("--grid", help="grid shorthand dim:L:M")
    p.add_argument("--s", type=float, help="fractional order")
    p.add_argument("--q", type=float, help="dual exponent (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as exc:
        print(f"fracsobolev: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return HANDLERS[args.command](cfg)
    except ValidationError as exc:
        print(f"fracsobolev: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"fracsobolev: no convergence: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NONCONVERGED


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
