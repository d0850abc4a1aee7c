"""Quasi-variational inequality: find u in K_s(Phi(u)) solving the obstacle problem.

Solved by Picard iteration on T(v) = solution of the obstacle problem with
obstacle Phi(v). Existence of a fixed point is guaranteed by compactness of T,
convergence of the iteration is not; non-convergence is reported rather than
raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dualnorm import dual_norm_2
from .errors import ConvergenceError, ParameterError, ValidationError
from .grid import DomainMask, GridFunction
from .spectral import gaussian_values, lap_values
from .vi import VIProblem, solve_vi


@dataclass(frozen=True)
class ObstacleMapSpec:
    """Phi(v) = envelope * (G_delta * v) - shift, G_delta the multiplier exp(-delta^2 |xi|^2)."""

    envelope: GridFunction
    mollifier_width: float
    shift: float
    kind: str = "mollify_shift"

    def __post_init__(self):
        if self.kind != "mollify_shift":
            raise ValidationError(f"unsupported obstacle map kind {self.kind!r}")
        if not (np.isfinite(self.mollifier_width) and self.mollifier_width > 0):
            raise ParameterError(f"mollifier_width must be positive, got {self.mollifier_width}")
        if not (np.isfinite(self.shift) and self.shift > 0):
            raise ParameterError(f"shift must be positive, got {self.shift}")

    def check_mask(self, mask: DomainMask) -> None:
        if self.envelope.grid != mask.grid:
            raise ValidationError("envelope and mask live on different grids")
        if not mask.contains(self.envelope):
            raise ValidationError("envelope must vanish outside Omega")


def apply_obstacle_map(v: GridFunction, spec: ObstacleMapSpec) -> GridFunction:
    if v.grid != spec.envelope.grid:
        raise ValidationError("field and envelope live on different grids")
    smooth = gaussian_values(v.values, v.grid, spec.mollifier_width)
    return GridFunction(v.grid, spec.envelope.values * smooth - spec.shift)


@dataclass(frozen=True)
class QVIResult:
    u: GridFunction
    outer_iterations: int
    residual_trace: list
    converged: bool
    feasibility_violation: float = 0.0
    seminorm_trace: list = field(default_factory=list, repr=False)
    bound_trace: list = field(default_factory=list, repr=False)


def solve_qvi(f: GridFunction, spec: ObstacleMapSpec, mask: DomainMask, s: float,
              outer_tol: float = 1e-8, outer_max: int = 200, damping: float = 1.0,
              tol: float = 1e-10, max_iter: int = 20_000,
              u0: GridFunction | None = None) -> QVIResult:
    """Damped Picard iteration u <- (1 - theta) u + theta T(u), from u0 = 0 by default.

    ``residual_trace`` holds ||(-D)^{s/2}(T(u_k) - u_k)||_2. Each iterate is
    checked against the a-priori bound 2 ||f||_* + ||(-D)^{s/2} max(Phi(u_k), 0)||,
    which follows from comparing energies with the feasible field max(Phi(u_k), 0).
    A failing inner solve aborts with :class:`ConvergenceError` carrying the trace.
    """
    if not 0.0 < damping <= 1.0:
        raise ParameterError(f"damping must lie in (0, 1], got {damping}")
    spec.check_mask(mask)
    grid = mask.grid
    vol = grid.cell_volume
    f_star = dual_norm_2(f, mask, s)

    def seminorm(x):
        lx = lap_values(x, grid, s)
        return float(np.sqrt(vol * np.sum(lx * lx)))

    u = grid.zeros() if u0 is None else mask.apply(u0)
    residuals, seminorms, bounds = [], [], []
    warm = None
    converged = False
    for k in range(1, outer_max + 1):
        psi = apply_obstacle_map(u, spec)
        sol = solve_vi(VIProblem(s, mask, f, psi), tol=tol, max_iter=max_iter, u0=warm)
        if not sol.converged:
            raise ConvergenceError(f"inner obstacle solve failed at outer step {k}",
                                   residual_trace=residuals, outer_iterations=k)
        Tu = sol.u
        res = seminorm(Tu.values - u.values)
        residuals.append(res)
        bounds.append(2.0 * f_star + seminorm(np.where(mask.inside,
                                                       np.maximum(psi.values, 0.0), 0.0)))
        seminorms.append(seminorm(Tu.values))
        if res <= outer_tol:
            u = Tu
            converged = True
            break
        u = Tu if damping == 1.0 else (1.0 - damping) * u + damping * Tu
        warm = Tu
    phi_u = apply_obstacle_map(u, spec).values
    viol = float(np.max(np.maximum(phi_u - u.values, 0.0)[mask.inside], initial=0.0))
    return QVIResult(u, len(residuals), residuals, converged, viol, seminorms, bounds)
