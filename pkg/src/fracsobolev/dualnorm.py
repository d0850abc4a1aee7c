"""Dual norms on H^{s,q'}_00(Omega): exact for q = 2, iterative for q in (1, 2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grid import DomainMask, GridFunction
from .norms import conjugate_exponent, lp_values
from .spectral import lap_values
from .vi import _same_grid, masked_operator, solve_unconstrained


@dataclass(frozen=True)
class DualNormResult:
    """Outcome of :func:`dual_norm_q`.

    ``value`` is attained by ``maximizer`` and is therefore a lower bound on
    the discrete dual norm. ``upper_bound`` is a Hoelder certificate built from
    the final iterate, so the true value lies in ``[value, upper_bound]``.
    """

    value: float
    maximizer: GridFunction
    iterations: int
    certificate_gap: float
    certified: bool
    upper_bound: float = np.inf


def dual_norm_2(h: GridFunction, mask: DomainMask, s: float, tol: float = 1e-12) -> float:
    """||h|| in (H^{s,2}_00)^* via its Riesz representer u: the value is ||(-D)^{s/2} u||_2."""
    _same_grid(h, mask)
    u = solve_unconstrained(h, mask, s, tol=tol)
    lu = lap_values(u.values, h.grid, s)
    return float(np.sqrt(h.grid.inner(lu, lu)))


def dual_norm_q(h: GridFunction, mask: DomainMask, s: float, q: float, tol: float = 1e-10,
                max_iter: int = 5000) -> DualNormResult:
    """sup { h[phi] : phi masked, ||(-D)^{s/2} phi||_{q'} <= 1 } for q in (1, 2).

    Preconditioned gradient ascent on the scale-invariant ratio
    ``h[phi] / ||(-D)^{s/2} phi||_{q'}``, renormalising to the unit sphere after
    every step and starting from the q = 2 Riesz maximiser. Any local maximum
    of the ratio is global (its superlevel sets are convex cones). The loop
    stops when the value changes by at most ``tol`` (relative) over the last
    ten iterations.
    """
    if not (np.isfinite(q) and 1.0 < q < 2.0):
        raise ParameterError(f"q must lie in (1, 2), got {q}")
    grid = _same_grid(h, mask)
    inside = mask.inside
    vol = grid.cell_volume
    qp = conjugate_exponent(q)
    hv = np.where(inside, h.values, 0.0)
    _, apply_P = masked_operator(mask, s)

    def norm_qp(phi):
        return lp_values(lap_values(phi, grid, s), vol, qp)

    if not np.any(hv):
        phi = np.where(inside, 1.0, 0.0)
        phi /= norm_qp(phi)
        return DualNormResult(0.0, GridFunction(grid, phi), 0, 0.0, True, 0.0)

    phi = solve_unconstrained(h, mask, s, tol=1e-12).values
    phi = phi / norm_qp(phi)
    value = vol * np.sum(hv * phi)

    def gradient(phi, value):
        g = lap_values(phi, grid, s)
        w = np.abs(g) ** (qp - 2.0) * g
        return np.where(inside, hv - value * lap_values(w, grid, s), 0.0)

    grad = gradient(phi, value)
    history = [value]
    step = None
    gap, it = np.inf, 0
    for it in range(1, max_iter + 1):
        d = apply_P(grad)
        slope = vol * np.sum(grad * d)
        if slope <= 0.0:
            gap = 0.0
            break
        if step is None:
            step = 1e-2 * np.sqrt(vol * np.sum(phi * phi) / (vol * np.sum(d * d)))
        for _ in range(60):
            trial = phi + step * d
            trial /= norm_qp(trial)
            tv = vol * np.sum(hv * trial)
            if tv >= value:
                break
            step *= 0.5
        else:
            gap = 0.0
            break
        new_grad = gradient(trial, tv)
        ds = trial - phi
        dy = grad - new_grad
        sy = vol * np.sum(ds * dy)
        yPy = vol * np.sum(dy * apply_P(dy))
        phi, value, grad = trial, tv, new_grad
        step = sy / yPy if sy > 0 and yPy > 0 else 2.0 * step
        history.append(value)
        if len(history) > 10:
            gap = (history[-1] - history[-11]) / abs(history[-1])
            if gap <= tol:
                break
    certified = gap <= tol
    upper = _holder_certificate(hv, phi, value, mask, s, q)
    return DualNormResult(float(value), GridFunction(grid, phi), it, float(gap),
                          bool(certified), float(upper))


def _holder_certificate(hv, phi, value, mask, s, q):
    """Upper bound ||G||_q for a G with mask * (-D)^{s/2} G = h.

    G starts from the optimality guess value * |g|^{q'-2} g, g = (-D)^{s/2} phi,
    and is corrected by (-D)^{s/2} v with v the Galerkin solution of the
    leftover, so that h[phi'] = <G, (-D)^{s/2} phi'> for every masked phi'.
    """
    grid = mask.grid
    qp = conjugate_exponent(q)
    g = lap_values(phi, grid, s)
    G = value * np.abs(g) ** (qp - 2.0) * g
    leftover = np.where(mask.inside, hv - lap_values(G, grid, s), 0.0)
    if np.any(leftover):
        v = solve_unconstrained(GridFunction(grid, leftover), mask, s, tol=1e-13).values
        G = G + lap_values(v, grid, s)
    return lp_values(G, grid.cell_volume, q)
