"""Discrete L^p norms, H^{s,p} seminorms and inequality diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError, ValidationError
from .grid import DomainMask, GridFunction
from .spectral import frac_laplacian
from .vi import _pcg, masked_operator


@dataclass(frozen=True)
class NormParams:
    s: float
    p: float

    def __post_init__(self):
        if not (np.isfinite(self.s) and 0.0 < self.s <= 1.0):
            raise ParameterError(f"s must lie in (0, 1], got {self.s}")
        if not (np.isfinite(self.p) and self.p > 1.0):
            raise ParameterError(f"p must lie in (1, inf), got {self.p}")

    @property
    def conjugate(self) -> float:
        return conjugate_exponent(self.p)


def conjugate_exponent(p: float) -> float:
    """Hoelder conjugate p' = p / (p - 1)."""
    if not p > 1.0:
        raise ParameterError(f"conjugate exponent needs p > 1, got {p}")
    return p / (p - 1.0)


def lp_values(values: np.ndarray, cell_volume: float, p: float) -> float:
    a = np.abs(values)
    top = a.max(initial=0.0)
    if top == 0.0:
        return 0.0
    # rescale to keep |a|^p in range for large p
    return float(top * (cell_volume * np.sum((a / top) ** p)) ** (1.0 / p))


def lp_norm(f: GridFunction, p: float) -> float:
    """(spacing^N sum |f|^p)^(1/p)."""
    if not (np.isfinite(p) and p >= 1.0):
        raise ParameterError(f"p must be >= 1, got {p}")
    return lp_values(f.values, f.grid.cell_volume, p)


def hsp_seminorm(f: GridFunction, params: NormParams) -> float:
    """||(-Delta)^{s/2} f||_{L^p}."""
    return lp_norm(frac_laplacian(f, params.s), params.p)


def poincare_constant(mask: DomainMask, s: float, rtol: float = 1e-8,
                      max_iter: int = 10_000) -> float:
    """Best constant C in ||f||_2 <= C ||(-Delta)^{s/2} f||_2 over fields vanishing off Omega.

    C = lambda_min^{-1/2} for the masked operator (-Delta)^s, found by inverse
    power iteration with the Galerkin solver.
    """
    if not (np.isfinite(s) and 0.0 < s <= 1.0):
        raise ParameterError(f"s must lie in (0, 1], got {s}")
    inside = mask.inside
    apply_A, apply_P = masked_operator(mask, s)
    # smooth positive start has overlap with the ground state
    x = np.where(inside, 1.0, 0.0)
    x /= np.linalg.norm(x)
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        y, _, _ = _pcg(apply_A, apply_P, x, 1e-13, 50_000)
        x = y / np.linalg.norm(y)
        lam = float(np.vdot(x, apply_A(x)))
        if abs(lam - lam_old) <= rtol * lam:
            return 1.0 / np.sqrt(lam)
        lam_old = lam
    raise ConvergenceError("inverse power iteration did not converge",
                           iterations=max_iter, eigenvalue=lam)


def holder_type_check(phi: GridFunction, mask: DomainMask, s: float, q: float,
                      p: float) -> tuple[float, float]:
    """(||(-D)^{s/2} phi||_q, ||(-D)^{s/2} phi||_p) for a field supported in Omega."""
    if not 1.0 < q < p:
        raise ParameterError(f"need 1 < q < p, got q={q}, p={p}")
    if not mask.contains(phi):
        raise ValidationError("phi must vanish outside Omega")
    g = frac_laplacian(phi, s)
    return lp_norm(g, q), lp_norm(g, p)


def brezis_lieb_defect(f_seq, f: GridFunction, p: float) -> list[float]:
    """d_k = | ||f_k||_p^p - ||f||_p^p - ||f_k - f||_p^p |."""
    f_seq = list(f_seq)
    if not f_seq:
        raise ValidationError("brezis_lieb_defect needs a non-empty sequence")
    if not (np.isfinite(p) and p > 1.0):
        raise ParameterError(f"p must lie in (1, inf), got {p}")
    base = lp_norm(f, p) ** p
    out = []
    for fk in f_seq:
        if fk.grid != f.grid:
            raise ValidationError("sequence elements live on different grids")
        out.append(abs(lp_norm(fk, p) ** p - base - lp_norm(fk - f, p) ** p))
    return out


def sobolev_exponent(dim: int, s: float, t: float, p: float, cap: float = 8.0) -> float:
    """Target exponent N p / (N - (s - t) p) of the Sobolev embedding, capped at ``cap``.

    The critical and supercritical cases (denominator <= 0) return ``cap``.
    """
    den = dim - (s - t) * p
    if den <= 0:
        return cap
    return min(dim * p / den, cap)


def sobolev_ratio(f: GridFunction, s: float, t: float, p: float = 2.0,
                  cap: float = 8.0) -> float:
    """||(-D)^{t/2} f||_r / ||(-D)^{s/2} f||_p with r from :func:`sobolev_exponent`."""
    r = sobolev_exponent(f.grid.dim, s, t, p, cap)
    den = hsp_seminorm(f, NormParams(s, p))
    if den == 0.0:
        return 0.0
    return lp_norm(frac_laplacian(f, t), r) / den
