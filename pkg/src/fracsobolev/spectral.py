"""Fourier-multiplier operators on the periodic grid.

All symbols use the normalisation constant c = 1, so the order-s operator
has symbol ``|xi|**s``. The zero mode of ``|xi|**s`` and ``|xi|**-s`` is set
to 0, which makes :func:`frac_laplacian` and :func:`riesz_potential` mutually
inverse on mean-zero fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ParameterError, SizeError, ValidationError
from .grid import Grid, GridFunction

DENSE_LIMIT = 4096

ANNIHILATE = "annihilate"
PRESERVE = "preserve"


@dataclass(frozen=True)
class MultiplierSymbol:
    """Even, nonnegative Fourier symbol.

    ``evaluator`` receives the tuple of frequency component arrays
    ``(xi_1, ..., xi_N)`` and returns ``m(xi)`` with the same shape.
    """

    evaluator: Callable
    zero_mode_policy: str = PRESERVE

    def __post_init__(self):
        if self.zero_mode_policy not in (ANNIHILATE, PRESERVE):
            raise ValidationError(f"unknown zero_mode_policy {self.zero_mode_policy!r}")

    def on(self, grid: Grid) -> np.ndarray:
        """Symbol sampled on the rfft half-lattice, validated."""
        xi = grid.rfrequencies
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.asarray(self.evaluator(xi), dtype=float)
            m_neg = np.asarray(self.evaluator(tuple(-x for x in xi)), dtype=float)
        m = np.broadcast_to(m, xi[0].shape).copy()
        m_neg = np.broadcast_to(m_neg, xi[0].shape).copy()
        zero = (0,) * grid.dim
        if self.zero_mode_policy == ANNIHILATE:
            m[zero] = 0.0
            m_neg[zero] = 0.0
        if not np.all(np.isfinite(m)):
            raise ValidationError("symbol is not finite on the lattice")
        if np.any(m < 0):
            raise ValidationError("symbol must be nonnegative")
        if not np.allclose(m, m_neg, rtol=1e-12, atol=0.0):
            raise ValidationError("symbol must be even: m(xi) == m(-xi)")
        return m


def power_symbol(s: float) -> MultiplierSymbol:
    """``|xi|**s`` for any real s; the zero mode is annihilated."""
    return MultiplierSymbol(lambda xi: np.sqrt(sum(x**2 for x in xi)) ** s, ANNIHILATE)


@lru_cache(maxsize=256)
def _power_table(grid: Grid, s: float) -> np.ndarray:
    r = grid.rfreq_norm
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] ** s
    out.flags.writeable = False
    return out


@lru_cache(maxsize=256)
def _bessel_table(grid: Grid, s: float) -> np.ndarray:
    out = 1.0 / (1.0 + grid.rfreq_norm**s)
    out.flags.writeable = False
    return out


def _apply_table(values: np.ndarray, table: np.ndarray) -> np.ndarray:
    # rfftn/irfftn keep the result real; the Nyquist row is handled through |xi|.
    axes = tuple(range(values.ndim))
    return np.fft.irfftn(np.fft.rfftn(values, axes=axes) * table, s=values.shape, axes=axes)


def apply_multiplier(f: GridFunction, m: MultiplierSymbol) -> GridFunction:
    """Return ``F^{-1}(m(xi) F f)``."""
    return GridFunction(f.grid, _apply_table(f.values, m.on(f.grid)))


def _check_order(s, lo, hi, name, hi_closed=True):
    ok = lo < s <= hi if hi_closed else lo < s < hi
    if not (np.isfinite(s) and ok):
        bracket = "]" if hi_closed else ")"
        raise ParameterError(f"{name} requires s in ({lo}, {hi}{bracket}, got {s}")


def frac_laplacian(f: GridFunction, s: float) -> GridFunction:
    """(-Delta)^{s/2} f, symbol ``|xi|**s`` with s in (0, 2]."""
    _check_order(s, 0.0, 2.0, "frac_laplacian")
    return GridFunction(f.grid, _apply_table(f.values, _power_table(f.grid, float(s))))


def riesz_potential(f: GridFunction, s: float) -> GridFunction:
    """(-Delta)^{-s/2} f, symbol ``|xi|**-s`` with s in (0, N); mean is dropped."""
    _check_order(s, 0.0, f.grid.dim, "riesz_potential", hi_closed=False)
    return GridFunction(f.grid, _apply_table(f.values, _power_table(f.grid, -float(s))))


def bessel_inverse(f: GridFunction, s: float) -> GridFunction:
    """B_s = (I + (-Delta)^{s/2})^{-1}, symbol ``1/(1 + |xi|**s)``."""
    _check_order(s, 0.0, 2.0, "bessel_inverse", hi_closed=False)
    return GridFunction(f.grid, _apply_table(f.values, _bessel_table(f.grid, float(s))))


def lap_values(values: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    """Array-level (-Delta)^{s/2} without validation, for solver inner loops."""
    return _apply_table(values, _power_table(grid, float(s)))


def bessel_values(values: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    return _apply_table(values, _bessel_table(grid, float(s)))


def gaussian_values(values: np.ndarray, grid: Grid, width: float) -> np.ndarray:
    """Periodic smoothing with symbol ``exp(-width^2 |xi|^2)``."""
    return _apply_table(values, np.exp(-(width * grid.rfreq_norm) ** 2))


# --- dense oracle -----------------------------------------------------------

def _check_dense(grid: Grid, limit: int = DENSE_LIMIT):
    if grid.size > limit:
        raise SizeError(f"dense operator limited to M^N <= {limit}, grid has {grid.size} nodes")


def _displacement_kernel(grid: Grid, symbol_full: np.ndarray) -> np.ndarray:
    """Inverse DFT of a symbol by explicit cosine sums (no FFT)."""
    M = grid.M
    k = np.fft.fftfreq(M, d=1.0 / M)
    d = np.arange(M)
    E = np.exp(2j * np.pi * np.outer(d, k) / M)
    if grid.dim == 1:
        c = E @ symbol_full
    else:
        c = E @ symbol_full @ E.T
    return np.real(c) / grid.size


def kernel_matrix(grid: Grid, s: float) -> np.ndarray:
    """Dense circulant matrix K of (-Delta)^{s/2}: ``K @ f.ravel() == frac_laplacian(f, s)``.

    Built from the convolution kernel, i.e. the inverse discrete transform of
    ``|xi|**s`` evaluated by direct summation. Only for ``M**N <= 4096``.
    """
    _check_dense(grid)
    r = np.sqrt(sum(x**2 for x in grid.frequencies))
    sym = np.zeros_like(r)
    nz = r > 0
    sym[nz] = r[nz] ** s
    c = _displacement_kernel(grid, sym)
    M = grid.M
    idx = np.arange(M)
    diff = (idx[:, None] - idx[None, :]) % M
    if grid.dim == 1:
        return c[diff]
    # node (i1, i2) -> flat i1*M + i2
    d1 = diff[:, None, :, None]
    d2 = diff[None, :, None, :]
    return c[d1, d2].reshape(grid.size, grid.size)


def product_rule_remainder(f: GridFunction, g: GridFunction, s: float) -> GridFunction:
    """Bilinear remainder of the discrete fractional Leibniz rule.

    With K the dense kernel, ``R(x) = sum_{y != x} K(x-y) (f(x)-f(y)) (g(x)-g(y))``
    so that ``L(fg) = f L g + g L f + R`` holds exactly for ``L = K``. For a
    nonpositive off-diagonal kernel this is minus the weighted double
    difference, matching the continuum interaction term. Dense, so the grid
    must satisfy the oracle size limit.
    """
    if f.grid != g.grid:
        raise ValidationError("fields live on different grids")
    K = kernel_matrix(f.grid, s)
    fv, gv = f.values.ravel(), g.values.ravel()
    df = fv[:, None] - fv[None, :]
    dg = gv[:, None] - gv[None, :]
    off = K.copy()
    np.fill_diagonal(off, 0.0)
    R = np.sum(off * df * dg, axis=1)
    return GridFunction(f.grid, R)
