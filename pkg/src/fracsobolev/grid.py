"""Periodic box grids, fields on them, and domain masks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParameterError, ValidationError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the torus ``[-L, L)^dim`` with ``M`` points per axis."""

    dim: int
    half_width: float
    points_per_dim: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError(f"dim must be 1 or 2, got {self.dim}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ParameterError(f"half_width must be positive, got {self.half_width}")
        M = self.points_per_dim
        if M < 8 or M & (M - 1):
            raise ParameterError(f"points_per_dim must be a power of two >= 8, got {M}")
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def M(self) -> int:
        return self.points_per_dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_dim**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def measure(self) -> float:
        return (2.0 * self.half_width) ** self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_dim)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates, one array of ``shape`` per axis."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def frequencies(self) -> tuple[np.ndarray, ...]:
        """Full lattice xi_k = (pi/L) k, k in [-M/2, M/2), in FFT order."""
        k = np.fft.fftfreq(self.M, d=1.0 / self.M)
        xi = np.pi / self.half_width * k
        return tuple(np.meshgrid(*([xi] * self.dim), indexing="ij"))

    @cached_property
    def rfrequencies(self) -> tuple[np.ndarray, ...]:
        """Half lattice matching ``numpy.fft.rfftn`` output layout."""
        k_full = np.fft.fftfreq(self.M, d=1.0 / self.M)
        k_half = np.fft.rfftfreq(self.M, d=1.0 / self.M)
        axes = [k_full] * (self.dim - 1) + [k_half]
        scale = np.pi / self.half_width
        return tuple(scale * a for a in np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def rfreq_norm(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.rfrequencies))

    @property
    def max_frequency(self) -> float:
        """Largest |xi| on the lattice (corner of the Nyquist box)."""
        return np.pi * self.M / (2.0 * self.half_width) * np.sqrt(self.dim)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(self.cell_volume * np.sum(a * b))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape))

    def constant(self, value: float) -> "GridFunction":
        return GridFunction(self, np.full(self.shape, float(value)))

    def sample(self, fn) -> "GridFunction":
        """Evaluate ``fn(*coords)`` on the nodes."""
        return GridFunction(self, np.broadcast_to(fn(*self.coords), self.shape))

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Build a grid from the ``dim:L:M`` shorthand."""
        try:
            dim, L, M = text.split(":")
            return cls(int(dim), float(L), int(M))
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"grid shorthand must be dim:L:M, got {text!r}") from exc


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real field on a grid. ``values`` has shape ``grid.shape`` and is read-only.

    A dual element h is stored through its density, so that
    ``h[phi] = spacing**dim * sum(h * phi)``.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValidationError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValidationError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValidationError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def pair(self, other: "GridFunction") -> float:
        """Weighted pairing ``spacing^N * sum(self * other)``."""
        return self.grid.inner(self.values, self._other(other))

    def mean(self) -> float:
        return float(self.values.mean())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"GridFunction(grid={self.grid!r}, max|v|={self.max_abs():.3g})"


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Indicator of the open set Omega on the grid nodes."""

    grid: Grid
    inside: np.ndarray

    def __post_init__(self):
        inside = np.array(self.inside, dtype=bool)
        if inside.size != self.grid.size:
            raise ValidationError(f"expected {self.grid.size} mask entries, got {inside.size}")
        inside = inside.reshape(self.grid.shape)
        n_in = int(inside.sum())
        if n_in == 0:
            raise ValidationError("mask has no inside nodes (empty domain)")
        if n_in == inside.size:
            raise ValidationError("mask covers the whole torus; Omega must be a strict subset")
        half = self.grid.half_width / 2.0
        for x in self.grid.coords:
            if np.any(inside & ((x < -half) | (x >= half))):
                raise ValidationError("mask nodes must lie in the central sub-box [-L/2, L/2)^N")
        inside.flags.writeable = False
        object.__setattr__(self, "inside", inside)

    @property
    def count(self) -> int:
        return int(self.inside.sum())

    @property
    def weights(self) -> np.ndarray:
        return self.inside.astype(float)

    def apply(self, f: GridFunction) -> GridFunction:
        """Zero extension of ``f`` restricted to Omega."""
        return GridFunction(f.grid, np.where(self.inside, f.values, 0.0))

    def contains(self, f: GridFunction, atol: float = 0.0) -> bool:
        """True when ``f`` vanishes outside Omega."""
        return bool(np.all(np.abs(f.values[~self.inside]) <= atol))

    @classmethod
    def interval(cls, grid: Grid, a: float, b: float) -> "DomainMask":
        """Open interval (a, b) on a 1D grid, or the box (a, b)^N in higher dim."""
        inside = np.ones(grid.shape, dtype=bool)
        for x in grid.coords:
            inside &= (x > a) & (x < b)
        return cls(grid, inside)

    @classmethod
    def box(cls, grid: Grid, bounds) -> "DomainMask":
        """Product of open intervals; ``bounds`` is one (a, b) pair per axis."""
        if len(bounds) != grid.dim:
            raise ValidationError(f"need {grid.dim} interval bounds, got {len(bounds)}")
        inside = np.ones(grid.shape, dtype=bool)
        for x, (a, b) in zip(grid.coords, bounds):
            inside &= (x > a) & (x < b)
        return cls(grid, inside)

    @classmethod
    def ball(cls, grid: Grid, center, radius: float) -> "DomainMask":
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, np.broadcast_to(center, (grid.dim,))))
        return cls(grid, r2 < radius**2)


def bump(grid: Grid, center=0.0, radius: float = 1.0, amplitude: float = 1.0) -> GridFunction:
    """Smooth compactly supported bump ``a * exp(1 - 1/(1 - r^2/R^2))``, peak value ``a``."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    rho2 = sum((x - c) ** 2 for x, c in zip(grid.coords, center)) / radius**2
    out = np.zeros(grid.shape)
    inside = rho2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return GridFunction(grid, out)


def random_field(grid: Grid, rng: np.random.Generator, mask: DomainMask | None = None,
                 smooth: float | None = None) -> GridFunction:
    """Standard normal nodal values, optionally low-pass filtered and masked."""
    v = rng.standard_normal(grid.shape)
    if smooth is not None:
        axes = tuple(range(grid.dim))
        v = np.fft.irfftn(np.fft.rfftn(v, axes=axes) * np.exp(-(smooth * grid.rfreq_norm) ** 2),
                          s=grid.shape, axes=axes)
    f = GridFunction(grid, v)
    return mask.apply(f) if mask is not None else f
