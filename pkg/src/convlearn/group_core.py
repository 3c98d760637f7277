"""
Finite abelian group grids and their harmonic analysis.

Two groups are supported:

* ``cyclic``: Z_N with the counting measure (each point has mass 1).
* ``torus``: the d-dimensional torus sampled on the uniform grid
  ``t_j = j / M`` with the normalized Haar measure (each point has mass
  ``1 / M**d``, total mass 1). Integrals become Riemann sums.

Conventions
-----------
Forward transform::

    (F x)_xi = w * sum_t x(t) conj(<xi, t>)

with ``w`` the per-point Haar weight and ``<xi, t> = exp(2 pi i xi . t)``.

Inverse transform::

    (F^-1 s)(t) = (1 / mass) * sum_xi s_xi <xi, t>

where ``mass = w * point_count`` is the total Haar mass. On the torus
``mass = 1`` and this is the plain character sum; on Z_N the ``1/N``
factor is what makes ``F^-1 F = id`` under the counting measure.

Parseval then reads ``||x||_2**2 = (1 / mass) * sum_xi |(F x)_xi|**2``.

Frequency layout
----------------
Spectra are stored in a *canonical* order:

* cyclic: ``0, 1, ..., N-1`` (same as ``numpy.fft``).
* torus: signed order ``-floor(M/2), ..., ceil(M/2)-1`` per axis
  (``numpy.fft.fftshift`` of the FFT layout).

:func:`to_fft_layout` / :func:`from_fft_layout` convert between the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GridMismatchError",
    "GroupGrid",
    "Signal",
    "Spectrum",
    "forward_transform",
    "inverse_transform",
    "forward_values",
    "inverse_values",
    "to_fft_layout",
    "from_fft_layout",
    "convolve",
    "translate",
    "involute",
    "lp_norm",
    "character",
    "delta",
    "circulant_matrix",
]


class GridMismatchError(ValueError):
    """Raised when two objects live on different grids."""


@dataclass(frozen=True)
class GroupGrid:
    """A discretized compact abelian group.

    Parameters
    ----------
    kind : {'cyclic', 'torus'}
        Group family.
    size : int
        ``N`` for Z_N, resolution ``M`` per axis for the torus.
    dim : int, default=1
        Torus dimension. Must be 1 for cyclic grids.
    """

    kind: str
    size: int
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("cyclic", "torus"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"grid size must be a positive integer, got {self.size}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"grid dimension must be a positive integer, got {self.dim}")
        if self.kind == "cyclic" and self.dim != 1:
            raise ValueError("cyclic grids are one-dimensional")
        if self.size ** self.dim < 2:
            raise ValueError("a grid needs at least 2 points")

    @classmethod
    def cyclic(cls, n: int) -> GroupGrid:
        return cls("cyclic", n, 1)

    @classmethod
    def torus(cls, m: int, dim: int = 1) -> GroupGrid:
        return cls("torus", m, dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.size,) * self.dim

    @property
    def point_count(self) -> int:
        return self.size ** self.dim

    @property
    def haar_weight(self) -> float:
        if self.kind == "cyclic":
            return 1.0
        return 1.0 / self.point_count

    @property
    def total_mass(self) -> float:
        return self.haar_weight * self.point_count

    @property
    def cell_width(self) -> float:
        """Spacing between neighbouring points in group coordinates."""
        return 1.0 if self.kind == "cyclic" else 1.0 / self.size

    def frequencies(self) -> np.ndarray:
        """Canonical frequency labels.

        Shape ``(P,)`` for one-dimensional grids and ``(P, d)`` otherwise.
        """
        if self.kind == "cyclic":
            return np.arange(self.size)
        axis = np.arange(-(self.size // 2), self.size - self.size // 2)
        if self.dim == 1:
            return axis
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def signed_frequencies(self) -> np.ndarray:
        """Frequencies as signed integers in ``[-floor(M/2), ceil(M/2) - 1]``.

        For the torus this equals :meth:`frequencies`. For Z_N index ``j``
        is mapped to its alias ``j - N`` when ``j >= ceil(N/2)``.
        """
        if self.kind == "torus":
            return self.frequencies()
        j = np.arange(self.size)
        return np.where(j >= self.size - self.size // 2, j - self.size, j)

    def abs_frequencies(self) -> np.ndarray:
        """``|xi|`` for every canonical frequency (Euclidean norm when d > 1)."""
        s = self.signed_frequencies()
        if s.ndim == 1:
            return np.abs(s).astype(float)
        return np.sqrt((s.astype(float) ** 2).sum(axis=1))

    def points(self) -> np.ndarray:
        """Grid point coordinates: integers for Z_N, ``j / M`` for the torus."""
        if self.kind == "cyclic":
            return np.arange(self.size)
        axis = np.arange(self.size) / self.size
        if self.dim == 1:
            return axis
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def index_of_frequency(self, xi) -> int:
        """Flat canonical position of a frequency label (aliased mod M)."""
        xi = np.atleast_1d(np.asarray(xi, dtype=int))
        if xi.shape != (self.dim,):
            raise ValueError(f"frequency must have {self.dim} components")
        if self.kind == "cyclic":
            return int(xi[0] % self.size)
        lo = self.size // 2
        pos = (xi + lo) % self.size
        return int(np.ravel_multi_index(tuple(pos), self.shape))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Signal:
    """A complex function on a grid, stored flat in row-major order."""

    grid: GroupGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            values = values.reshape(-1)
        if values.shape[0] != self.grid.point_count:
            raise ValueError(
                f"signal has {values.shape[0]} values but grid has "
                f"{self.grid.point_count} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("signal values must be finite")
        object.__setattr__(self, "values", _readonly(values))

    def __add__(self, other: Signal) -> Signal:
        _check_same_grid(self, other)
        return Signal(self.grid, self.values + other.values)

    def __sub__(self, other: Signal) -> Signal:
        _check_same_grid(self, other)
        return Signal(self.grid, self.values - other.values)

    def scale(self, c: complex) -> Signal:
        return Signal(self.grid, c * self.values)

    @property
    def real(self) -> np.ndarray:
        return self.values.real


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients in the grid's canonical frequency order."""

    grid: GroupGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs).reshape(-1)
        if coeffs.shape[0] != self.grid.point_count:
            raise ValueError(
                f"spectrum has {coeffs.shape[0]} coefficients but grid has "
                f"{self.grid.point_count} frequencies"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("spectrum coefficients must be finite")
        object.__setattr__(self, "coeffs", _readonly(coeffs))

    def at(self, xi) -> complex:
        return complex(self.coeffs[self.grid.index_of_frequency(xi)])


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def _axes(grid: GroupGrid) -> tuple[int, ...]:
    return tuple(range(-grid.dim, 0))


def to_fft_layout(grid: GroupGrid, coeffs: np.ndarray) -> np.ndarray:
    """Canonical order -> ``numpy.fft`` order. Leading axes are batch axes."""
    coeffs = np.asarray(coeffs)
    if grid.kind == "cyclic":
        return coeffs
    lead = coeffs.shape[:-1]
    c = coeffs.reshape(lead + grid.shape)
    c = np.fft.ifftshift(c, axes=_axes(grid))
    return c.reshape(lead + (grid.point_count,))


def from_fft_layout(grid: GroupGrid, coeffs: np.ndarray) -> np.ndarray:
    """``numpy.fft`` order -> canonical order. Leading axes are batch axes."""
    coeffs = np.asarray(coeffs)
    if grid.kind == "cyclic":
        return coeffs
    lead = coeffs.shape[:-1]
    c = coeffs.reshape(lead + grid.shape)
    c = np.fft.fftshift(c, axes=_axes(grid))
    return c.reshape(lead + (grid.point_count,))


def forward_values(grid: GroupGrid, values: np.ndarray) -> np.ndarray:
    """Batched forward transform on raw arrays of shape ``(..., P)``."""
    values = np.asarray(values)
    if values.shape[-1] != grid.point_count:
        raise ValueError(
            f"expected {grid.point_count} values per signal, got {values.shape[-1]}"
        )
    lead = values.shape[:-1]
    v = values.reshape(lead + grid.shape)
    f = np.fft.fftn(v, axes=_axes(grid)).reshape(lead + (grid.point_count,))
    return from_fft_layout(grid, f * grid.haar_weight)


def inverse_values(grid: GroupGrid, coeffs: np.ndarray) -> np.ndarray:
    """Batched inverse transform on raw arrays of shape ``(..., P)``."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] != grid.point_count:
        raise ValueError(
            f"expected {grid.point_count} coefficients per spectrum, got {coeffs.shape[-1]}"
        )
    lead = coeffs.shape[:-1]
    c = to_fft_layout(grid, coeffs).reshape(lead + grid.shape)
    v = np.fft.ifftn(c, axes=_axes(grid)).reshape(lead + (grid.point_count,))
    return v / grid.haar_weight


def forward_transform(x: Signal) -> Spectrum:
    return Spectrum(x.grid, forward_values(x.grid, x.values))


def inverse_transform(s: Spectrum) -> Signal:
    return Signal(s.grid, inverse_values(s.grid, s.coeffs))


def character(grid: GroupGrid, xi) -> Signal:
    """The sampled character ``e_xi(t) = <xi, t>``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (grid.dim,):
        raise ValueError(f"frequency must have {grid.dim} components")
    pts = grid.points().reshape(grid.point_count, -1).astype(float)
    if grid.kind == "cyclic":
        phase = 2 * np.pi * pts[:, 0] * xi[0] / grid.size
    else:
        phase = 2 * np.pi * pts @ xi
    return Signal(grid, np.exp(1j * phase))


def delta(grid: GroupGrid) -> Signal:
    """Indicator of the identity element (the convolution unit on Z_N)."""
    v = np.zeros(grid.point_count, dtype=complex)
    v[0] = 1.0
    return Signal(grid, v)


def convolve(x: Signal, y: Signal) -> Signal:
    """``(x * y)(t) = integral x(s) y(t - s) ds`` with the grid's Haar measure."""
    _check_same_grid(x, y)
    g = x.grid
    fx = forward_values(g, x.values)
    fy = forward_values(g, y.values)
    return Signal(g, inverse_values(g, fx * fy))


def _shift_vector(grid: GroupGrid, t) -> tuple[int, ...]:
    t = np.atleast_1d(np.asarray(t))
    if t.shape != (grid.dim,):
        raise ValueError(f"translation index must have {grid.dim} components")
    if not np.all(np.equal(np.mod(t, 1), 0)):
        raise ValueError("translation index must be integral")
    t = t.astype(int)
    if np.any(t < 0) or np.any(t >= grid.size):
        raise ValueError(f"translation index {tuple(t)} out of range [0, {grid.size})")
    return tuple(int(v) for v in t)


def translate(x: Signal, t) -> Signal:
    """``(T_t x)(s) = x(s - t)``; ``t`` is a grid index vector."""
    g = x.grid
    shift = _shift_vector(g, t)
    v = np.roll(x.values.reshape(g.shape), shift, axis=tuple(range(g.dim)))
    return Signal(g, v.reshape(-1))


def involute(x: Signal) -> Signal:
    """``x_check(t) = conj(x(-t))``."""
    g = x.grid
    v = x.values.reshape(g.shape)
    for ax in range(g.dim):
        v = np.roll(np.flip(v, axis=ax), 1, axis=ax)
    return Signal(g, np.conj(v).reshape(-1))


def lp_norm(x: Signal, p=2) -> float:
    """Haar-weighted discrete L^p norm for ``p`` in {1, 2, inf}."""
    a = np.abs(x.values)
    w = x.grid.haar_weight
    if p == 1:
        return float(w * a.sum())
    if p == 2:
        return float(np.sqrt(w * (a ** 2).sum()))
    if p in (np.inf, "inf", float("inf")):
        return float(a.max())
    raise ValueError(f"unsupported p={p!r}; use 1, 2 or inf")


def circulant_matrix(y: Signal) -> np.ndarray:
    """Dense matrix of ``x -> x * y`` on a one-dimensional grid.

    Column ``k`` is ``haar_weight * y(. - k)``. On Z_N this is the plain
    circulant matrix whose first column is ``y``.
    """
    g = y.grid
    if g.dim != 1:
        raise ValueError("circulant_matrix supports one-dimensional grids only")
    n = g.point_count
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return g.haar_weight * y.values[idx]
