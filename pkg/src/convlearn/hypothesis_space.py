"""
Translation-invariant Hilbert spaces defined by spectral weights.

A nonnegative weight sequence ``K[xi]`` defines

    H = { w : sum_xi |(F w)_xi|^2 / K[xi] < inf },
    <w, v>_H = sum_{xi in supp K} (F w)_xi conj((F v)_xi) / K[xi],

with ``(F w)_xi = 0`` required wherever ``K[xi] = 0``.

Weight families use ``|xi|`` from :meth:`GroupGrid.abs_frequencies`, so
they work on Z_N (through the signed alias of each index) as well as on
the torus. Infinite families are truncated at the grid's Nyquist band;
:func:`fourier_tail_bound` reports the mass that truncation drops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .group_core import GroupGrid, Signal, forward_values, inverse_values

__all__ = [
    "SupportError",
    "SpectralWeights",
    "sobolev_weights",
    "exponential_weights",
    "exponential_base",
    "trig_poly_weights",
    "custom_weights",
    "weights_from_config",
    "h_inner",
    "h_norm",
    "basis_function",
    "kernel_function",
    "closed_form_kernel",
    "fourier_tail_bound",
    "kernel_tail_correction",
    "riemann_zeta",
]

SUPPORT_TOL = 1e-10


class SupportError(ValueError):
    """A function has Fourier mass outside the support of the weights."""

    def __init__(self, frequency, magnitude):
        self.frequency = frequency
        self.magnitude = magnitude
        super().__init__(
            f"function is not in H: |coefficient| = {magnitude:.3e} at "
            f"frequency {frequency} where the weight vanishes"
        )


@dataclass(frozen=True, eq=False)
class SpectralWeights:
    """Weights ``K[xi]`` in canonical frequency order.

    ``family`` and ``params`` record how the weights were built so that
    closed-form kernels and tail bounds can be looked up later.
    """

    grid: GroupGrid
    weights: np.ndarray
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != self.grid.point_count:
            raise ValueError(
                f"{w.shape[0]} weights for a grid with {self.grid.point_count} frequencies"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(w > 0):
            raise ValueError("weights vanish everywhere; H would be trivial")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of ``{xi : K[xi] > 0}``."""
        return self.weights > 0

    @property
    def support_size(self) -> int:
        return int(self.support.sum())

    @property
    def bound(self) -> float:
        """``D_K``, the square root of the largest weight."""
        return math.sqrt(float(self.weights.max()))

    def inverse(self) -> np.ndarray:
        """``1 / K`` on the support and ``inf`` off it."""
        with np.errstate(divide="ignore"):
            return np.where(self.support, 1.0 / np.where(self.support, self.weights, 1.0), np.inf)


def riemann_zeta(x: float) -> float:
    """Riemann zeta for real ``x > 1``."""
    if x <= 1:
        raise ValueError("zeta series diverges for x <= 1")
    return float(special.zeta(x, 1))


def sobolev_weights(s: float, grid: GroupGrid) -> SpectralWeights:
    """Periodic Sobolev ``H^s`` weights.

    ``K[0] = 1/2`` and ``K[l] = |l|^(-2s) / (4 zeta(2s))`` otherwise. The
    normalization needs ``zeta(2s)`` to converge, so ``s`` must exceed 1/2.
    """
    if not s > 0:
        raise ValueError(f"Sobolev order must be positive, got {s}")
    if s <= 0.5:
        raise ValueError(f"Sobolev normalization needs s > 1/2 (zeta(2s) diverges), got {s}")
    a = grid.abs_frequencies()
    c = 1.0 / (4.0 * riemann_zeta(2 * s))
    with np.errstate(divide="ignore"):
        w = np.where(a == 0, 0.5, c * np.where(a == 0, 1.0, a) ** (-2 * s))
    return SpectralWeights(grid, w, "sobolev", {"s": float(s)})


def exponential_base(gamma: float) -> float:
    """Geometric base ``b`` for the exponential family at parameter gamma."""
    return (gamma + 1) + math.sqrt(gamma * (gamma + 2))


def exponential_weights(gamma: float | None, grid: GroupGrid, *, base: float | None = None) -> SpectralWeights:
    """Exponentially decaying weights ``K[l] = (b-1)/(b+1) * b^(-|l|)``.

    Either ``gamma > 0`` or ``base > 1`` must be given; they are related
    by ``gamma = (b - 1)**2 / (2 b)``. Summing the series gives the kernel
    ``g / (g + sin(pi t)**2)`` with ``g = (b - 1)**2 / (4 b)``, stored as
    ``params["kernel_gamma"]``.
    """
    if (gamma is None) == (base is None):
        raise ValueError("give exactly one of gamma or base")
    if base is None:
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        b = exponential_base(gamma)
    else:
        b = float(base)
        if not b > 1:
            raise ValueError(f"base must exceed 1, got {b}")
        gamma = (b - 1) ** 2 / (2 * b)
    a = grid.abs_frequencies()
    w = (b - 1) / (b + 1) * np.power(b, -a)
    params = {"gamma": float(gamma), "b": b, "kernel_gamma": (b - 1) ** 2 / (4 * b)}
    return SpectralWeights(grid, w, "exponential", params)


def trig_poly_weights(n_cut: int, grid: GroupGrid) -> SpectralWeights:
    """Uniform weights ``1/(2 N + 1)`` on ``|l| <= N``, zero elsewhere."""
    if int(n_cut) != n_cut or n_cut < 0:
        raise ValueError(f"n_cut must be a nonnegative integer, got {n_cut}")
    if grid.dim != 1:
        raise ValueError("trigonometric polynomial weights are one-dimensional")
    n_cut = int(n_cut)
    top = grid.size - grid.size // 2 - 1
    if n_cut > top:
        raise ValueError(f"n_cut={n_cut} exceeds the largest symmetric frequency {top} of the grid")
    a = grid.abs_frequencies()
    w = np.where(a <= n_cut, 1.0 / (2 * n_cut + 1), 0.0)
    return SpectralWeights(grid, w, "trigpoly", {"n_cut": n_cut})


def custom_weights(values, grid: GroupGrid) -> SpectralWeights:
    return SpectralWeights(grid, np.asarray(values, dtype=float), "custom", {})


def weights_from_config(spec: dict, grid: GroupGrid) -> SpectralWeights:
    """Build weights from ``{"sobolev": {"s": 1}}``-style mappings."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"weights must be a single-key mapping, got {spec!r}")
    (family, params), = spec.items()
    params = dict(params or {})
    allowed = {
        "sobolev": {"s"},
        "exponential": {"gamma", "b"},
        "trigpoly": {"n_cut"},
        "custom": {"values"},
    }
    if family not in allowed:
        raise ValueError(f"unknown weight family {family!r}")
    extra = set(params) - allowed[family]
    if extra:
        raise ValueError(f"unknown parameters for {family}: {sorted(extra)}")
    if family == "sobolev":
        return sobolev_weights(params.get("s", 1.0), grid)
    if family == "exponential":
        return exponential_weights(params.get("gamma"), grid, base=params.get("b"))
    if family == "trigpoly":
        return trig_poly_weights(params["n_cut"], grid)
    return custom_weights(params["values"], grid)


def _check_in_h(coeffs: np.ndarray, K: SpectralWeights, tol: float = SUPPORT_TOL):
    off = ~K.support
    if np.any(off):
        mags = np.abs(coeffs[..., off]).reshape(-1, off.sum()).max(axis=0)
        worst = int(np.argmax(mags))
        if mags[worst] > tol:
            freq = K.grid.frequencies()[np.flatnonzero(off)[worst]]
            raise SupportError(np.asarray(freq).tolist(), float(mags[worst]))


def h_inner_coeffs(c1: np.ndarray, c2: np.ndarray, K: SpectralWeights) -> complex:
    """``<w1, w2>_H`` from canonical Fourier coefficients."""
    _check_in_h(c1, K)
    _check_in_h(c2, K)
    s = K.support
    return complex(np.sum(c1[s] * np.conj(c2[s]) / K.weights[s]))


def h_inner(w1: Signal, w2: Signal, K: SpectralWeights) -> complex:
    if w1.grid != K.grid or w2.grid != K.grid:
        raise ValueError("signals and weights must share a grid")
    return h_inner_coeffs(forward_values(K.grid, w1.values), forward_values(K.grid, w2.values), K)


def h_norm(w: Signal, K: SpectralWeights) -> float:
    return math.sqrt(max(h_inner(w, w, K).real, 0.0))


def basis_function(K: SpectralWeights, xi) -> Signal:
    """Orthonormal basis element ``f_xi = K[xi]^(1/2) e_xi`` of H."""
    idx = K.grid.index_of_frequency(xi)
    if not K.support[idx]:
        raise SupportError(np.atleast_1d(xi).tolist(), 1.0)
    c = np.zeros(K.grid.point_count, dtype=complex)
    c[idx] = math.sqrt(K.weights[idx])
    return Signal(K.grid, inverse_values(K.grid, c))


def kernel_function(K: SpectralWeights) -> Signal:
    """``k = F^-1 K`` sampled on the grid.

    On the torus this is the truncated character sum ``sum_l K[l] e_l``.
    """
    return Signal(K.grid, inverse_values(K.grid, K.weights.astype(complex)))


def closed_form_kernel(K: SpectralWeights, t) -> np.ndarray:
    """Untruncated kernel of a named family at torus points ``t`` in [0, 1)."""
    t = np.asarray(t, dtype=float)
    if K.family == "sobolev":
        if K.params["s"] != 1.0:
            raise ValueError("closed form known only for s = 1")
        return 3 * t ** 2 - 3 * t + 1
    if K.family == "exponential":
        g = K.params["kernel_gamma"]
        return g / (g + np.sin(np.pi * t) ** 2)
    if K.family == "trigpoly":
        n = 2 * K.params["n_cut"] + 1
        num = np.sin(np.pi * n * t)
        den = n * np.sin(np.pi * t)
        at_int = np.isclose(np.sin(np.pi * t), 0.0, atol=1e-15)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(at_int, 1.0, num / np.where(at_int, 1.0, den))
        return out
    raise ValueError(f"no closed form for family {K.family!r}")


def _missing_frequency_ranges(grid: GroupGrid) -> tuple[int, int]:
    """First positive and first negative (in absolute value) frequency not on the grid."""
    m = grid.size
    hi = m - m // 2 - 1
    lo = m // 2
    return hi + 1, lo + 1


def fourier_tail_bound(K: SpectralWeights) -> float:
    """``sum_{l not on grid} K[l]`` for the untruncated family (1-D torus)."""
    g = K.grid
    if g.dim != 1:
        raise ValueError("tail bounds are implemented for one-dimensional grids")
    pos, neg = _missing_frequency_ranges(g)
    if K.family == "sobolev":
        s2 = 2 * K.params["s"]
        c = 1.0 / (4.0 * riemann_zeta(s2))
        return c * float(special.zeta(s2, pos) + special.zeta(s2, neg))
    if K.family == "exponential":
        b = K.params["b"]
        a = (b - 1) / (b + 1)
        return a * (b ** (-pos) + b ** (-neg)) / (1 - 1 / b)
    if K.family == "trigpoly":
        return 0.0
    raise ValueError(f"no tail bound for family {K.family!r}")


def kernel_tail_correction(K: SpectralWeights, t) -> np.ndarray:
    """Exact contribution of the off-grid frequencies for the exponential family.

    Adding this to :func:`kernel_function` recovers the untruncated kernel.
    """
    if K.family != "exponential":
        raise ValueError("geometric tail correction applies to the exponential family")
    t = np.asarray(t, dtype=float)
    b = K.params["b"]
    a = (b - 1) / (b + 1)
    pos, neg = _missing_frequency_ranges(K.grid)
    z = np.exp(2j * np.pi * t) / b
    zc = np.conj(z)
    return (a * (z ** pos / (1 - z) + zc ** neg / (1 - zc))).real
