"""
Ridge regression for convolution kernels.

For every frequency in the support of the weights the estimator solves a
scalar regularized least-squares problem::

    (F w)_xi = mean_i[(F Y_i)_xi conj((F X_i)_xi)]
               / (mean_i |(F X_i)_xi|^2 + lam / K[xi])

and sets ``(F w)_xi = 0`` elsewhere. :func:`fit_oracle_dense` solves the
same problem in the time domain with explicit circulant matrices and a
generic dense solver; it exists to check :func:`fit_spectral`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .group_core import (
    GridMismatchError,
    Signal,
    circulant_matrix,
    convolve,
    forward_values,
    inverse_values,
)
from .hypothesis_space import SpectralWeights
from .sampling import Dataset

__all__ = [
    "RateParams",
    "EstimatedKernel",
    "SpectralMoments",
    "spectral_moments",
    "fit_spectral",
    "fit_from_moments",
    "fit_oracle_dense",
    "theoretical_lambda",
    "LambdaSearch",
    "grid_search_lambda",
    "apply_operator",
    "DENSE_MAX_POINTS",
]

DENSE_MAX_POINTS = 256


@dataclass(frozen=True)
class RateParams:
    """Source exponent ``r``, capacity exponent ``b`` and ``kappa = D_X * D_K``."""

    r: float
    b: float
    kappa: float = 1.0

    def __post_init__(self):
        if not 0 <= self.r <= 0.5:
            raise ValueError(f"r must lie in [0, 1/2], got {self.r}")
        if not self.b >= 1:
            raise ValueError(f"b must be >= 1 (or inf), got {self.b}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    @property
    def inv_b(self) -> float:
        return 0.0 if math.isinf(self.b) else 1.0 / self.b


@dataclass(frozen=True, eq=False)
class EstimatedKernel:
    w_hat: Signal
    coeffs: np.ndarray
    lambda_used: float
    freq_cutoff: int | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class SpectralMoments:
    """Per-frequency empirical moments of a dataset.

    ``cross = mean_i FY_i conj(FX_i)`` and ``power = mean_i |FX_i|^2``.
    """

    grid: object
    cross: np.ndarray
    power: np.ndarray
    n: int


def spectral_moments(data: Dataset) -> SpectralMoments:
    fx = data.input_spectra()
    fy = data.output_spectra()
    cross = (fy * np.conj(fx)).mean(axis=0)
    power = (np.abs(fx) ** 2).mean(axis=0)
    return SpectralMoments(data.grid, cross, power, data.n)


def _cutoff_mask(K: SpectralWeights, freq_cutoff: int | None) -> np.ndarray:
    mask = K.support.copy()
    if freq_cutoff is not None:
        if freq_cutoff < 0:
            raise ValueError(f"freq_cutoff must be nonnegative, got {freq_cutoff}")
        mask &= K.grid.abs_frequencies() <= freq_cutoff
    return mask


def fit_from_moments(
    moments: SpectralMoments,
    K: SpectralWeights,
    lam: float,
    freq_cutoff: int | None = None,
) -> EstimatedKernel:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if moments.grid != K.grid:
        raise GridMismatchError("dataset and weights live on different grids")
    mask = _cutoff_mask(K, freq_cutoff)
    den = np.full(K.grid.point_count, np.inf)
    den[mask] = moments.power[mask] + lam / K.weights[mask]
    coeffs = np.zeros(K.grid.point_count, dtype=complex)
    coeffs[mask] = moments.cross[mask] / den[mask]
    coeffs.setflags(write=False)
    w = Signal(K.grid, inverse_values(K.grid, coeffs))
    return EstimatedKernel(
        w,
        coeffs,
        float(lam),
        freq_cutoff,
        {"denominators": den, "support_size": int(mask.sum()), "n": moments.n},
    )


def fit_spectral(
    data: Dataset,
    K: SpectralWeights,
    lam: float,
    freq_cutoff: int | None = None,
) -> EstimatedKernel:
    """Closed-form ridge estimate in the Fourier domain, ``O(n P log P)``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if data.grid != K.grid:
        raise GridMismatchError("dataset and weights live on different grids")
    return fit_from_moments(spectral_moments(data), K, lam, freq_cutoff)


def _dft_matrices(grid):
    """Dense forward/inverse transform matrices in canonical order."""
    n = grid.point_count
    freqs = grid.frequencies().astype(float)
    if grid.kind == "cyclic":
        phase = np.outer(freqs, np.arange(n)) / n
    else:
        phase = np.outer(freqs, grid.points())
    fwd = grid.haar_weight * np.exp(-2j * np.pi * phase)
    inv = np.exp(2j * np.pi * phase).T / grid.total_mass
    return fwd, inv


def fit_oracle_dense(data: Dataset, K: SpectralWeights, lam: float) -> EstimatedKernel:
    """Time-domain solve of the ridge normal equations (validation scale only).

    With ``C_i`` the matrix of ``x -> X_i * x`` and ``G = F^-1 diag(1/K) F``
    the H-penalty, solve::

        (mean_i C_i^H C_i + lam G) w = mean_i C_i^H Y_i

    over ``w`` in the span of ``f_xi = sqrt(K[xi]) e_xi``, ``xi`` in the
    support, using Galerkin coordinates and ``numpy.linalg.solve``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    g = data.grid
    if g != K.grid:
        raise GridMismatchError("dataset and weights live on different grids")
    if g.dim != 1:
        raise ValueError("the dense oracle supports one-dimensional grids")
    if g.point_count > DENSE_MAX_POINTS:
        raise ValueError(
            f"dense oracle limited to {DENSE_MAX_POINTS} points, grid has {g.point_count}"
        )
    n = g.point_count
    gram = np.zeros((n, n), dtype=complex)
    rhs = np.zeros(n, dtype=complex)
    for x, y in zip(data.inputs, data.outputs):
        c = circulant_matrix(x)
        gram += c.conj().T @ c
        rhs += c.conj().T @ y.values
    gram /= data.n
    rhs /= data.n

    fwd, inv = _dft_matrices(g)
    s = K.support
    # columns are the sampled H-orthonormal basis f_xi = sqrt(K_xi) e_xi;
    # scaling by sqrt(K) keeps the system well conditioned for fast-decaying K
    basis = inv[:, s] * g.total_mass * np.sqrt(K.weights[s])
    # G applied right to left, so the 1/K factors only meet the basis
    penalty_basis = inv[:, s] @ ((fwd[s, :] @ basis) / K.weights[s][:, None])
    system = basis.conj().T @ gram @ basis + lam * (basis.conj().T @ penalty_basis)
    coords = np.linalg.solve(system, basis.conj().T @ rhs)
    assert np.all(np.isfinite(coords)), "oracle system singular on the support"
    w = basis @ coords
    coeffs = fwd @ w
    coeffs[~s] = 0.0
    coeffs.setflags(write=False)
    return EstimatedKernel(
        Signal(g, w), coeffs, float(lam), None, {"support_size": int(s.sum()), "n": data.n}
    )


def theoretical_lambda(n: int, p: RateParams) -> float:
    """A-priori regularization ``(3 kappa^2 / 4) n^(-1/(2r + 1 + 1/b))``.

    When ``r = 0`` and ``b = inf`` the rule becomes ``(3 kappa^2/4) ln(n)^2 / n``.
    """
    if not n >= 3:
        raise ValueError(f"n must be at least 3, got {n}")
    pre = 0.75 * p.kappa ** 2
    if p.r == 0 and math.isinf(p.b):
        return pre * math.log(n) ** 2 / n
    return pre * n ** (-1.0 / (2 * p.r + 1 + p.inv_b))


@dataclass(frozen=True, eq=False)
class LambdaSearch:
    lam: float
    lambdas: np.ndarray
    scores: np.ndarray
    sigma_max: float
    criterion: str


def _argmin_smallest(lambdas, scores, rtol=1e-12) -> int:
    best = float(np.min(scores))
    tied = np.flatnonzero(scores <= best + rtol * abs(best))
    return int(tied[np.argmin(lambdas[tied])])


def grid_search_lambda(
    data: Dataset,
    K: SpectralWeights,
    *,
    lo_mult: float = 1e-3,
    hi_mult: float = 1e-1,
    count: int = 20,
    criterion: str | Callable = "oracle_h",
    w_star: Signal | None = None,
    freq_cutoff: int | None = None,
    holdout_fraction: float = 0.25,
    lambdas=None,
) -> LambdaSearch:
    """Pick ``lam`` from ``sigma_max * logspace(lo_mult, hi_mult, count)``.

    ``sigma_max = max_xi K[xi] * mean_i |(F X_i)_xi|^2``. Criteria:

    ``'oracle_h'``
        squared H-distance to a known ``w_star``.
    ``'oracle_l2'``
        L2 distance to ``w_star``.
    ``'holdout'``
        mean squared residual on the last ``holdout_fraction`` of pairs
        after fitting on the rest.
    callable
        ``criterion(estimate) -> float``.

    Ties (within 1e-12 relative) go to the smallest lambda.
    """
    from . import metrics  # local import: metrics depends on this module

    moments = spectral_moments(data)
    sigma_max = float(np.max(K.weights * moments.power))
    if lambdas is None:
        if count < 1:
            raise ValueError("count must be at least 1")
        if not (lo_mult > 0 and hi_mult >= lo_mult):
            raise ValueError("need 0 < lo_mult <= hi_mult")
        if count == 1:
            mults = np.array([lo_mult])
        else:
            mults = np.logspace(math.log10(lo_mult), math.log10(hi_mult), count)
        lambdas = sigma_max * mults
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0):
        raise ValueError("all candidate lambdas must be positive")

    if criterion in ("oracle_h", "oracle_l2") and w_star is None:
        raise ValueError(f"criterion {criterion!r} needs the true kernel w_star")

    if criterion == "holdout":
        n_hold = max(1, int(round(holdout_fraction * data.n)))
        if n_hold >= data.n:
            raise ValueError("holdout split leaves no training pairs")
        train = data.subset(range(data.n - n_hold))
        test = data.subset(range(data.n - n_hold, data.n))
        train_m = spectral_moments(train)
        fx_test = test.input_spectra()
        fy_test = test.output_spectra()

    scores = np.empty(len(lambdas))
    for k, lam in enumerate(lambdas):
        if criterion == "holdout":
            est = fit_from_moments(train_m, K, lam, freq_cutoff)
            resid = fy_test - fx_test * est.coeffs
            scores[k] = float((np.abs(resid) ** 2).sum(axis=1).mean()) / K.grid.total_mass
            continue
        est = fit_from_moments(moments, K, lam, freq_cutoff)
        if criterion == "oracle_h":
            scores[k] = metrics.h_error_sq(est.w_hat, w_star, K)
        elif criterion == "oracle_l2":
            scores[k] = metrics.operator_error(est.w_hat, w_star)
        elif callable(criterion):
            scores[k] = float(criterion(est))
        else:
            raise ValueError(f"unknown criterion {criterion!r}")
    best = _argmin_smallest(lambdas, scores)
    name = criterion if isinstance(criterion, str) else getattr(criterion, "__name__", "custom")
    return LambdaSearch(float(lambdas[best]), lambdas, scores, sigma_max, name)


def apply_operator(w: Signal, x: Signal) -> Signal:
    """The learned operator applied to ``x``: ``x * w``."""
    return convolve(x, w)
