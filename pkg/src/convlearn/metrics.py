"""
Error functionals, covariance spectra and rate fitting.

With ``m[xi] = E |(F X)_xi|^2`` the input second moments and
``sigma[xi] = K[xi] * m[xi]`` the covariance eigenvalues:

* ``h_error_sq``: ``||w_hat - w*||_H^2``.
* ``prediction_error_sq``: ``E ||(w_hat - w*) * X||_2^2
  = (1 / mass) * sum_xi m[xi] |(F w_hat)_xi - (F w*)_xi|^2``.
  The ``1/mass`` factor is 1 on the torus; on Z_N it is the Parseval
  constant of the counting measure.
* ``operator_error``: ``||C_w_hat - C_w*||_{L1 -> L2} = ||w_hat - w*||_2``.

On any grid these satisfy::

    prediction_error_sq <= max(m) * operator_error**2
                        <= D_K**2 * D_X**2 * h_error_sq
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .group_core import GridMismatchError, GroupGrid, Signal, forward_values
from .hypothesis_space import SpectralWeights, _check_in_h
from .sampling import Dataset, FrequencyLocalized, SpaceLocalized, frequency_probabilities
from .estimator import RateParams

__all__ = [
    "CovarianceSpectrum",
    "RateReport",
    "covariance_analytic",
    "covariance_empirical",
    "h_error_sq",
    "prediction_error_sq",
    "empirical_prediction_error_sq",
    "operator_error",
    "theoretical_exponents",
    "fit_rate",
    "source_condition_sum",
    "covariance_decay_slope",
    "default_rate_params",
]


@dataclass(frozen=True, eq=False)
class CovarianceSpectrum:
    grid: GroupGrid
    sigma: np.ndarray
    second_moment: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("sigma", "second_moment"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (self.grid.point_count,):
                raise ValueError(f"{name} has shape {a.shape}, expected ({self.grid.point_count},)")
            if np.any(a < 0):
                raise ValueError(f"{name} must be nonnegative")
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)


@dataclass(frozen=True, eq=False)
class RateReport:
    ns: np.ndarray
    mean_errors: np.ndarray
    fitted_slope: float
    intercept: float
    residual: float
    theory_slope: float | None = None

    def as_dict(self) -> dict:
        return {
            "ns": [int(n) for n in self.ns],
            "mean_errors": [float(e) for e in self.mean_errors],
            "fitted_slope": self.fitted_slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "theory_slope": self.theory_slope,
        }


def _sinc(x):
    """Unnormalized ``sin(x) / x`` with ``sinc(0) = 1``."""
    return np.sinc(np.asarray(x) / np.pi)


def covariance_analytic(dist, K: SpectralWeights) -> CovarianceSpectrum:
    """Closed-form covariance for the two localization families."""
    g = K.grid
    if isinstance(dist, FrequencyLocalized):
        m = frequency_probabilities(dist, g)
    elif isinstance(dist, SpaceLocalized):
        if g.dim != 1:
            raise ValueError("space-localized covariance is one-dimensional")
        m = _sinc(2 * np.pi * dist.delta * g.signed_frequencies()) ** 2
    else:
        raise ValueError(f"no analytic covariance for {dist!r}; use covariance_empirical")
    return CovarianceSpectrum(g, K.weights * m, m, {"analytic": dist.describe()})


def covariance_empirical(data: Dataset, K: SpectralWeights) -> CovarianceSpectrum:
    if data.grid != K.grid:
        raise GridMismatchError("dataset and weights live on different grids")
    m = (np.abs(data.input_spectra()) ** 2).mean(axis=0)
    return CovarianceSpectrum(K.grid, K.weights * m, m, {"empirical": data.n})


def _diff_coeffs(w_hat: Signal, w_star: Signal) -> np.ndarray:
    if w_hat.grid != w_star.grid:
        raise GridMismatchError("kernels live on different grids")
    return forward_values(w_hat.grid, w_hat.values - w_star.values)


def h_error_sq(w_hat: Signal, w_star: Signal, K: SpectralWeights) -> float:
    if w_hat.grid != K.grid:
        raise GridMismatchError("kernels and weights live on different grids")
    d = _diff_coeffs(w_hat, w_star)
    _check_in_h(d, K)
    s = K.support
    return float(np.sum(np.abs(d[s]) ** 2 / K.weights[s]))


def prediction_error_sq(w_hat: Signal, w_star: Signal, cov: CovarianceSpectrum) -> float:
    if w_hat.grid != cov.grid:
        raise GridMismatchError("kernels and covariance live on different grids")
    d = _diff_coeffs(w_hat, w_star)
    return float(np.sum(cov.second_moment * np.abs(d) ** 2) / cov.grid.total_mass)


def empirical_prediction_error_sq(w_hat: Signal, w_star: Signal, inputs) -> float:
    """``mean_j ||(w_hat - w*) * X_j||_2^2`` computed in the time domain."""
    from .group_core import convolve, lp_norm

    diff = w_hat - w_star
    return float(np.mean([lp_norm(convolve(x, diff), 2) ** 2 for x in inputs]))


def operator_error(w_hat: Signal, w_star: Signal) -> float:
    if w_hat.grid != w_star.grid:
        raise GridMismatchError("kernels live on different grids")
    d = w_hat.values - w_star.values
    return float(np.sqrt(w_hat.grid.haar_weight * np.sum(np.abs(d) ** 2)))


def theoretical_exponents(p: RateParams, *, want_hnorm: bool = True) -> dict:
    """Rate exponents ``(2r+1)/(2r+1+1/b)`` and ``r/(2r+1+1/b)``.

    The H-norm exponent needs ``r > 0``; with ``r = 0`` pass
    ``want_hnorm=False``.
    """
    denom = 2 * p.r + 1 + p.inv_b
    out = {"pred_exp": (2 * p.r + 1) / denom}
    if want_hnorm:
        if p.r == 0:
            raise ValueError("the H-norm rate needs r > 0")
        out["hnorm_exp"] = p.r / denom
    return out


def fit_rate(ns, errors, theory_slope: float | None = None) -> RateReport:
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.shape != errors.shape or ns.ndim != 1:
        raise ValueError("ns and errors must be 1-D arrays of equal length")
    if len(ns) < 3:
        raise ValueError("need at least 3 points to fit a rate")
    if np.any(np.diff(ns) <= 0):
        raise ValueError("ns must be strictly increasing")
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise ValueError("errors must be positive and finite")
    x, y = np.log(ns), np.log(errors)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return RateReport(
        ns.astype(int), errors, float(slope), float(intercept),
        float(np.sqrt(np.mean(resid ** 2))), theory_slope,
    )


def source_condition_sum(w_star: Signal, K: SpectralWeights, cov: CovarianceSpectrum, r: float) -> float:
    """Truncated ``sum |(F w*)_xi|^2 / (K[xi] sigma[xi]^(2r))`` over ``sigma > 0``."""
    c = forward_values(K.grid, w_star.values)
    on = cov.sigma > 0
    return float(np.sum(np.abs(c[on]) ** 2 / (K.weights[on] * cov.sigma[on] ** (2 * r))))


def covariance_decay_slope(cov: CovarianceSpectrum, lo: int = 1, hi: int | None = None) -> float:
    """Log-log slope of ``sigma`` against ``|xi|`` over ``lo <= |xi| <= hi``."""
    a = cov.grid.abs_frequencies()
    hi = a.max() if hi is None else hi
    on = (a >= lo) & (a <= hi) & (cov.sigma > 0)
    if on.sum() < 2:
        raise ValueError("not enough positive eigenvalues in range")
    slope, _ = np.polyfit(np.log(a[on]), np.log(cov.sigma[on]), 1)
    return float(slope)


def default_rate_params(dist, kappa: float = 1.0) -> RateParams:
    """Exponents of the localization limits for ``H^1`` weights and an ``H^2`` target.

    Frequency localization with ``p ~ 1/|l|`` gives ``sigma ~ |l|^-3``
    (``b = 3``, ``r = 1/3``); narrow boxes give ``sigma ~ |l|^-2``
    (``b = 2``, ``r = 1/2``).
    """
    if isinstance(dist, FrequencyLocalized):
        return RateParams(1 / 3, 3.0, kappa)
    if isinstance(dist, SpaceLocalized):
        return RateParams(0.5, 2.0, kappa)
    raise ValueError(f"no default rate parameters for {dist!r}")
