import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convlearn.estimator import (
    DENSE_MAX_POINTS,
    RateParams,
    apply_operator,
    fit_oracle_dense,
    fit_spectral,
    grid_search_lambda,
    spectral_moments,
    fit_from_moments,
    theoretical_lambda,
)
from convlearn.group_core import (
    GridMismatchError,
    GroupGrid,
    Signal,
    character,
    circulant_matrix,
    convolve,
    delta,
    forward_values,
    inverse_values,
    translate,
)
from convlearn.hypothesis_space import (
    exponential_weights,
    h_norm,
    sobolev_weights,
    trig_poly_weights,
)
from convlearn.metrics import h_error_sq
from convlearn.sampling import (
    Dataset,
    FrequencyLocalized,
    GaussianNoise,
    RelativePeakNoise,
    generate_dataset,
    make_target_h2,
)

from conftest import rand_complex


def random_data(g, n, rng):
    xs = [Signal(g, rand_complex(rng, g.point_count)) for _ in range(n)]
    ys = [Signal(g, rand_complex(rng, g.point_count)) for _ in range(n)]
    return Dataset(xs, ys)


def lstsq_oracle(data, K, lam):
    """Minimize mass * mean_i ||X_i * w - Y_i||^2 + lam ||w||_H^2 by stacked least squares.

    Unknowns are the Fourier coefficients on the support; everything else is
    built from explicit matrices with no FFT.
    """
    g = data.grid
    n_pts = g.point_count
    freqs = g.frequencies().astype(float)
    t = np.arange(n_pts) / g.size if g.kind == "torus" else np.arange(n_pts) / n_pts
    E = np.exp(2j * np.pi * np.outer(t, freqs)) / g.total_mass  # w = E c
    s = K.support
    E = E[:, s]
    rows, rhs = [], []
    scale = math.sqrt(g.total_mass / data.n)
    haar = g.haar_weight
    for x, y in zip(data.inputs, data.outputs):
        idx = (np.arange(n_pts)[:, None] - np.arange(n_pts)[None, :]) % n_pts
        C = haar * x.values[idx]  # w -> x * w
        rows.append(scale * math.sqrt(haar) * (C @ E))
        rhs.append(scale * math.sqrt(haar) * y.values)
    rows.append(math.sqrt(lam) * np.diag(1 / np.sqrt(K.weights[s])))
    rhs.append(np.zeros(s.sum()))
    c, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)
    return E @ c


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# -- closed-form behaviour ----------------------------------------------------------

def test_zero_outputs_give_zero():
    g = GroupGrid.torus(16)
    xs = [character(g, 1), character(g, 3)]
    data = Dataset(xs, [Signal(g, np.zeros(16))] * 2)
    est = fit_spectral(data, sobolev_weights(1.0, g), 0.1)
    assert np.array_equal(est.w_hat.values, np.zeros(16))


def test_single_character_pair():
    g = GroupGrid.torus(32)
    K = sobolev_weights(1.0, g)
    w = make_target_h2(g, 4)
    fw = forward_values(g, w.values)
    x = character(g, 3)
    data = Dataset([x], [convolve(x, w)])
    lam = 0.01
    est = fit_spectral(data, K, lam)
    i = g.index_of_frequency(3)
    expect = np.zeros(32, complex)
    expect[i] = fw[i] / (1 + lam / K.weights[i])
    assert np.allclose(est.coeffs, expect, atol=1e-14)
    assert est.diagnostics["support_size"] == 32


@pytest.mark.parametrize("g", [GroupGrid.cyclic(8), GroupGrid.torus(16), GroupGrid.cyclic(7)])
@pytest.mark.parametrize("family", ["sobolev", "exponential", "trigpoly"])
def test_three_way_agreement(g, family, rng):
    K = {"sobolev": sobolev_weights(1.0, g), "exponential": exponential_weights(0.5, g),
         "trigpoly": trig_poly_weights(2, g)}[family]
    data = random_data(g, 3, rng)
    spec = fit_spectral(data, K, 0.1).w_hat.values
    dense = fit_oracle_dense(data, K, 0.1).w_hat.values
    ls = lstsq_oracle(data, K, 0.1)
    assert rel(spec, dense) <= 1e-10
    assert rel(spec, ls) <= 1e-10


def test_trigpoly_solution_on_three_frequencies(rng):
    g = GroupGrid.cyclic(8)
    K = trig_poly_weights(1, g)
    est = fit_oracle_dense(random_data(g, 4, rng), K, 0.3)
    c = forward_values(g, est.w_hat.values)
    assert np.max(np.abs(c[~K.support])) <= 1e-12
    assert np.count_nonzero(np.abs(c) > 1e-12) == 3


def test_noiseless_identification_dense(rng):
    g = GroupGrid.cyclic(16)
    K = sobolev_weights(1.0, g)
    w = Signal(g, rng.standard_normal(16))
    xs = [Signal(g, rng.standard_normal(16)) for _ in range(4)]
    data = Dataset(xs, [convolve(x, w) for x in xs])
    est = fit_oracle_dense(data, K, 1e-12)
    assert np.max(np.abs(est.w_hat.values - w.values)) <= 1e-6


def test_dense_scale_guard_and_errors():
    g = GroupGrid.cyclic(DENSE_MAX_POINTS + 1)
    data = Dataset([delta(g)], [delta(g)])
    with pytest.raises(ValueError):
        fit_oracle_dense(data, sobolev_weights(1.0, g), 0.1)
    g2 = GroupGrid.cyclic(8)
    d2 = Dataset([delta(g2)], [delta(g2)])
    for lam in (0.0, -1.0):
        with pytest.raises(ValueError):
            fit_spectral(d2, sobolev_weights(1.0, g2), lam)
        with pytest.raises(ValueError):
            fit_oracle_dense(d2, sobolev_weights(1.0, g2), lam)
    with pytest.raises(GridMismatchError):
        fit_spectral(d2, sobolev_weights(1.0, GroupGrid.cyclic(9)), 0.1)


def test_cutoff_zeroes_high_frequencies(rng):
    g = GroupGrid.torus(32)
    K = sobolev_weights(1.0, g)
    est = fit_spectral(random_data(g, 3, rng), K, 0.1, freq_cutoff=4)
    a = g.abs_frequencies()
    assert np.all(est.coeffs[a > 4] == 0)
    assert np.all(est.coeffs[a <= 4] != 0)
    with pytest.raises(ValueError):
        fit_spectral(random_data(g, 1, rng), K, 0.1, freq_cutoff=-1)


# -- properties -----------------------------------------------------------------

grid_st = st.builds(GroupGrid, st.sampled_from(["cyclic", "torus"]), st.integers(2, 64))
family_st = st.sampled_from(["sobolev", "exponential", "trigpoly"])


def weights_for(family, g):
    if family == "sobolev":
        return sobolev_weights(1.0, g)
    if family == "exponential":
        return exponential_weights(0.8, g)
    return trig_poly_weights((g.size - g.size // 2 - 1) // 2, g)


@given(grid_st, family_st, st.integers(1, 6), st.floats(1e-4, 10.0), st.integers(0, 2 ** 31))
def test_oracle_equivalence_property(g, family, n, lam, seed):
    rng = np.random.default_rng(seed)
    K = weights_for(family, g)
    data = random_data(g, n, rng)
    a = fit_spectral(data, K, lam).w_hat.values
    b = fit_oracle_dense(data, K, lam).w_hat.values
    assert np.linalg.norm(a - b) <= 1e-9 * (1 + np.linalg.norm(a))


@given(grid_st, family_st, st.integers(0, 2 ** 31))
def test_shrinkage_monotone_and_support(g, family, seed):
    rng = np.random.default_rng(seed)
    K = weights_for(family, g)
    m = spectral_moments(random_data(g, 3, rng))
    prev = None
    for lam in np.logspace(-4, 3, 15):
        c = np.abs(fit_from_moments(m, K, lam).coeffs)
        assert np.all(c[~K.support] == 0)
        if prev is not None:
            assert np.all(c <= prev * (1 + 1e-12) + 1e-300)
        prev = c
    assert np.max(np.abs(fit_from_moments(m, K, 1e30).coeffs)) <= 1e-20


@given(grid_st, st.integers(0, 2 ** 31), st.data())
def test_joint_translation_invariance(g, seed, data_st):
    rng = np.random.default_rng(seed)
    t = data_st.draw(st.integers(0, g.size - 1))
    K = sobolev_weights(1.0, g)
    d = random_data(g, 3, rng)
    shifted = Dataset([translate(x, t) for x in d.inputs], [translate(y, t) for y in d.outputs])
    a = fit_spectral(d, K, 0.2).w_hat.values
    b = fit_spectral(shifted, K, 0.2).w_hat.values
    assert np.linalg.norm(a - b) <= 1e-10 * (1 + np.linalg.norm(a))


def test_noiseless_consistency_monotone():
    g = GroupGrid.torus(64)
    K = sobolev_weights(1.0, g)
    rng = np.random.default_rng(3)
    w = make_target_h2(g, 2)
    xs = [Signal(g, rng.standard_normal(64)) for _ in range(5)]
    data = Dataset(xs, [convolve(x, w) for x in xs])
    errs = [h_error_sq(fit_spectral(data, K, lam).w_hat, w, K) for lam in np.logspace(-2, -12, 11)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-12


# -- lambda schedules ----------------------------------------------------------------

def test_theoretical_lambda_values():
    assert theoretical_lambda(100, RateParams(1 / 3, 3.0)) == pytest.approx(0.075, rel=1e-12)
    p = RateParams(0.0, math.inf)
    assert theoretical_lambda(math.e ** 2, p) == pytest.approx(3 / math.e ** 2, rel=1e-12)
    assert theoretical_lambda(math.e ** 2, p) == pytest.approx(0.406, abs=5e-4)
    assert theoretical_lambda(7, p) == pytest.approx(0.75 * math.log(7) ** 2 / 7)
    a = theoretical_lambda(50, RateParams(0.5, 2.0, 1.0))
    b = theoretical_lambda(50, RateParams(0.5, 2.0, 2.0))
    assert b == pytest.approx(4 * a)
    with pytest.raises(ValueError):
        theoretical_lambda(2, p)


def test_rate_params_validation():
    RateParams(0.0, 1.0)
    RateParams(0.5, math.inf)
    for bad in ((-0.1, 2), (0.6, 2), (0.2, 0.5)):
        with pytest.raises(ValueError):
            RateParams(*bad)
    with pytest.raises(ValueError):
        RateParams(0.2, 2, 0.0)
    assert RateParams(0.1, math.inf).inv_b == 0.0


def freq_run(n=50, seed=8):
    g = GroupGrid.torus(128)
    K = sobolev_weights(1.0, g)
    w = make_target_h2(g, 1)
    data = generate_dataset(w, FrequencyLocalized(), n, RelativePeakNoise(0.45), seed)
    return data, K, w


def test_grid_search_argmin_contract():
    data, K, w = freq_run()
    res = grid_search_lambda(data, K, w_star=w)
    assert len(res.lambdas) == 20
    assert res.lambdas[0] == pytest.approx(1e-3 * res.sigma_max)
    assert res.lambdas[-1] == pytest.approx(1e-1 * res.sigma_max)
    assert res.scores[list(res.lambdas).index(res.lam)] == res.scores.min()
    # score list is the true H-error of each candidate
    k = 7
    direct = h_error_sq(fit_spectral(data, K, res.lambdas[k]).w_hat, w, K)
    assert res.scores[k] == pytest.approx(direct, rel=1e-12)
    assert res.scores.min() <= res.scores[0] and res.scores.min() <= res.scores[-1]


def test_grid_search_sigma_max():
    data, K, _ = freq_run()
    m = spectral_moments(data)
    assert grid_search_lambda(data, K, criterion=lambda e: 0.0).sigma_max == pytest.approx(
        float(np.max(K.weights * m.power)))


def test_grid_search_single_point_and_ties():
    data, K, w = freq_run()
    one = grid_search_lambda(data, K, w_star=w, lo_mult=0.01, hi_mult=0.01, count=1)
    assert one.lam == pytest.approx(0.01 * one.sigma_max)
    flat = grid_search_lambda(data, K, criterion=lambda e: 1.0, lambdas=[3.0, 1.0, 2.0])
    assert flat.lam == 1.0


def test_grid_search_holdout_and_l2():
    data, K, w = freq_run(n=80)
    h = grid_search_lambda(data, K, criterion="holdout")
    assert h.criterion == "holdout" and h.lam in h.lambdas
    l2 = grid_search_lambda(data, K, criterion="oracle_l2", w_star=w)
    assert l2.lam in l2.lambdas
    with pytest.raises(ValueError):
        grid_search_lambda(data, K, criterion="oracle_h")
    with pytest.raises(ValueError):
        grid_search_lambda(data, K, criterion="nope", w_star=w)


# -- operator application -----------------------------------------------------------

def test_apply_operator(rng):
    g = GroupGrid.cyclic(8)
    x = Signal(g, rand_complex(rng, 8))
    assert np.allclose(apply_operator(delta(g), x).values, x.values)
    w = Signal(g, rand_complex(rng, 8))
    assert np.allclose(apply_operator(w, x).values, circulant_matrix(w) @ x.values, atol=1e-12)
    gt = GroupGrid.torus(16)
    wt = Signal(gt, rand_complex(rng, 16))
    e = character(gt, 2)
    fw = forward_values(gt, wt.values)[gt.index_of_frequency(2)]
    assert np.allclose(apply_operator(wt, e).values, fw * e.values, atol=1e-12)
