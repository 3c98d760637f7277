"""Cross-module invariant checks behind ``convlearn validate``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import fit_oracle_dense, fit_spectral
from .group_core import (
    GroupGrid,
    Signal,
    convolve,
    forward_values,
    involute,
    lp_norm,
    translate,
)
from .hypothesis_space import (
    SpectralWeights,
    closed_form_kernel,
    exponential_weights,
    fourier_tail_bound,
    sobolev_weights,
    kernel_function,
    kernel_tail_correction,
    trig_poly_weights,
)
from .metrics import (
    covariance_empirical,
    empirical_prediction_error_sq,
    h_error_sq,
    operator_error,
    prediction_error_sq,
)
from .sampling import Dataset, child_sequence, seed_sequence, _rng

DEFAULT_SEED = 12345


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    observed: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: observed {self.observed:.3e}, tolerance {self.tolerance:.1e}{extra}"


def random_signal(grid: GroupGrid, rng, real: bool = False) -> Signal:
    v = rng.standard_normal(grid.point_count)
    if not real:
        v = v + 1j * rng.standard_normal(grid.point_count)
    return Signal(grid, v)


def translation_phase(grid: GroupGrid, t) -> np.ndarray:
    """``conj(<xi, t>)`` for every canonical frequency, ``t`` a grid index."""
    freqs = grid.frequencies().reshape(grid.point_count, -1).astype(float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.exp(-2j * np.pi * freqs @ t / grid.size)


def _rel(a, b) -> float:
    scale = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / scale)


def _grids(rng, count, max_log2=12):
    out = []
    for _ in range(count):
        kind = "cyclic" if rng.random() < 0.5 else "torus"
        if rng.random() < 0.5:
            size = int(2 ** rng.integers(1, max_log2 + 1))
        else:
            size = int(rng.integers(2, 2 ** max_log2 + 1))
        out.append(GroupGrid(kind, size))
    return out


def harmonic_errors(grid: GroupGrid, rng) -> dict:
    """Relative errors of the four transform laws on one random instance."""
    x = random_signal(grid, rng)
    y = random_signal(grid, rng)
    fx = forward_values(grid, x.values)
    fy = forward_values(grid, y.values)
    norm2 = lp_norm(x, 2) ** 2
    parseval = abs(norm2 - np.sum(np.abs(fx) ** 2) / grid.total_mass) / norm2
    conv = _rel(forward_values(grid, convolve(x, y).values), fx * fy)
    t = int(rng.integers(0, grid.size))
    phase = _rel(forward_values(grid, translate(x, t).values), translation_phase(grid, t) * fx)
    invol = _rel(forward_values(grid, involute(x).values), np.conj(fx))
    return {"parseval": parseval, "convolution": conv, "translation": phase, "involution": invol}


def check_harmonic(seed: int, cases: int) -> list[CheckResult]:
    rng = _rng(child_sequence(seed_sequence(seed), 10))
    worst = {"parseval": 0.0, "convolution": 0.0, "translation": 0.0, "involution": 0.0}
    for g in _grids(rng, cases):
        for k, v in harmonic_errors(g, rng).items():
            worst[k] = max(worst[k], v)
    names = {
        "parseval": "Parseval identity",
        "convolution": "convolution theorem",
        "translation": "translation phase law",
        "involution": "involution conjugation law",
    }
    return [CheckResult(names[k], 1e-10, v, v <= 1e-10, f"{cases} cases") for k, v in worst.items()]


def random_weights(family: str, grid: GroupGrid, rng) -> SpectralWeights:
    if family == "sobolev":
        return sobolev_weights(float(rng.uniform(0.6, 2.0)), grid)
    if family == "exponential":
        return exponential_weights(float(rng.uniform(0.1, 2.0)), grid)
    top = grid.size - grid.size // 2 - 1
    return trig_poly_weights(int(rng.integers(0, top + 1)), grid)


def oracle_instances(seed: int, count: int):
    """Seeded ``(data, K, lam)`` triples on Z_8 and the 16-point torus."""
    rng = _rng(child_sequence(seed_sequence(seed), 11))
    grids = [GroupGrid.cyclic(8), GroupGrid.torus(16)]
    families = ["sobolev", "exponential", "trigpoly"]
    out = []
    for k in range(count):
        g = grids[k % 2]
        fam = families[(k // 2) % 3]
        n = [1, 3, 8][(k // 6) % 3]
        lam = [1e-3, 0.1, 1.0][(k // 18) % 3]
        K = random_weights(fam, g, rng)
        xs = [random_signal(g, rng) for _ in range(n)]
        ys = [random_signal(g, rng) for _ in range(n)]
        out.append((Dataset(xs, ys), K, lam))
    return out


def oracle_gap(data, K, lam) -> float:
    a = fit_spectral(data, K, lam).w_hat.values
    b = fit_oracle_dense(data, K, lam).w_hat.values
    return _rel(a, b)


def check_oracle(seed: int, count: int) -> list[CheckResult]:
    insts = oracle_instances(seed, count)
    gaps = [oracle_gap(*inst) for inst in insts]
    z8 = [gap for gap, inst in zip(gaps, insts) if inst[0].grid.kind == "cyclic"]
    worst = max(gaps)
    return [
        CheckResult("oracle equivalence (Z_8 and 16-point torus)", 1e-9, worst, worst <= 1e-9,
                    f"{count} instances, Z_8 max {max(z8):.2e}"),
    ]


def closed_form_errors(K: SpectralWeights) -> tuple[float, float]:
    """Max deviation of the synthesized kernel from its closed form, and the allowed bound."""
    g = K.grid
    t = g.points()
    synth = kernel_function(K).values
    exact = closed_form_kernel(K, t)
    if K.family == "exponential":
        synth = synth + kernel_tail_correction(K, t)
        return float(np.max(np.abs(synth - exact))), 1e-8
    if K.family == "trigpoly":
        return float(np.max(np.abs(synth - exact))), 1e-10
    return float(np.max(np.abs(synth - exact))), fourier_tail_bound(K)


def perturbed_sobolev(grid: GroupGrid, fraction: float, freq: int = 1) -> SpectralWeights:
    """Sobolev s=1 weights with one entry scaled by ``1 + fraction``."""
    K = sobolev_weights(1.0, grid)
    w = K.weights.copy()
    w[grid.index_of_frequency(freq)] *= 1 + fraction
    return SpectralWeights(grid, w, K.family, dict(K.params))


def check_closed_forms(size: int = 512, perturb_sobolev: float | None = None) -> list[CheckResult]:
    g = GroupGrid.torus(size)
    K_sob = sobolev_weights(1.0, g) if perturb_sobolev is None else perturbed_sobolev(g, perturb_sobolev)
    cases = [
        ("sobolev_closed_form", K_sob, "within Fourier tail bound"),
        ("exponential_closed_form", exponential_weights(0.5, g), "geometric tail added"),
        ("dirichlet_closed_form", trig_poly_weights(20, g), "finite sum"),
    ]
    out = []
    for name, K, note in cases:
        err, tol = closed_form_errors(K)
        out.append(CheckResult(name, tol, err, err <= tol, f"{size} points, {note}"))
    return out


def norm_chain_gaps(seed: int, count: int) -> tuple[float, float, float]:
    """Worst violation of the prediction/operator/H-norm inequality chain and of the empirical identity."""
    rng = _rng(child_sequence(seed_sequence(seed), 12))
    worst_a = worst_b = worst_id = 0.0
    for k in range(count):
        g = GroupGrid("cyclic" if k % 2 else "torus", int(rng.integers(4, 65)))
        K = random_weights(["sobolev", "exponential"][k % 2], g, rng)
        n = int(rng.integers(1, 6))
        xs = [random_signal(g, rng) for _ in range(n)]
        data = Dataset(xs, xs)
        cov = covariance_empirical(data, K)
        w_star = random_signal(g, rng)
        w_hat = random_signal(g, rng)
        pred = prediction_error_sq(w_hat, w_star, cov)
        op = operator_error(w_hat, w_star)
        h = h_error_sq(w_hat, w_star, K)
        dx2 = max(lp_norm(x, 1) ** 2 for x in xs)
        mid = float(cov.second_moment.max()) * op ** 2
        top = K.bound ** 2 * dx2 * h
        worst_a = max(worst_a, (pred - mid) / max(mid, 1e-300))
        worst_b = max(worst_b, (mid - top) / max(top, 1e-300))
        emp = empirical_prediction_error_sq(w_hat, w_star, xs)
        worst_id = max(worst_id, abs(pred - emp) / max(emp, 1e-300))
    return worst_a, worst_b, worst_id


def check_norm_chain(seed: int, count: int) -> list[CheckResult]:
    a, b, ident = norm_chain_gaps(seed, count)
    v = max(a, b)
    return [
        CheckResult("norm chain inequality", 1e-10, max(v, 0.0), v <= 1e-10, f"{count} random instances"),
        CheckResult("empirical prediction identity", 1e-10, ident, ident <= 1e-10, f"{count} random instances"),
    ]


def run_validate(*, quick: bool = False, seed: int = DEFAULT_SEED,
                 perturb_sobolev: float | None = None) -> list[CheckResult]:
    cases = 100 if quick else 1000
    results = []
    results += check_harmonic(seed, cases)
    results += check_oracle(seed, 100 if not quick else 30)
    results += check_closed_forms(512, perturb_sobolev)
    results += check_norm_chain(seed, 50 if not quick else 20)
    return results
