"""
Random inputs, targets, noise and dataset generation.

Random streams
--------------
All randomness comes from :class:`numpy.random.SeedSequence` trees fed to
PCG64 generators. A dataset generated from ``seed`` gives sample ``i`` its
own stream ``SeedSequence(entropy, spawn_key=key + (i,))``, so every pair
depends only on ``(seed, i)`` and never on the order or thread in which
pairs are produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .group_core import (
    GridMismatchError,
    GroupGrid,
    Signal,
    character,
    forward_values,
    inverse_values,
)

__all__ = [
    "FrequencyLocalized",
    "SpaceLocalized",
    "InputDistribution",
    "GaussianNoise",
    "RelativePeakNoise",
    "NoiseModel",
    "Dataset",
    "seed_sequence",
    "child_sequence",
    "frequency_probabilities",
    "sample_frequency_localized",
    "sample_space_localized",
    "box_signal",
    "sample_input",
    "make_target_h2",
    "heat_kernel",
    "generate_dataset",
    "distribution_from_config",
    "noise_from_config",
]


@dataclass(frozen=True)
class FrequencyLocalized:
    """Random character ``e_l`` with ``P(l) ~ |l|^-alpha`` on ``1 <= |l| <= l_max``.

    ``l_max=None`` means the largest frequency with both signs on the grid.
    """

    alpha: float = 1.0
    l_max: int | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.l_max is not None and (int(self.l_max) != self.l_max or self.l_max < 1):
            raise ValueError(f"l_max must be a positive integer, got {self.l_max}")

    kind = "frequency_localized"
    bound = 1.0  # D_X

    def describe(self) -> dict:
        return {"frequency_localized": {"alpha": self.alpha, "l_max": self.l_max}}


@dataclass(frozen=True)
class SpaceLocalized:
    """Normalized box of half-width ``delta`` centred at a uniform grid point.

    ``delta`` is measured in group coordinates: a fraction of the period
    on the torus and of ``N`` on Z_N.
    """

    delta: float

    def __post_init__(self):
        if not 0 < self.delta <= 0.5:
            raise ValueError(f"delta must lie in (0, 1/2], got {self.delta}")

    kind = "space_localized"
    bound = 1.0

    def describe(self) -> dict:
        return {"space_localized": {"delta": self.delta}}


InputDistribution = Union[FrequencyLocalized, SpaceLocalized]


@dataclass(frozen=True)
class GaussianNoise:
    """I.i.d. real Gaussian noise with standard deviation ``std`` per grid point."""

    std: float

    def __post_init__(self):
        if not self.std >= 0:
            raise ValueError(f"noise std must be nonnegative, got {self.std}")

    def moment_constants(self, grid: GroupGrid) -> tuple[float, float]:
        """``(M_eps, sigma_eps)`` recorded for reporting only."""
        return self.std, self.std * math.sqrt(grid.total_mass)

    def describe(self) -> dict:
        return {"gaussian": {"std": self.std}}


@dataclass(frozen=True)
class RelativePeakNoise:
    """Gaussian noise whose std is ``fraction`` times the peak clean output."""

    fraction: float

    def __post_init__(self):
        if not self.fraction >= 0:
            raise ValueError(f"noise fraction must be nonnegative, got {self.fraction}")

    def describe(self) -> dict:
        return {"relative_peak": {"fraction": self.fraction}}


NoiseModel = Union[GaussianNoise, RelativePeakNoise]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Input/output pairs on one grid."""

    inputs: tuple
    outputs: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        inputs = tuple(self.inputs)
        outputs = tuple(self.outputs)
        if len(inputs) == 0:
            raise ValueError("a dataset needs at least one pair")
        if len(inputs) != len(outputs):
            raise ValueError(f"{len(inputs)} inputs but {len(outputs)} outputs")
        grid = inputs[0].grid
        for s in inputs + outputs:
            if s.grid != grid:
                raise GridMismatchError("all signals in a dataset must share a grid")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[Signal, Signal]], provenance=None) -> Dataset:
        xs, ys = zip(*pairs) if pairs else ((), ())
        return cls(xs, ys, provenance or {"source": "user"})

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def grid(self) -> GroupGrid:
        return self.inputs[0].grid

    def input_values(self) -> np.ndarray:
        return np.stack([x.values for x in self.inputs])

    def output_values(self) -> np.ndarray:
        return np.stack([y.values for y in self.outputs])

    def input_spectra(self) -> np.ndarray:
        """Canonical Fourier coefficients of all inputs, shape ``(n, P)``."""
        return forward_values(self.grid, self.input_values())

    def output_spectra(self) -> np.ndarray:
        return forward_values(self.grid, self.output_values())

    def subset(self, idx) -> Dataset:
        idx = list(idx)
        return Dataset(
            [self.inputs[i] for i in idx],
            [self.outputs[i] for i in idx],
            dict(self.provenance, subset=len(idx)),
        )


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child_sequence(parent: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Deterministic child stream addressed by ``key`` (does not consume spawns)."""
    return np.random.SeedSequence(
        parent.entropy, spawn_key=tuple(parent.spawn_key) + tuple(int(k) for k in key)
    )


def _rng(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return np.random.Generator(np.random.PCG64(seed_sequence(stream)))


def _largest_symmetric_frequency(grid: GroupGrid) -> int:
    return grid.size - grid.size // 2 - 1


def frequency_probabilities(dist: FrequencyLocalized, grid: GroupGrid) -> np.ndarray:
    """``p`` in canonical order; zero at ``l = 0`` and beyond ``l_max``."""
    if grid.dim != 1:
        raise ValueError("frequency-localized inputs are one-dimensional")
    top = _largest_symmetric_frequency(grid)
    l_max = top if dist.l_max is None else int(dist.l_max)
    if l_max > top:
        raise ValueError(f"l_max={l_max} exceeds the grid's Nyquist band (max {top})")
    a = grid.abs_frequencies()
    signed = grid.signed_frequencies()
    on = (a >= 1) & (a <= l_max) & (np.abs(signed) <= top)
    p = np.zeros(grid.point_count)
    p[on] = a[on] ** (-dist.alpha)
    return p / p.sum()


def sample_frequency_localized(dist: FrequencyLocalized, grid: GroupGrid, rng) -> Signal:
    """Draw ``l ~ p`` and return the sampled character ``e_l``."""
    rng = _rng(rng)
    p = frequency_probabilities(dist, grid)
    idx = rng.choice(grid.point_count, p=p)
    return character(grid, grid.frequencies()[idx])


def box_signal(grid: GroupGrid, delta: float, center: int = 0) -> Signal:
    """``(1 / (2 delta)) * 1{circular distance to center <= delta}``.

    Heights are normalized for unit total mass of the continuous box; the
    discretized box keeps that height, so its mass is off by at most one
    cell.
    """
    if grid.dim != 1:
        raise ValueError("box inputs are one-dimensional")
    h = grid.cell_width
    scale = grid.size * h  # period length in grid coordinates
    radius = delta * scale
    if 2 * radius < h * (1 - 1e-12):
        raise ValueError(f"box width 2*delta={2 * delta} is narrower than one grid cell")
    j = np.arange(grid.size)
    d = np.abs(j - center) % grid.size
    d = np.minimum(d, grid.size - d) * h
    # unit L1 mass of the ideal box: height * 2 * radius * (haar_weight / h) = 1
    height = h / (2.0 * radius * grid.haar_weight)
    inside = d <= radius * (1 + 1e-12)
    return Signal(grid, np.where(inside, height, 0.0))


def sample_space_localized(dist: SpaceLocalized, grid: GroupGrid, rng) -> Signal:
    rng = _rng(rng)
    center = int(rng.integers(grid.size))
    return box_signal(grid, dist.delta, center)


def sample_input(dist: InputDistribution, grid: GroupGrid, rng) -> Signal:
    if isinstance(dist, FrequencyLocalized):
        return sample_frequency_localized(dist, grid, rng)
    if isinstance(dist, SpaceLocalized):
        return sample_space_localized(dist, grid, rng)
    raise TypeError(f"unsupported input distribution {dist!r}")


def make_target_h2(
    grid: GroupGrid,
    rng,
    s_decay: float = 2.55,
    amp_band: tuple[int, int] | None = None,
    amp_factor: float = 3.0,
) -> Signal:
    """Real random target with ``|c_l| = |l|^-s_decay`` and random phases.

    ``c_0 = 0``. Coefficients with ``amp_band[0] <= |l| <= amp_band[1]`` are
    multiplied by ``amp_factor``; the default band is the upper half of
    the grid's frequencies. ``s_decay > 2.5`` keeps ``sum |c_l|^2 l^4``
    finite for the untruncated sequence.
    """
    if grid.dim != 1:
        raise ValueError("targets are one-dimensional")
    if not s_decay > 2.5:
        raise ValueError(f"s_decay must exceed 2.5 for an H^2 target, got {s_decay}")
    if amp_factor < 1:
        raise ValueError(f"amp_factor must be >= 1, got {amp_factor}")
    rng = _rng(rng)
    top = grid.size // 2
    if amp_band is None:
        amp_band = ((top + 1) // 2, top)
    lo, hi = int(amp_band[0]), int(amp_band[1])
    if not 1 <= lo <= hi <= top:
        raise ValueError(f"amp_band {amp_band} outside grid frequencies [1, {top}]")

    coeffs = np.zeros(grid.point_count, dtype=complex)
    n_pos = grid.size - grid.size // 2 - 1
    ls = np.arange(1, n_pos + 1)
    mags = ls.astype(float) ** (-s_decay)
    mags = np.where((ls >= lo) & (ls <= hi), mags * amp_factor, mags)
    phases = rng.uniform(0.0, 2 * np.pi, size=n_pos)
    pos_idx = [grid.index_of_frequency(l) for l in ls]
    neg_idx = [grid.index_of_frequency(-l) for l in ls]
    coeffs[pos_idx] = mags * np.exp(1j * phases)
    coeffs[neg_idx] = np.conj(coeffs[pos_idx])
    if grid.size % 2 == 0:
        # self-conjugate Nyquist frequency: real coefficient with random sign
        l = grid.size // 2
        mag = float(l) ** (-s_decay) * (amp_factor if lo <= l <= hi else 1.0)
        coeffs[grid.index_of_frequency(-l)] = mag * (1.0 if rng.uniform() < 0.5 else -1.0)
    values = inverse_values(grid, coeffs).real
    return Signal(grid, values)


def heat_kernel(t_star: float, length: float, grid: GroupGrid, wraps: int | None = None) -> Signal:
    """Gaussian heat kernel at time ``t_star`` periodized on a length-``length`` ring.

    Index ``j`` sits at ``x = j * h`` for ``j < N/2`` and at
    ``x = (j - N) * h`` otherwise, with ``h = length / N``.
    """
    if not t_star > 0:
        raise ValueError(f"t_star must be positive, got {t_star}")
    if not length > 0:
        raise ValueError(f"domain length must be positive, got {length}")
    if grid.kind != "cyclic":
        raise ValueError("the heat kernel lives on a cyclic grid")
    h = length / grid.size
    x = np.abs(grid.signed_frequencies()).astype(float) * h
    if wraps is None:
        # images beyond this many periods contribute below double precision
        wraps = int(math.ceil(math.sqrt(4 * t_star * 745) / length)) + 1
    g = lambda u: np.exp(-(u ** 2) / (4 * t_star))  # noqa: E731
    total = g(x)
    for m in range(1, wraps + 1):
        total = total + (g(x + m * length) + g(x - m * length))
    return Signal(grid, total / math.sqrt(4 * math.pi * t_star))


def generate_dataset(
    target: Signal,
    dist: InputDistribution,
    n: int,
    noise: NoiseModel,
    seed,
) -> Dataset:
    """Draw ``Y_i = X_i * target + eps_i`` for ``i < n``.

    Noise is real-valued and i.i.d. per grid point. For
    :class:`RelativePeakNoise` the std is fixed from the largest clean
    output magnitude over the whole dataset before any noise is drawn.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    grid = target.grid
    root = seed_sequence(seed)
    streams = [_rng(child_sequence(root, i)) for i in range(int(n))]
    xs = [sample_input(dist, grid, r) for r in streams]
    fx = forward_values(grid, np.stack([x.values for x in xs]))
    fw = forward_values(grid, target.values)
    clean = inverse_values(grid, fx * fw)
    if isinstance(noise, RelativePeakNoise):
        std = noise.fraction * float(np.abs(clean).max())
    elif isinstance(noise, GaussianNoise):
        std = noise.std
    else:
        raise TypeError(f"unsupported noise model {noise!r}")
    ys = []
    for i, r in enumerate(streams):
        eps = r.normal(0.0, std, size=grid.point_count) if std > 0 else 0.0
        ys.append(Signal(grid, clean[i] + eps))
    entropy = root.entropy
    provenance = {
        "target": "custom",
        "distribution": dist.describe(),
        "noise": noise.describe(),
        "noise_std": std,
        "seed": entropy if isinstance(entropy, int) else list(entropy),
        "spawn_key": list(root.spawn_key),
    }
    return Dataset(xs, ys, provenance)


def distribution_from_config(spec: dict) -> InputDistribution:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"distribution must be a single-key mapping, got {spec!r}")
    (kind, params), = spec.items()
    params = dict(params or {})
    if kind == "frequency_localized":
        extra = set(params) - {"alpha", "l_max"}
        if extra:
            raise ValueError(f"unknown frequency_localized parameters {sorted(extra)}")
        return FrequencyLocalized(params.get("alpha", 1.0), params.get("l_max"))
    if kind == "space_localized":
        extra = set(params) - {"delta"}
        if extra:
            raise ValueError(f"unknown space_localized parameters {sorted(extra)}")
        return SpaceLocalized(params.get("delta", 0.002))
    raise ValueError(f"unknown distribution {kind!r}")


def noise_from_config(spec: dict) -> NoiseModel:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"noise must be a single-key mapping, got {spec!r}")
    (kind, params), = spec.items()
    params = dict(params or {})
    if kind == "gaussian":
        extra = set(params) - {"std"}
        if extra:
            raise ValueError(f"unknown gaussian noise parameters {sorted(extra)}")
        return GaussianNoise(params.get("std", 0.0))
    if kind == "relative_peak":
        extra = set(params) - {"fraction"}
        if extra:
            raise ValueError(f"unknown relative_peak noise parameters {sorted(extra)}")
        return RelativePeakNoise(params.get("fraction", 0.45))
    raise ValueError(f"unknown noise model {kind!r}")
