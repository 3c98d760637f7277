"""
Configuration-driven experiments.

``decay``
    Error decay of the ridge estimator against sample size, for frequency-
    or space-localized inputs on the torus.
``heat``
    Recovery of a periodized heat kernel on Z_N from noisy box inputs of
    several widths.

Every random draw is addressed by ``(seed, task)``: the target uses stream
``(0,)``, the decay dataset for ``(n, trial)`` uses ``(1, n, trial)`` and
the heat dataset for a width uses ``(2, width)``. Results therefore do not
depend on the number of worker threads.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .estimator import (
    EstimatedKernel,
    RateParams,
    fit_spectral,
    grid_search_lambda,
    theoretical_lambda,
)
from .group_core import GroupGrid, circulant_matrix, lp_norm
from .hypothesis_space import weights_from_config
from .metrics import (
    covariance_analytic,
    covariance_empirical,
    default_rate_params,
    fit_rate,
    h_error_sq,
    operator_error,
    prediction_error_sq,
    theoretical_exponents,
)
from .sampling import (
    GaussianNoise,
    SpaceLocalized,
    child_sequence,
    distribution_from_config,
    generate_dataset,
    heat_kernel,
    make_target_h2,
    noise_from_config,
    seed_sequence,
)
from .svgplot import line_chart

__all__ = [
    "ConfigError",
    "ExperimentError",
    "ExperimentConfig",
    "ExperimentResult",
    "DECAY_DEFAULTS",
    "HEAT_DEFAULTS",
    "CSV_HEADER",
    "run_decay",
    "run_heat",
    "write_outputs",
]

CSV_HEADER = ["n", "trial", "lambda", "h_error_sq", "pred_error_sq", "op_error"]
HEAT_CSV_HEADER = ["width_cells", "delta", "n", "lambda", "rel_l2_error", "op_error"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class ExperimentError(RuntimeError):
    """A module-level failure inside an experiment, with its task context."""


DECAY_DEFAULTS: dict[str, Any] = {
    "experiment": "decay",
    "grid": {"kind": "torus", "size": 512},
    "weights": {"sobolev": {"s": 1.0}},
    "target": {"s_decay": 2.55, "amp_band": None, "amp_factor": 3.0},
    "distribution": {"frequency_localized": {"alpha": 1.0, "l_max": None}},
    "noise": {"relative_peak": {"fraction": 0.45}},
    "n_list": [25, 50, 100, 200, 400, 800],
    "trials": 9,
    "lambda_policy": {
        "grid_search": {"lo_mult": 1e-3, "hi_mult": 1e-1, "count": 20, "criterion": "oracle_h"}
    },
    "freq_cutoff": "auto",
    "rate_params": None,
    "covariance": "analytic",
    "seed": 20250101,
    "workers": 1,
    "output": {"dir": "results/decay", "plot": True},
}

HEAT_DEFAULTS: dict[str, Any] = {
    "experiment": "heat",
    "grid": {"kind": "cyclic", "size": 2048},
    "weights": {"exponential": {"b": 1.5}},
    "heat": {"t_star": 3.0, "length": 60.0, "widths_cells": [64, 512], "n": 15},
    "noise": {"gaussian": {"std": 0.001}},
    "lambda_policy": {
        "grid_search": {"lo_mult": 1e-8, "hi_mult": 1e-1, "count": 30, "criterion": "oracle_l2"}
    },
    "seed": 20250101,
    "workers": 1,
    "output": {"dir": "results/heat", "plot": True, "save_operators": False},
}

# sections whose keys are merged into the defaults; the rest are replaced whole
_MERGED = {"grid", "target", "heat", "output"}


def _merge(defaults: dict, overrides: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        if key in _MERGED:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be a mapping")
            extra = set(value) - set(defaults[key])
            if extra:
                raise ConfigError(f"unknown keys in {key!r}: {sorted(extra)}")
            out[key].update(value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class ExperimentConfig:
    """A validated experiment definition (a plain nested dict underneath)."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        kind = raw.get("experiment", "decay")
        defaults = {"decay": DECAY_DEFAULTS, "heat": HEAT_DEFAULTS}.get(kind)
        if defaults is None:
            raise ConfigError(f"unknown experiment {kind!r}; expected 'decay' or 'heat'")
        cfg = cls(_merge(defaults, raw))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str) -> ExperimentConfig:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def __getitem__(self, key):
        return self.data[key]

    def replace(self, **updates) -> ExperimentConfig:
        d = copy.deepcopy(self.data)
        for k, v in updates.items():
            if k == "out_dir":
                d["output"]["dir"] = v
            else:
                d[k] = v
        cfg = ExperimentConfig(d)
        cfg.validate()
        return cfg

    def validate(self):
        d = self.data
        try:
            grid = self.grid()
            weights_from_config(d["weights"], grid)
            noise_from_config(d["noise"])
            self._lambda_policy()
            if d["experiment"] == "decay":
                if grid.kind != "torus" or grid.dim != 1:
                    raise ConfigError("decay experiments run on the 1-D torus")
                dist = distribution_from_config(d["distribution"])
                ns = d["n_list"]
                if not ns or any(int(n) != n or n < 1 for n in ns):
                    raise ConfigError("n_list must hold positive integers")
                if any(b <= a for a, b in zip(ns, ns[1:])):
                    raise ConfigError("n_list must be strictly increasing")
                if int(d["trials"]) != d["trials"] or d["trials"] < 1:
                    raise ConfigError("trials must be a positive integer")
                fc = d["freq_cutoff"]
                if not (fc is None or fc == "auto" or (isinstance(fc, int) and fc >= 0)):
                    raise ConfigError("freq_cutoff must be null, 'auto' or a nonnegative integer")
                if d["covariance"] not in ("analytic", "empirical"):
                    raise ConfigError("covariance must be 'analytic' or 'empirical'")
                if d["rate_params"] is not None:
                    rp = d["rate_params"]
                    if not isinstance(rp, dict) or set(rp) - {"r", "b"}:
                        raise ConfigError("rate_params must be {'r': ..., 'b': ...}")
                    RateParams(rp["r"], _as_b(rp["b"]))
                t = d["target"]
                make_target_h2(grid, 0, t["s_decay"], _band(t["amp_band"]), t["amp_factor"])
                if isinstance(dist, SpaceLocalized) and 2 * dist.delta * grid.size < 1:
                    raise ConfigError("space-localized delta is narrower than one grid cell")
            else:
                if grid.kind != "cyclic":
                    raise ConfigError("heat experiments run on a cyclic grid")
                h = d["heat"]
                if not (h["t_star"] > 0 and h["length"] > 0):
                    raise ConfigError("t_star and length must be positive")
                widths = h["widths_cells"]
                if not widths or any(int(w) != w or not 1 <= w <= grid.size for w in widths):
                    raise ConfigError("widths_cells must be integers in [1, N]")
                if int(h["n"]) != h["n"] or h["n"] < 1:
                    raise ConfigError("heat n must be a positive integer")
            if int(d["workers"]) != d["workers"] or d["workers"] < 1:
                raise ConfigError("workers must be a positive integer")
            if not isinstance(d["seed"], int) or d["seed"] < 0:
                raise ConfigError("seed must be a nonnegative integer")
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self) -> GroupGrid:
        g = self.data["grid"]
        return GroupGrid(g["kind"], g["size"], g.get("dim", 1))

    def _lambda_policy(self) -> tuple[str, dict]:
        lp = self.data["lambda_policy"]
        if not isinstance(lp, dict) or len(lp) != 1:
            raise ConfigError("lambda_policy must be a single-key mapping")
        (kind, params), = lp.items()
        params = dict(params or {})
        allowed = {
            "grid_search": {"lo_mult", "hi_mult", "count", "criterion"},
            "theoretical": {"r", "b", "kappa"},
            "fixed": {"value"},
        }
        if kind not in allowed:
            raise ConfigError(f"unknown lambda policy {kind!r}")
        extra = set(params) - allowed[kind]
        if extra:
            raise ConfigError(f"unknown {kind} parameters {sorted(extra)}")
        if kind == "grid_search":
            params = {"lo_mult": 1e-3, "hi_mult": 1e-1, "count": 20, "criterion": "oracle_h", **params}
            if params["criterion"] not in ("oracle_h", "oracle_l2", "holdout"):
                raise ConfigError(f"unknown grid-search criterion {params['criterion']!r}")
            if int(params["count"]) != params["count"] or params["count"] < 1:
                raise ConfigError("grid-search count must be a positive integer")
            if not 0 < params["lo_mult"] <= params["hi_mult"]:
                raise ConfigError("need 0 < lo_mult <= hi_mult")
        elif kind == "fixed":
            if not params.get("value", 0) > 0:
                raise ConfigError("fixed lambda must be positive")
        else:
            RateParams(params.get("r", 0.0), _as_b(params.get("b", 1.0)), params.get("kappa", 1.0))
        return kind, params


def _as_b(b):
    if isinstance(b, str) and b.lower() in ("inf", "infinity"):
        return math.inf
    return float(b)


def _band(band):
    return None if band is None else (int(band[0]), int(band[1]))


@dataclass
class ExperimentResult:
    experiment: str
    rows: list
    summary: dict
    config: dict
    seed: int
    estimates: dict = field(default_factory=dict)
    target: Any = None

    def to_csv(self) -> str:
        header = CSV_HEADER if self.experiment == "decay" else HEAT_CSV_HEADER
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in self.rows:
            writer.writerow([_cell(row[k]) for k in header])
        return buf.getvalue()

    def summary_json(self) -> str:
        doc = {
            "experiment": self.experiment,
            "seed": self.seed,
            "code_version": __version__,
            # worker count is an execution detail and must not change the bytes
            "config": {k: v for k, v in self.config.items() if k != "workers"},
            **self.summary,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _select_lambda(cfg: ExperimentConfig, data, K, w_star, cutoff, n):
    kind, params = cfg._lambda_policy()
    if kind == "fixed":
        return float(params["value"])
    if kind == "theoretical":
        kappa = params.get("kappa", K.bound)  # input bound is 1 for both families
        rp = RateParams(params.get("r", 0.0), _as_b(params.get("b", 1.0)), kappa)
        return theoretical_lambda(n, rp)
    search = grid_search_lambda(
        data, K,
        lo_mult=params["lo_mult"], hi_mult=params["hi_mult"], count=params["count"],
        criterion=params["criterion"], w_star=w_star, freq_cutoff=cutoff,
    )
    return search.lam


def _resolve_cutoff(cfg: ExperimentConfig, dist) -> int | None:
    fc = cfg["freq_cutoff"]
    if fc == "auto":
        return int(math.floor(1 / (4 * dist.delta))) if isinstance(dist, SpaceLocalized) else None
    return fc


def _mean_se(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
    return float(a.mean()), se


def summarize_decay(rows: list, n_list, rate_params: RateParams | None) -> dict:
    """Per-n means and standard errors plus log-log rate fits (recomputable from rows)."""
    per_n = []
    for n in n_list:
        sel = [r for r in rows if r["n"] == n]
        entry = {"n": int(n), "trials": len(sel)}
        for key in ("h_error_sq", "pred_error_sq", "op_error", "lambda"):
            m, se = _mean_se([r[key] for r in sel])
            entry[f"{key}_mean"] = m
            entry[f"{key}_se"] = se
        per_n.append(entry)
    out = {"per_n": per_n}
    theory = None
    if rate_params is not None:
        theory = theoretical_exponents(rate_params, want_hnorm=rate_params.r > 0)
        out["theory"] = {
            "r": rate_params.r,
            "b": rate_params.b if math.isfinite(rate_params.b) else "inf",
            "pred_exp": theory["pred_exp"],
            "hnorm_exp": theory.get("hnorm_exp"),
            "hnorm_sq_exp": 2 * theory["hnorm_exp"] if "hnorm_exp" in theory else None,
        }
    if len(n_list) >= 3:
        rates = {}
        for key, th in (
            ("pred_error_sq", -theory["pred_exp"] if theory else None),
            ("h_error_sq", -2 * theory["hnorm_exp"] if theory and "hnorm_exp" in theory else None),
        ):
            means = [e[f"{key}_mean"] for e in per_n]
            if all(m > 0 for m in means):
                rates[key] = fit_rate(n_list, means, th).as_dict()
        out["rates"] = rates
    return out


def run_decay(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg["experiment"] != "decay":
        raise ConfigError("run_decay needs a decay config")
    grid = cfg.grid()
    K = weights_from_config(cfg["weights"], grid)
    dist = distribution_from_config(cfg["distribution"])
    noise = noise_from_config(cfg["noise"])
    root = seed_sequence(cfg["seed"])
    t = cfg["target"]
    w_star = make_target_h2(grid, child_sequence(root, 0), t["s_decay"], _band(t["amp_band"]), t["amp_factor"])
    cutoff = _resolve_cutoff(cfg, dist)
    cov = covariance_analytic(dist, K) if cfg["covariance"] == "analytic" else None

    def task(n, trial):
        try:
            data = generate_dataset(w_star, dist, n, noise, child_sequence(root, 1, n, trial))
            lam = _select_lambda(cfg, data, K, w_star, cutoff, n)
            est = fit_spectral(data, K, lam, cutoff)
            c = cov if cov is not None else covariance_empirical(data, K)
            row = {
                "n": int(n),
                "trial": int(trial),
                "lambda": float(lam),
                "h_error_sq": h_error_sq(est.w_hat, w_star, K),
                "pred_error_sq": prediction_error_sq(est.w_hat, w_star, c),
                "op_error": operator_error(est.w_hat, w_star),
            }
            return row, est
        except Exception as exc:
            raise ExperimentError(f"decay task n={n}, trial={trial} failed: {exc}") from exc

    tasks = [(n, k) for n in cfg["n_list"] for k in range(cfg["trials"])]
    results = _map(task, tasks, cfg["workers"])
    rows = [r for r, _ in results]

    if cfg["rate_params"] is not None:
        rp = RateParams(cfg["rate_params"]["r"], _as_b(cfg["rate_params"]["b"]))
    else:
        try:
            rp = default_rate_params(dist)
        except ValueError:
            rp = None
    summary = summarize_decay(rows, cfg["n_list"], rp)
    summary["freq_cutoff"] = cutoff
    n_max = cfg["n_list"][-1]
    last = results[tasks.index((n_max, 0))][1]
    return ExperimentResult("decay", rows, summary, cfg.data, cfg["seed"],
                            {f"n{n_max}_trial0": last}, w_star)


def run_heat(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg["experiment"] != "heat":
        raise ConfigError("run_heat needs a heat config")
    grid = cfg.grid()
    K = weights_from_config(cfg["weights"], grid)
    noise = noise_from_config(cfg["noise"])
    h = cfg["heat"]
    w_star = heat_kernel(h["t_star"], h["length"], grid)
    root = seed_sequence(cfg["seed"])
    norm_star = lp_norm(w_star, 2)

    def task(width):
        try:
            dist = SpaceLocalized(width / (2 * grid.size))
            data = generate_dataset(w_star, dist, h["n"], noise, child_sequence(root, 2, width))
            lam = _select_lambda(cfg, data, K, w_star, None, h["n"])
            est = fit_spectral(data, K, lam)
            err = operator_error(est.w_hat, w_star)
            row = {
                "width_cells": int(width),
                "delta": dist.delta,
                "n": int(h["n"]),
                "lambda": float(lam),
                "rel_l2_error": err / norm_star,
                "op_error": err,
            }
            return row, est
        except Exception as exc:
            raise ExperimentError(f"heat task width={width} failed: {exc}") from exc

    widths = list(h["widths_cells"])
    results = _map(task, widths, cfg["workers"])
    rows = [r for r, _ in results]
    summary = {
        "per_width": [{k: r[k] for k in ("width_cells", "delta", "lambda", "rel_l2_error")} for r in rows],
    }
    estimates = {f"width{w}": est for w, (_, est) in zip(widths, results)}
    return ExperimentResult("heat", rows, summary, cfg.data, cfg["seed"], estimates, w_star)


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(*t) if isinstance(t, tuple) else fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *t) if isinstance(t, tuple) else pool.submit(fn, t) for t in tasks]
        return [f.result() for f in futures]


def operator_matrix(est: EstimatedKernel) -> np.ndarray:
    """Circulant matrix of the learned operator ``x -> x * w_hat``."""
    return circulant_matrix(est.w_hat)


def _kernel_json(result: ExperimentResult) -> str:
    doc = {"experiment": result.experiment, "seed": result.seed, "estimates": {}}
    for name, est in result.estimates.items():
        g = est.w_hat.grid
        doc["estimates"][name] = {
            "grid": {"kind": g.kind, "size": g.size},
            "lambda": est.lambda_used,
            "freq_cutoff": est.freq_cutoff,
            "frequencies": np.asarray(g.frequencies()).tolist(),
            "coeffs": [[float(c.real), float(c.imag)] for c in est.coeffs],
        }
    if result.target is not None:
        from .group_core import forward_values

        g = result.target.grid
        doc["target_coeffs"] = [[float(c.real), float(c.imag)]
                                for c in forward_values(g, result.target.values)]
    return json.dumps(doc, sort_keys=True) + "\n"


def _decay_plot(result: ExperimentResult) -> str:
    per_n = result.summary["per_n"]
    ns = [e["n"] for e in per_n]
    series = []
    for key, label in (("h_error_sq", "||w - w*||_H^2"), ("pred_error_sq", "prediction error")):
        ys = [e[f"{key}_mean"] for e in per_n]
        series.append({"x": ns, "y": ys, "label": label, "markers": True})
        rate = result.summary.get("rates", {}).get(key)
        if rate and rate["theory_slope"] is not None:
            ref = [ys[0] * (n / ns[0]) ** rate["theory_slope"] for n in ns]
            series.append({"x": ns, "y": ref, "label": f"slope {rate['theory_slope']:.3f}",
                           "dashed": True, "color": "#777777"})
    return line_chart(series, title="Error decay", xlabel="n", ylabel="mean error",
                      logx=True, logy=True)


def _heat_plot(result: ExperimentResult) -> str:
    w = result.target
    g = w.grid
    length = result.config["heat"]["length"]
    x = np.asarray(g.signed_frequencies(), dtype=float) * length / g.size
    order = np.argsort(x)
    keep = order[(np.abs(x[order]) <= length / 4)]
    series = [{"x": x[keep].tolist(), "y": w.values.real[keep].tolist(), "label": "heat kernel"}]
    for name, est in result.estimates.items():
        series.append({"x": x[keep].tolist(), "y": est.w_hat.values.real[keep].tolist(),
                       "label": name, "dashed": True})
    return line_chart(series, title="Heat kernel reconstruction", xlabel="x", ylabel="w(x)")


def write_outputs(result: ExperimentResult, out_dir: str | None = None) -> dict:
    """Write ``rows.csv``, ``summary.json``, ``kernel_estimate.json`` and optionally ``plot.svg``."""
    out_dir = out_dir or result.config["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    def put(name, text):
        p = os.path.join(out_dir, name)
        with open(p, "w", newline="") as fh:
            fh.write(text)
        paths[name] = p

    put("rows.csv", result.to_csv())
    put("summary.json", result.summary_json())
    put("kernel_estimate.json", _kernel_json(result))
    if result.config["output"].get("plot"):
        put("plot.svg", _decay_plot(result) if result.experiment == "decay" else _heat_plot(result))
    if result.experiment == "heat" and result.config["output"].get("save_operators"):
        for name, est in result.estimates.items():
            p = os.path.join(out_dir, f"operator_{name}.npy")
            np.save(p, operator_matrix(est))
            paths[os.path.basename(p)] = p
    return paths
