"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py`` (a PASS/FAIL line per criterion
is printed in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import pathlib
import time

import pytest

from convlearn.experiments import ExperimentConfig, run_decay, run_heat, write_outputs
from convlearn.validate import (
    DEFAULT_SEED,
    check_closed_forms,
    check_harmonic,
    norm_chain_gaps,
    oracle_gap,
    oracle_instances,
)

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"
WORKERS = 4
LINES = []


def record(number, name, passed, detail):
    LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}")
    return passed


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def slope(result, key):
    return result.summary["rates"][key]["fitted_slope"]


@pytest.fixture(scope="module")
def frequency_run():
    cfg = ExperimentConfig.from_dict({"workers": WORKERS})
    return timed(run_decay, cfg)


@pytest.fixture(scope="module")
def space_run():
    cfg = ExperimentConfig.from_file(str(CONFIGS / "decay_space.json")).replace(workers=WORKERS)
    return timed(run_decay, cfg)


def test_c1_oracle_equivalence():
    def go():
        return max(oracle_gap(*inst) for inst in oracle_instances(DEFAULT_SEED, 100))

    gap, secs = timed(go)
    ok = gap <= 1e-9 and secs < 10
    assert record(1, "oracle equivalence", ok,
                  f"max relative gap {gap:.2e} (<= 1e-9), {secs:.2f}s (< 10s)")


def test_c2_harmonic_invariants():
    results, secs = timed(check_harmonic, DEFAULT_SEED, 1000)
    worst = max(r.observed for r in results)
    ok = all(r.passed for r in results) and secs < 30
    assert record(2, "harmonic invariants", ok,
                  f"worst of four laws {worst:.2e} (<= 1e-10) over 1000 cases, {secs:.2f}s (< 30s)")


def test_c3_closed_form_kernels():
    results = check_closed_forms(512)
    detail = ", ".join(f"{r.name} {r.observed:.1e}/{r.tolerance:.1e}" for r in results)
    assert record(3, "closed-form kernels", all(r.passed for r in results), detail)


def test_c4_frequency_localized_rates(frequency_run):
    res, secs = frequency_run
    sp, sh = slope(res, "pred_error_sq"), slope(res, "h_error_sq")
    ok_p = abs(sp - (-5 / 6)) <= 0.2
    ok_h = abs(sh - (-1 / 3)) <= 0.2
    ok = ok_p and ok_h and secs < 300
    assert record(4, "frequency-localized rates", ok,
                  f"pred slope {sp:.3f} (target -0.833 +/- 0.2), "
                  f"h slope {sh:.3f} (target -0.333 +/- 0.2), {secs:.1f}s (< 300s)")


def test_c5_space_localized_rates(space_run):
    res, secs = space_run
    sp, sh = slope(res, "pred_error_sq"), slope(res, "h_error_sq")
    assert res.summary["freq_cutoff"] == 125
    ok = abs(sp - (-0.8)) <= 0.2 and abs(sh - (-0.4)) <= 0.2 and secs < 300
    assert record(5, "space-localized rates", ok,
                  f"pred slope {sp:.3f} (target -0.8 +/- 0.2), "
                  f"h slope {sh:.3f} (target -0.4 +/- 0.2), {secs:.1f}s (< 300s)")


def test_c6_localization_crossover(frequency_run, space_run):
    f, s = frequency_run[0], space_run[0]
    assert f.seed == s.seed
    fe, se = f.summary["per_n"][-1], s.summary["per_n"][-1]
    assert fe["n"] == se["n"] == 800
    ok = se["h_error_sq_mean"] < fe["h_error_sq_mean"] and fe["pred_error_sq_mean"] < se["pred_error_sq_mean"]
    assert record(6, "localization crossover", ok,
                  f"n=800 h_error_sq space {se['h_error_sq_mean']:.3e} < frequency {fe['h_error_sq_mean']:.3e}; "
                  f"pred_error_sq frequency {fe['pred_error_sq_mean']:.3e} < space {se['pred_error_sq_mean']:.3e}")


def test_c7_prediction_identity():
    _, _, worst = norm_chain_gaps(DEFAULT_SEED, 50)
    assert record(7, "prediction-error identity", worst <= 1e-10,
                  f"max relative gap {worst:.2e} (<= 1e-10) over 50 triples")


def test_c8_heat_kernel_demo():
    cfg = ExperimentConfig.from_dict({"experiment": "heat"})
    res, secs = timed(run_heat, cfg)
    narrow, wide = sorted(res.rows, key=lambda r: r["width_cells"])
    ok = narrow["rel_l2_error"] < wide["rel_l2_error"] and narrow["rel_l2_error"] < 0.15 and secs < 30
    assert record(8, "heat-kernel demo", ok,
                  f"narrow {narrow['rel_l2_error']:.3e} < wide {wide['rel_l2_error']:.3e}, "
                  f"narrow < 0.15, {secs:.2f}s (< 30s)")


def test_c9_determinism(tmp_path):
    cases = {
        "decay_frequency": ExperimentConfig.from_file(str(CONFIGS / "decay_frequency.json")),
        "decay_space": ExperimentConfig.from_file(str(CONFIGS / "decay_space.json")),
        "heat": ExperimentConfig.from_file(str(CONFIGS / "heat.json")),
    }
    mismatched = []
    for name, cfg in cases.items():
        run = run_decay if cfg["experiment"] == "decay" else run_heat
        blobs = []
        for k, workers in enumerate((1, 1, WORKERS)):
            out = tmp_path / f"{name}_{k}"
            paths = write_outputs(run(cfg.replace(workers=workers)), str(out))
            blobs.append(tuple(open(paths[f], "rb").read() for f in ("rows.csv", "summary.json")))
        if len(set(blobs)) != 1:
            mismatched.append(name)
    assert record(9, "determinism", not mismatched,
                  f"{len(cases)} experiments x (1, 1, {WORKERS} workers); "
                  f"mismatches: {', '.join(mismatched) or 'none'}")


if __name__ == "__main__":
    import sys

    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider", *sys.argv[1:]]))
