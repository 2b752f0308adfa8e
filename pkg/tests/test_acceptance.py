"""Acceptance criteria 1-10, each at its stated tolerance.

Each test records one PASS/FAIL line, printed in the terminal summary
(see conftest.py). Running this file directly prints the same lines.
Seeds are fixed in advance and not tuned.
"""

import math
import time

import numpy as np
import pytest

from snspdkit.core import FWHM_PER_SIGMA, BiasSweep, SweepRecord
from snspdkit.efficiency import (jitter_inflexion, normalize_bias, plateau_average,
                                 saturation_current, sde_uncertainty)
from snspdkit.histogram import build_histogram, fit_gaussian, tail_residue, width_at_level
from snspdkit.jitter import NoiseJitterInput, compose_budget, intrinsic_jitter, noise_jitter, setup_jitter
from snspdkit.rng import stream
from snspdkit.simulator import (DEFAULT_I_SAT, SimulationConfig, default_model, draw_delays,
                                gaussian_model, simulate_count_run, simulate_sweep)

RESULTS = {}
RATIO_LAW = 2.577567882670547  # sqrt(ln 100 / ln 2)
PIPELINE_SEED = 5
TAIL_SEED = 7
SWEEP_SEED = 8
COUNT_SEED = 9
TRIPLE_SEED = 10


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def timed(fn, repeats=200):
    """Result of ``fn`` and its median wall time in seconds."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, float(np.median(times))


_stream_cache = {}


def pipeline_stream():
    """10^5 pure-Gaussian delays for a device-#5-like budget and its fit."""
    if "h" not in _stream_cache:
        t0 = time.perf_counter()
        # setup term is the 6 ps pulse and 9 ps TCSPC jitter in quadrature
        model = gaussian_model(setup_jitter(6, 9) / FWHM_PER_SIGMA, 10.25 / FWHM_PER_SIGMA,
                               21.31 / FWHM_PER_SIGMA)
        d = draw_delays(model, SimulationConfig(seed=PIPELINE_SEED, n_events=100_000, bias=37.0))
        h = build_histogram(d, 1.0, pad_bins=5)
        fit = fit_gaussian(h)
        _stream_cache.update(h=h, fit=fit, elapsed=time.perf_counter() - t0)
    return _stream_cache["h"], _stream_cache["fit"], _stream_cache["elapsed"]


def test_criterion_01_uncertainty_budget():
    b, dt = timed(lambda: sde_uncertainty(0.0014, 0.0070, 0.0080, 0.0007))
    ok = abs(b.rel_total - 0.0108) <= 1e-4 and dt < 1e-3
    assert record(1, ok, f"rel_total = {b.rel_total:.6f} (0.0108 +- 0.0001), {dt * 1e6:.1f} us")


def test_criterion_02_setup_jitter():
    v, dt = timed(lambda: setup_jitter(6, 9))
    ok = abs(v - 10.817) <= 1e-3 and dt < 1e-3
    assert record(2, ok, f"setup_jitter(6, 9) = {v:.4f} ps (10.817 +- 0.001), {dt * 1e6:.1f} us")


def test_criterion_03_noise_jitter_range():
    def both():
        return [noise_jitter(NoiseJitterInput(5.66, sr)).value for sr in (0.35, 1.3)]

    (lo_sr, hi_sr), dt = timed(both)
    ok = abs(lo_sr - 38.08) <= 0.05 and abs(hi_sr - 10.25) <= 0.05 and dt < 1e-3
    assert record(3, ok, f"j_noise = {lo_sr:.3f}, {hi_sr:.3f} ps (38.08, 10.25 +- 0.05), "
                         f"{dt * 1e6:.1f} us")


def test_criterion_04_plateau_device5():
    sweep = BiasSweep(tuple(SweepRecord(bias=36.0 + k, sde=0.801) for k in range(10)))
    p, dt = timed(lambda: plateau_average(sweep, calibration_rel=0.0108))
    ok = (p.n_points == 10 and abs(p.sde_mean - 0.801) < 5e-4
          and round(p.sde_abs_unc, 3) == 0.009 and dt < 1e-3)
    assert record(4, ok, f"plateau = {p.sde_mean:.4f} +- {p.sde_abs_unc:.5f} "
                         f"(0.801 +- 0.009), {dt * 1e6:.1f} us")


def test_criterion_05_gaussian_pipeline():
    _, fit, elapsed = pipeline_stream()
    ok = abs(fit.fwhm / 26.0 - 1) <= 0.01 and elapsed < 5.0
    assert record(5, ok, f"fitted FWHM = {fit.fwhm:.3f} ps (26.0 +- 1 %), seed {PIPELINE_SEED}, "
                         f"{elapsed:.2f} s")


def test_criterion_06_width_ratio_law():
    h, fit, _ = pipeline_stream()
    ratio = width_at_level(h, 0.01, fit).width / width_at_level(h, 0.5, fit).width
    dev = ratio / RATIO_LAW - 1
    ok = abs(dev) <= 5e-3
    assert record(6, ok, f"FW(0.01)/FW(0.5) = {ratio:.4f} ({RATIO_LAW:.4f} +- 0.5 %, "
                         f"deviation {100 * dev:+.2f} %), seed {PIPELINE_SEED}")


def test_criterion_07_tail_sensitivity():
    taus = (0.0, 5.0, 15.0, 30.0)
    residues = []
    for tau in taus:
        d = draw_delays(gaussian_model(0.0, 0.0, 10.0, tau=tau),
                        SimulationConfig(seed=TAIL_SEED, n_events=1_000_000, bias=35.0))
        h = build_histogram(d, 1.0, pad_bins=5)
        residues.append(tail_residue(h, fit_gaussian(h), 0.01).residue)
    increasing = all(b > a for a, b in zip(residues, residues[1:]))
    ok = increasing and abs(residues[0]) <= 1.0
    shown = ", ".join(f"{r:.2f}" for r in residues)
    assert record(7, ok, f"residues at tau = 0, 5, 15, 30 ps: {shown} ps")


def test_criterion_08_sweep_extraction():
    t0 = time.perf_counter()
    grid = DEFAULT_I_SAT * np.linspace(0.8, 1.3, 20)
    step = grid[1] - grid[0]
    sweep = simulate_sweep(default_model(), grid, 10_000, seed=SWEEP_SEED)
    i_sat = saturation_current(sweep)
    norm = normalize_bias(sweep, i_sat)
    inf = jitter_inflexion(norm)
    elapsed = time.perf_counter() - t0
    j = norm.column("jitter_fwhm")
    above = j[norm.bias > inf.position] if inf.position is not None else j
    monotone = bool(np.all(np.diff(above) <= 0)) and np.all(np.isfinite(above))
    ok = (abs(i_sat - DEFAULT_I_SAT) <= step and inf.position is not None
          and abs(inf.position - 0.92) <= 0.02 and monotone and elapsed < 30.0)
    pos = "none" if inf.position is None else f"{inf.position:.4f}"
    assert record(8, ok, f"I_sat = {i_sat:.3f} uA (35 +- {step:.3f}), inflexion = {pos} "
                         f"(0.92 +- 0.02), non-increasing above: {monotone}, {elapsed:.2f} s")


def test_criterion_09_shot_noise():
    t0 = time.perf_counter()
    runs = simulate_count_run(344.2 ** 2, 1.0, 200, seed=COUNT_SEED)
    sd = float(np.std(runs, ddof=1))
    elapsed = time.perf_counter() - t0
    ok = abs(sd / 344.2 - 1) <= 0.10 and elapsed < 1.0
    assert record(9, ok, f"sample sd = {sd:.1f} (344.2 +- 10 %), {elapsed * 1e3:.1f} ms")


def test_criterion_10_round_trip():
    triples = stream(TRIPLE_SEED, "acceptance", "triples").uniform(0.0, 100.0, size=(10_000, 3))
    errs = np.empty(len(triples))
    cond = np.empty(len(triples))
    for k, (n, s, i) in enumerate(triples):
        j_sys = compose_budget(n, s, i).j_sys
        errs[k] = abs(intrinsic_jitter(j_sys, n, s).value - i) / i
        cond[k] = (j_sys / i) ** 2
    bad = errs > 1e-9
    detail = f"max rel error {errs.max():.2e} (1e-9), {int(bad.sum())} of {len(triples)} beyond"
    if bad.any():
        detail += f"; failing cases have (j_sys/j_int)^2 >= {cond[bad].min():.2e}"
    assert record(10, not bad.any(), detail)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
