import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from snspdkit.core import GaussianFit, PulseWaveform
from snspdkit.errors import NegativeInput, NegativeRadicand, NonPositiveInput, TooFewSamples
from snspdkit.jitter import (Estimate, NoiseJitterInput, baseline_rms, budget_from_measurements,
                             compose_budget, intrinsic_jitter, noise_jitter, setup_jitter, slew_rate,
                             system_jitter_from_fit)
from snspdkit.simulator import synthesize_waveform

# frozen oracle values (evaluated with decimal arithmetic outside the package)
SETUP_6_9 = 10.816653826391969
NOISE_AT_1P3 = 10.252524196
NOISE_AT_0P35 = 38.080804157
INTRINSIC_26 = 21.304109932

nonneg = st.floats(0.0, 1e4, allow_nan=False)


def test_setup_jitter_examples():
    assert setup_jitter(6, 9) == pytest.approx(SETUP_6_9, rel=1e-12)
    assert setup_jitter(6, 9) == pytest.approx(10.817, abs=1e-3)
    assert setup_jitter(0, 7.5) == 7.5
    assert setup_jitter(3, 4) == 5
    with pytest.raises(NegativeInput):
        setup_jitter(-1, 4)


def test_slew_rate_linear_ramp():
    wf = PulseWaveform(1.0, np.linspace(0.0, 130.0, 101))
    assert slew_rate(wf) == pytest.approx(1.3)


def test_slew_rate_exponential_edge():
    wf = synthesize_waveform(130.0, 100.0, 0.0, 1.0, seed=0)
    analytic = 130.0 / 100.0
    # one-sample quantization of the steepest difference quotient
    quant = analytic * (1.0 / 100.0)
    assert abs(slew_rate(wf) - analytic) <= quant


def test_slew_rate_too_few_samples():
    with pytest.raises(TooFewSamples):
        slew_rate(PulseWaveform(1.0, [1.0]))


def test_slew_rate_smoothing_knob():
    wf = synthesize_waveform(130.0, 100.0, 5.66, 1.0, seed=4)
    assert slew_rate(wf, smooth=9) < slew_rate(wf)


def test_noise_jitter_examples():
    assert noise_jitter(NoiseJitterInput(5.66, 1.3)).value == pytest.approx(NOISE_AT_1P3, rel=1e-9)
    assert noise_jitter(NoiseJitterInput(5.66, 0.35)).value == pytest.approx(NOISE_AT_0P35, rel=1e-9)
    c = 2 * math.sqrt(2 * math.log(2))
    assert noise_jitter(NoiseJitterInput(1.0, c)).value == pytest.approx(1.0)
    assert noise_jitter(NoiseJitterInput(1.0, 2 * c)).value == pytest.approx(0.5)
    with pytest.raises(NonPositiveInput):
        noise_jitter(NoiseJitterInput(0.0, 1.0))


def test_noise_jitter_uncertainty():
    est = noise_jitter(NoiseJitterInput(5.66, 1.3, sigma_rms_unc=0.0566, slew_rate_unc=0.013))
    assert est.uncertainty == pytest.approx(est.value * math.sqrt(2) * 0.01)


def test_intrinsic_examples():
    assert intrinsic_jitter(26, 10.25, 10.82).value == pytest.approx(INTRINSIC_26, rel=1e-9)
    assert intrinsic_jitter(26, 10.25, 10.82).value == pytest.approx(21.31, abs=0.01)
    assert intrinsic_jitter(10.817, 0, 10.817).value == 0
    with pytest.raises(NegativeRadicand):
        intrinsic_jitter(10, 11, 0)


def test_intrinsic_clamped_within_uncertainty():
    est = intrinsic_jitter(10.0, 10.1, 0.0, u_sys=0.2, u_noise=0.2)
    assert est.clamped and est.value == 0.0
    with pytest.raises(NegativeRadicand):
        intrinsic_jitter(10.0, 12.0, 0.0, u_sys=0.2, u_noise=0.2)


def test_intrinsic_uncertainty_first_order():
    est = intrinsic_jitter(26.0, 10.25, 10.82, u_sys=0.3)
    assert est.uncertainty == pytest.approx(26.0 * 0.3 / est.value)


def test_compose_examples():
    assert compose_budget(10.25, 10.82, 21.31).j_sys == pytest.approx(26.0, abs=0.01)
    assert compose_budget(0, 0, 4.2).j_sys == 4.2
    assert compose_budget(5, 5, 5).j_sys == pytest.approx(8.660, abs=1e-3)
    with pytest.raises(NegativeInput):
        compose_budget(-1, 0, 0)


@given(nonneg, nonneg, st.floats(1e-3, 1e4))
def test_round_trip(n, s, i):
    b = compose_budget(n, s, i)
    got = intrinsic_jitter(b.j_sys, n, s).value
    # rounding j_sys to a double perturbs i by about eps * (j_sys / i)^2
    cond = (b.j_sys / i) ** 2
    bound = 1e-9 if cond <= 1e6 else 8 * np.finfo(float).eps * cond
    assert abs(got - i) <= bound * i


@given(st.floats(0.1, 100), st.floats(0.01, 10), st.floats(1.01, 10))
def test_noise_monotonicity(sig, sr, k):
    base = noise_jitter(NoiseJitterInput(sig, sr)).value
    assert noise_jitter(NoiseJitterInput(sig, sr * k)).value < base
    assert noise_jitter(NoiseJitterInput(sig * k, sr)).value > base


@given(nonneg, nonneg, nonneg)
def test_symmetry_and_bounds(a, b, c):
    assert setup_jitter(a, b) == setup_jitter(b, a)
    j = compose_budget(a, b, c).j_sys
    for perm in ((b, c, a), (c, a, b), (b, a, c)):
        assert compose_budget(*perm).j_sys == pytest.approx(j, rel=1e-12, abs=1e-300)
    assert max(a, b, c) <= j * (1 + 1e-12)
    assert j <= (a + b + c) * (1 + 1e-12)


@given(st.integers(0, 2**31), st.floats(10, 500), st.floats(5, 300))
def test_slew_rate_polarity_invariant(seed, amp, rise):
    wf = synthesize_waveform(amp, rise, 0.5, 1.0, seed=seed)
    flipped = PulseWaveform(wf.sample_interval, -wf.samples)
    assert slew_rate(flipped) == pytest.approx(slew_rate(wf))


def test_noise_pipeline_from_waveform():
    wf = synthesize_waveform(130.0, 100.0, 5.66, 1.0, seed=12, n_pre=10_000)
    rms = baseline_rms(wf, 10_000)
    assert rms == pytest.approx(5.66, rel=0.05)


def test_budget_from_fit():
    fit = GaussianFit(mu=0.0, sigma=26.0 / 2.354820045030949, amplitude=100.0, baseline=0.0,
                      covariance=np.diag([1.0, 0.01, 0.0016, 0.01]))
    j_sys = system_jitter_from_fit(fit)
    assert j_sys.uncertainty == pytest.approx(2.354820045030949 * 0.04)
    budget = budget_from_measurements(j_sys, Estimate(10.25, 0.1), Estimate(SETUP_6_9))
    assert budget.j_int == pytest.approx(math.sqrt(26.0 ** 2 - 10.25 ** 2 - SETUP_6_9 ** 2))
    assert budget.u_int is not None
