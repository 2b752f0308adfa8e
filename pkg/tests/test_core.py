import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from snspdkit.core import (FWHM_PER_SIGMA, BiasSweep, CalibrationChain, DetectorModel, GaussianFit,
                           JitterBudget, PulseWaveform, SweepRecord, Table, TimingHistogram, validate)
from snspdkit.errors import InvariantViolation, NonPositiveBinWidth


def cal(**kw):
    base = dict(p_m=1e-4, r_switch=0.01, r_att=(1e-3, 1e-3, 1e-2))
    base.update(kw)
    return CalibrationChain(**base)


def test_minimal_histogram_valid():
    h = TimingHistogram(bin_width=1, origin=0, counts=[0, 5, 0])
    assert validate(h) is h
    assert h.total_events == 5


def test_negative_bin_width_rejected():
    h = TimingHistogram(bin_width=-1, origin=0, counts=[0, 5, 0])
    with pytest.raises(InvariantViolation) as exc:
        validate(h)
    assert isinstance(exc.value, NonPositiveBinWidth)
    assert "bin_width" in str(exc.value)


def test_r_pc_of_one_rejected():
    with pytest.raises(InvariantViolation, match="r_pc"):
        validate(cal(r_pc=1.0))
    validate(cal(r_pc=0.999))


@pytest.mark.parametrize("counts,total", [([], 0), ([1, -1, 3], 3), ([1.5, 2], 3), ([1, 2], 7)])
def test_histogram_invariants(counts, total):
    with pytest.raises(InvariantViolation):
        validate(TimingHistogram(bin_width=1.0, origin=0.0, counts=counts, total_events=total))


def test_histogram_counts_are_immutable():
    h = TimingHistogram(bin_width=1, origin=0, counts=[1, 2, 3])
    with pytest.raises(ValueError):
        h.counts[0] = 9


def test_gaussian_fit_invariants():
    validate(GaussianFit(mu=0, sigma=1, amplitude=1, baseline=0))
    for bad in (dict(sigma=0), dict(amplitude=-1), dict(baseline=-0.1)):
        kw = dict(mu=0, sigma=1, amplitude=1, baseline=0)
        kw.update(bad)
        with pytest.raises(InvariantViolation):
            validate(GaussianFit(**kw))
    assert GaussianFit(mu=0, sigma=1, amplitude=1, baseline=0).fwhm == pytest.approx(2.354820045)


def test_jitter_budget_quadrature_invariant():
    validate(JitterBudget(j_sys=5.0, j_noise=3.0, j_setup=0.0, j_int=4.0))
    with pytest.raises(InvariantViolation, match="j_sys"):
        validate(JitterBudget(j_sys=6.0, j_noise=3.0, j_setup=0.0, j_int=4.0))
    # within stored uncertainty
    validate(JitterBudget(j_sys=5.1, j_noise=3.0, j_setup=0.0, j_int=4.0, u_sys=0.2))
    with pytest.raises(InvariantViolation):
        validate(JitterBudget(j_sys=-1.0))
    validate(JitterBudget(j_sys=26.0))  # partial budgets skip the quadrature check


def test_bias_sweep_invariants():
    ok = BiasSweep([SweepRecord(30, 0.5), SweepRecord(31, 0.7)])
    validate(ok)
    for recs in ([SweepRecord(31, 0.5), SweepRecord(30, 0.7)],
                 [SweepRecord(30, 0.5), SweepRecord(30, 0.7)],
                 [SweepRecord(30, 1.2)], [SweepRecord(30, 0.5, dcr=-1)], []):
        with pytest.raises(InvariantViolation):
            validate(BiasSweep(recs))


def test_waveform_invariants():
    validate(PulseWaveform(1.0, [0.0, 1.0]))
    with pytest.raises(InvariantViolation):
        validate(PulseWaveform(0.0, [0.0, 1.0]))
    with pytest.raises(InvariantViolation):
        validate(PulseWaveform(1.0, [0.0]))


def test_detector_model_invariants():
    kw = dict(i_sat=35, sde_max=0.8, steepness=30, intrinsic_sigma=Table.constant(9.0),
              tail_tau=Table.constant(0.0), sigma_setup=4.6, sigma_noise=4.35)
    m = validate(DetectorModel(**kw))
    assert m.sde(35.0) == pytest.approx(0.9 * 0.8)
    for bad in (dict(i_sat=0), dict(sde_max=0), dict(tail_tau=Table((0, 1), (1, -1))),
                dict(sigma_setup=-1)):
        if bad == dict(sde_max=0):
            validate(DetectorModel(**{**kw, **bad}))  # sde_max = 0 is a usable degenerate model
            continue
        with pytest.raises(InvariantViolation):
            validate(DetectorModel(**{**kw, **bad}))


def test_validate_unknown_type():
    with pytest.raises(TypeError):
        validate(object())


def test_fwhm_constant():
    assert FWHM_PER_SIGMA == pytest.approx(2.354820045030949, rel=1e-15)


@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=50),
       st.floats(0.01, 100), st.floats(-1e4, 1e4))
def test_validate_idempotent_histogram(counts, bw, origin):
    h = TimingHistogram(bin_width=bw, origin=origin, counts=counts)
    assert validate(validate(h)) is validate(h)


@given(st.floats(1e-9, 1.0), st.floats(1e-3, 10.0), st.floats(0, 0.999))
def test_validate_idempotent_calibration(p_m, r_switch, r_pc):
    c = cal(p_m=p_m, r_switch=r_switch, r_pc=r_pc)
    assert validate(validate(c)) == c
