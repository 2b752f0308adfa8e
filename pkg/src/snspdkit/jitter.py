"""Quadrature jitter budget.

All jitter values are FWHM in ps. The system jitter is modelled as the
quadrature sum of independent noise, setup and intrinsic components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FWHM_PER_SIGMA, GaussianFit, JitterBudget, PulseWaveform, validate
from .errors import (InvariantViolation, NegativeInput, NegativeRadicand, NonPositiveInput,
                     TooFewSamples)


@dataclass(frozen=True)
class NoiseJitterInput:
    """RMS amplifier noise (mV) and pulse slew rate (mV/ps)."""

    sigma_rms: float
    slew_rate: float
    sigma_rms_unc: Optional[float] = None
    slew_rate_unc: Optional[float] = None

    def check(self) -> None:
        if not (self.sigma_rms > 0 and math.isfinite(self.sigma_rms)):
            raise NonPositiveInput(f"sigma_rms must be > 0, got {self.sigma_rms}")
        if not (self.slew_rate > 0 and math.isfinite(self.slew_rate)):
            raise NonPositiveInput(f"slew_rate must be > 0, got {self.slew_rate}")
        for name in ("sigma_rms_unc", "slew_rate_unc"):
            v = getattr(self, name)
            if v is not None and not (v >= 0 and math.isfinite(v)):
                raise InvariantViolation("NoiseJitterInput", f"{name} >= 0")


@dataclass(frozen=True)
class Estimate:
    """A value with optional one-sigma uncertainty.

    ``clamped`` marks an intrinsic jitter whose radicand was negative but
    within its uncertainty of zero, and was therefore reported as 0.
    """

    value: float
    uncertainty: Optional[float] = None
    clamped: bool = False

    def __float__(self):
        return self.value


def _nonneg(**values) -> None:
    for name, v in values.items():
        if v is None:
            continue
        if not math.isfinite(v) or v < 0:
            raise NegativeInput(f"{name} must be >= 0, got {v}")


def setup_jitter(pulse_fwhm: float, tcspc_fwhm: float) -> float:
    """Laser pulse width and TCSPC timing jitter added in quadrature."""
    _nonneg(pulse_fwhm=pulse_fwhm, tcspc_fwhm=tcspc_fwhm)
    return math.hypot(pulse_fwhm, tcspc_fwhm)


def _boxcar(v: np.ndarray, width: int) -> np.ndarray:
    if width <= 1:
        return v
    kernel = np.ones(width) / width
    return np.convolve(v, kernel, mode="valid")


def _max_rise(v: np.ndarray, dt: float) -> float:
    return float(np.max(np.diff(v)) / dt)


def slew_rate(waveform: PulseWaveform, smooth: int = 1) -> float:
    """Largest adjacent-sample rise rate (mV/ps) of the detection pulse.

    Negative-going pulses are sign-flipped first; polarity is taken from
    which extreme lies further from the level of the leading tenth of the
    record. ``smooth`` applies an
    optional boxcar of that many samples before differencing.
    """
    if waveform.samples.size < 2:
        raise TooFewSamples("slew rate needs at least two samples")
    validate(waveform)
    v = _boxcar(np.asarray(waveform.samples, dtype=float), int(smooth))
    if v.size < 2:
        raise TooFewSamples(f"boxcar of {smooth} leaves fewer than two samples")
    # reference level: the leading samples, which precede the pulse
    ref = float(np.median(v[:max(2, v.size // 10)]))
    up, down = float(v.max()) - ref, ref - float(v.min())
    dt = waveform.sample_interval
    if up > down:
        return _max_rise(v, dt)
    if down > up:
        return _max_rise(-v, dt)
    return max(_max_rise(v, dt), _max_rise(-v, dt))


def baseline_rms(waveform: PulseWaveform, n_samples: Optional[int] = None) -> float:
    """RMS deviation of the pre-pulse samples about their mean."""
    validate(waveform)
    v = np.asarray(waveform.samples, dtype=float)
    if n_samples is not None:
        v = v[:n_samples]
    if v.size < 2:
        raise TooFewSamples("RMS needs at least two samples")
    return float(np.std(v))


def noise_jitter(inp: NoiseJitterInput) -> Estimate:
    """FWHM timing jitter induced by amplitude noise on a finite slope."""
    validate(inp)
    value = FWHM_PER_SIGMA * inp.sigma_rms / inp.slew_rate
    if inp.sigma_rms_unc is None and inp.slew_rate_unc is None:
        return Estimate(value)
    rel = math.hypot((inp.sigma_rms_unc or 0.0) / inp.sigma_rms,
                     (inp.slew_rate_unc or 0.0) / inp.slew_rate)
    return Estimate(value, value * rel)


def intrinsic_jitter(j_sys: float, j_noise: float, j_setup: float, *,
                     u_sys: Optional[float] = None, u_noise: Optional[float] = None,
                     u_setup: Optional[float] = None) -> Estimate:
    """Intrinsic component left after removing noise and setup jitter.

    Uncertainty is first-order propagation of the supplied component
    uncertainties. A negative radicand inside its own one-sigma band is
    clamped to zero (``Estimate.clamped``); beyond that it is an error.
    """
    _nonneg(j_sys=j_sys, j_noise=j_noise, j_setup=j_setup,
            u_sys=u_sys, u_noise=u_noise, u_setup=u_setup)
    big, small = max(j_noise, j_setup), min(j_noise, j_setup)
    # factored form keeps the cancellation against the larger term exact
    rad = (j_sys - big) * (j_sys + big) - small * small
    have_unc = any(u is not None for u in (u_sys, u_noise, u_setup))
    # d(rad) = 2 j dj for each component
    rad_unc = 2.0 * math.sqrt((j_sys * (u_sys or 0.0)) ** 2 + (j_noise * (u_noise or 0.0)) ** 2
                              + (j_setup * (u_setup or 0.0)) ** 2)
    if rad < 0:
        # float noise on an exact cancellation is not an inconsistency
        if -rad <= max(rad_unc, 1e-12 * j_sys * j_sys):
            return Estimate(0.0, math.sqrt(rad_unc) if have_unc else None, clamped=True)
        raise NegativeRadicand(
            f"j_noise^2 + j_setup^2 exceeds j_sys^2 by {-rad:.6g} ps^2"
            + (f" (radicand uncertainty {rad_unc:.3g} ps^2)" if have_unc else ""))
    value = math.sqrt(rad)
    if not have_unc:
        return Estimate(value)
    if value == 0.0:
        return Estimate(0.0, math.sqrt(rad_unc))
    return Estimate(value, rad_unc / (2.0 * value))


def compose_budget(j_noise: float, j_setup: float, j_int: float, *,
                   u_noise: Optional[float] = None, u_setup: Optional[float] = None,
                   u_int: Optional[float] = None) -> JitterBudget:
    """Budget whose system jitter is the quadrature sum of the components."""
    _nonneg(j_noise=j_noise, j_setup=j_setup, j_int=j_int,
            u_noise=u_noise, u_setup=u_setup, u_int=u_int)
    j_sys = math.hypot(j_noise, j_setup, j_int)
    u_sys = None
    if any(u is not None for u in (u_noise, u_setup, u_int)) and j_sys > 0:
        u_sys = math.sqrt((j_noise * (u_noise or 0.0)) ** 2 + (j_setup * (u_setup or 0.0)) ** 2
                          + (j_int * (u_int or 0.0)) ** 2) / j_sys
    return validate(JitterBudget(j_sys=j_sys, j_noise=j_noise, j_setup=j_setup, j_int=j_int,
                                 u_sys=u_sys, u_noise=u_noise, u_setup=u_setup, u_int=u_int))


def system_jitter_from_fit(fit: GaussianFit) -> Estimate:
    """System FWHM and its uncertainty mapped from the fit covariance."""
    validate(fit)
    return Estimate(fit.fwhm, fit.fwhm_unc)


def budget_from_measurements(j_sys: Estimate, j_noise: Estimate, j_setup: Estimate) -> JitterBudget:
    """Full budget with the intrinsic term extracted by inversion."""
    j_int = intrinsic_jitter(j_sys.value, j_noise.value, j_setup.value,
                             u_sys=j_sys.uncertainty, u_noise=j_noise.uncertainty,
                             u_setup=j_setup.uncertainty)
    return validate(JitterBudget(j_sys=j_sys.value, j_noise=j_noise.value,
                                 j_setup=j_setup.value, j_int=j_int.value,
                                 u_sys=j_sys.uncertainty, u_noise=j_noise.uncertainty,
                                 u_setup=j_setup.uncertainty, u_int=j_int.uncertainty,
                                 clamped=j_int.clamped))
