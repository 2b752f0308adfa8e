"""Monte Carlo TCSPC oracle.

Delays are the sum of independent Gaussian setup, noise and intrinsic
terms plus a trailing exponential tail. Each bias point draws from its own
named stream, so a sweep is reproducible however it is scheduled.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rng as rngs
from .core import FWHM_PER_SIGMA, BiasSweep, DetectorModel, PulseWaveform, SweepRecord, Table, validate
from .errors import InvariantViolation, SnspdError
from .histogram import DEFAULT_BIN_WIDTH, build_histogram, fit_gaussian, width_at_level

log = logging.getLogger(__name__)

# Illustrative defaults, not measured values: the jitter curve is flat at
# low bias, falls steepest at 0.92 I_sat and levels off towards 1.2 I_sat.
DEFAULT_INFLEXION = 0.92
DEFAULT_I_SAT = 35.0
SWEEP_PAD_BINS = 5


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    n_events: int
    bias: float
    laser_period: Optional[float] = None

    def check(self) -> None:
        if not (isinstance(self.n_events, (int, np.integer)) and self.n_events > 0):
            raise InvariantViolation("SimulationConfig", "n_events > 0")
        if not math.isfinite(self.bias):
            raise InvariantViolation("SimulationConfig", "bias finite")
        if self.laser_period is not None and not self.laser_period > 0:
            raise InvariantViolation("SimulationConfig", "laser_period > 0")


def target_system_fwhm(x, floor: float = 16.8, step: float = 40.0,
                       inflexion: float = DEFAULT_INFLEXION, width: float = 0.035,
                       drift: float = 35.0, drift_end: float = 1.3) -> np.ndarray:
    """Default system-jitter law (ps FWHM) vs normalized bias.

    A logistic step centred on ``inflexion`` plus a gentle linear drift that
    stops at ``drift_end``; the drift slope is uniform wherever it applies
    and so does not move the steepest point.
    """
    x = np.asarray(x, dtype=float)
    logistic = step / (1.0 + np.exp((x - inflexion) / width))
    return floor + logistic + drift * np.clip(drift_end - x, 0.0, None)


def default_tail_tau(x, tau_max: float = 8.0, start: float = 1.0, end: float = 1.1) -> np.ndarray:
    """Tail constant (ps): ``tau_max`` up to I_sat, fading linearly to 0 by 1.1 I_sat."""
    x = np.asarray(x, dtype=float)
    return tau_max * np.clip((end - x) / (end - start), 0.0, 1.0)


def default_model(i_sat: float = DEFAULT_I_SAT, sde_max: float = 0.82, steepness: float = 30.0,
                  setup_fwhm: float = math.hypot(6.0, 9.0), noise_fwhm: float = 10.25,
                  tau_max: float = 8.0, dcr: float = 300.0, photon_flux: float = 1e5,
                  **jitter_law) -> DetectorModel:
    """Device-#5-like detector: about 26 ps system jitter at 37 uA."""
    sigma_setup = setup_fwhm / FWHM_PER_SIGMA
    sigma_noise = noise_fwhm / FWHM_PER_SIGMA
    grid = np.round(np.arange(0.5, 1.6 + 1e-9, 0.005), 6)
    sys_sigma = target_system_fwhm(grid, **jitter_law) / FWHM_PER_SIGMA
    rad = sys_sigma ** 2 - sigma_setup ** 2 - sigma_noise ** 2
    if np.any(rad < 0):
        raise ValueError("jitter law falls below setup and noise jitter")
    model = DetectorModel(i_sat=i_sat, sde_max=sde_max, steepness=steepness,
                          intrinsic_sigma=Table(grid, np.sqrt(rad)),
                          tail_tau=Table(grid, default_tail_tau(grid, tau_max)),
                          sigma_setup=sigma_setup, sigma_noise=sigma_noise,
                          dcr=dcr, photon_flux=photon_flux)
    return validate(model)


def gaussian_model(sigma_setup: float, sigma_noise: float, sigma_intrinsic: float,
                   tau: float = 0.0, i_sat: float = DEFAULT_I_SAT, sde_max: float = 0.8,
                   steepness: float = 30.0, dcr: float = 0.0) -> DetectorModel:
    """Bias-independent model with constant component widths."""
    return validate(DetectorModel(i_sat=i_sat, sde_max=sde_max, steepness=steepness,
                                  intrinsic_sigma=Table.constant(sigma_intrinsic),
                                  tail_tau=Table.constant(tau),
                                  sigma_setup=sigma_setup, sigma_noise=sigma_noise, dcr=dcr))


def _delays(model: DetectorModel, bias: float, n: int, gen: np.random.Generator) -> np.ndarray:
    x = bias / model.i_sat
    s_int = float(model.intrinsic_sigma(x))
    tau = float(model.tail_tau(x))
    z = gen.standard_normal((3, n))
    # the exponential is always drawn so that tau only rescales it
    e = gen.standard_exponential(n)
    return model.sigma_setup * z[0] + model.sigma_noise * z[1] + s_int * z[2] + tau * e


def draw_delays(model: DetectorModel, cfg: SimulationConfig) -> np.ndarray:
    """Photon-arrival delays (ps) for ``cfg.n_events`` detections at ``cfg.bias``."""
    validate(model)
    validate(cfg)
    return _delays(model, cfg.bias, int(cfg.n_events), rngs.stream(cfg.seed, "delays"))


def simulate_count_run(rate: float, integration_time: float, n_repeats: int,
                       seed: int) -> np.ndarray:
    """Poisson counts for repeated gates of ``integration_time`` seconds."""
    if not (rate >= 0 and math.isfinite(rate)):
        raise ValueError(f"rate must be >= 0, got {rate}")
    if not integration_time > 0:
        raise ValueError(f"integration_time must be > 0, got {integration_time}")
    gen = rngs.stream(seed, "count_run")
    return gen.poisson(rate * integration_time, size=int(n_repeats))


def _sweep_point(model: DetectorModel, bias: float, index: int, events: int, seed: int,
                 integration_time: float, bin_width: float) -> SweepRecord:
    counts_gen = rngs.stream(seed, "sweep", index, "counts")
    n_gamma = model.photon_flux * integration_time
    eta = float(model.sde(bias))
    signal = int(counts_gen.poisson(eta * n_gamma))
    dark = int(counts_gen.poisson(model.dcr * integration_time))
    sde = min(signal / n_gamma, 1.0)
    sde_unc = math.sqrt(signal) / n_gamma

    delays = _delays(model, bias, events, rngs.stream(seed, "sweep", index, "delays"))
    fwhm = m20 = None
    try:
        hist = build_histogram(delays, bin_width, pad_bins=SWEEP_PAD_BINS)
        fit = fit_gaussian(hist)
        fwhm = fit.fwhm
        m20 = width_at_level(hist, 0.01, fit).width
    except SnspdError as exc:
        log.warning("bias %g: jitter not measured (%s)", bias, exc)
    return SweepRecord(bias=float(bias), sde=sde, sde_unc=sde_unc,
                       dcr=dark / integration_time, jitter_fwhm=fwhm, jitter_m20db=m20)


def simulate_sweep(model: DetectorModel, bias_grid: Sequence[float], events_per_point: int,
                   seed: int, integration_time: float = 1.0,
                   bin_width: float = DEFAULT_BIN_WIDTH, workers: int = 1) -> BiasSweep:
    """Efficiency and jitter measured at every bias of ``bias_grid`` (uA)."""
    validate(model)
    grid = [float(b) for b in bias_grid]
    if len(grid) == 0 or np.any(np.diff(grid) <= 0):
        raise InvariantViolation("BiasSweep", "bias strictly increasing")
    args = [(model, b, i, int(events_per_point), seed, integration_time, bin_width)
            for i, b in enumerate(grid)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda a: _sweep_point(*a), args))
    else:
        records = [_sweep_point(*a) for a in args]
    return validate(BiasSweep(tuple(records)))


def synthesize_waveform(amplitude: float, rise_time: float, sigma_rms: float,
                        sample_interval: float, seed: int, n_pre: int = 100,
                        duration: Optional[float] = None) -> PulseWaveform:
    """Rising-exponential edge ``amplitude * (1 - exp(-t / rise_time))`` with
    ``n_pre`` flat samples before it and additive Gaussian noise.

    The noiseless edge has its maximum slope ``amplitude / rise_time`` at t = 0.
    """
    if not amplitude > 0:
        raise ValueError("amplitude must be > 0")
    if not rise_time > 0:
        raise ValueError("rise_time must be > 0")
    if not sample_interval > 0:
        raise ValueError("sample_interval must be > 0")
    if duration is None:
        duration = 8.0 * rise_time
    n_post = int(math.ceil(duration / sample_interval)) + 1
    t = (np.arange(n_pre + n_post) - n_pre) * sample_interval
    v = np.where(t >= 0, amplitude * -np.expm1(-np.clip(t, 0, None) / rise_time), 0.0)
    if sigma_rms > 0:
        v = v + rngs.stream(seed, "waveform").normal(0.0, sigma_rms, size=v.size)
    return validate(PulseWaveform(sample_interval=float(sample_interval), samples=v))
