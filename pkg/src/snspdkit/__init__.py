"""Single-photon-detector characterization: jitter budgets, detection
efficiency with uncertainty propagation, and a Monte Carlo TCSPC oracle."""

__version__ = "0.1.0"

from .core import (FWHM_PER_SIGMA, BiasSweep, CalibrationChain, DetectorModel, GaussianFit,
                   JitterBudget, PulseWaveform, SweepRecord, Table, TimingHistogram, validate)
from .efficiency import (jitter_inflexion, normalize_bias, pcr_dcr_uncertainty, photon_flux,
                         plateau_average, saturation_current, sde, sde_uncertainty)
from .histogram import (build_histogram, fit_exp_modified_gaussian, fit_gaussian, tail_residue,
                        width_at_level)
from .jitter import (NoiseJitterInput, compose_budget, intrinsic_jitter, noise_jitter,
                     setup_jitter, slew_rate)
from .simulator import (SimulationConfig, default_model, draw_delays, simulate_count_run,
                        simulate_sweep, synthesize_waveform)
