"""Shared domain records and their invariants.

Units are fixed per field and never carried at runtime:
time in ps, bias current in uA, voltage in mV, rates in counts/s,
optical power in W, efficiencies as fractions in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import singledispatch
from typing import Optional, Sequence

import numpy as np

from .errors import InvariantViolation, NonPositiveBinWidth

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def _frozen_array(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _require(ok: bool, record: str, invariant: str) -> None:
    if not ok:
        raise InvariantViolation(record, invariant)


# ---------------------------------------------------------------------------
# Histogram and peak-shape records
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TimingHistogram:
    """Binned photon-arrival delays. Bin ``i`` covers
    ``[origin + i*bin_width, origin + (i+1)*bin_width)``."""

    bin_width: float
    origin: float
    counts: np.ndarray
    total_events: int = -1

    def __post_init__(self):
        counts = _frozen_array(self.counts)
        object.__setattr__(self, "counts", counts)
        if self.total_events == -1 and counts.size and np.issubdtype(counts.dtype, np.number):
            object.__setattr__(self, "total_events", int(np.sum(counts)))

    @property
    def n_bins(self) -> int:
        return int(self.counts.size)

    @property
    def centers(self) -> np.ndarray:
        return self.origin + (np.arange(self.n_bins) + 0.5) * self.bin_width

    @property
    def edges(self) -> np.ndarray:
        return self.origin + np.arange(self.n_bins + 1) * self.bin_width

    def check(self) -> None:
        if not (self.bin_width > 0 and math.isfinite(self.bin_width)):
            raise NonPositiveBinWidth(self.bin_width)
        _require(math.isfinite(self.origin), "TimingHistogram", "origin finite")
        _require(self.counts.ndim == 1 and self.counts.size > 0,
                 "TimingHistogram", "counts non-empty")
        c = self.counts
        _require(np.issubdtype(c.dtype, np.number) and bool(np.all(np.isfinite(c))),
                 "TimingHistogram", "counts numeric")
        _require(bool(np.all(c >= 0)), "TimingHistogram", "counts non-negative")
        _require(bool(np.all(c == np.round(c))), "TimingHistogram", "counts integral")
        _require(int(np.sum(c)) == self.total_events,
                 "TimingHistogram", "total_events = sum(counts)")


@dataclass(frozen=True, eq=False)
class GaussianFit:
    """``amplitude * exp(-(t-mu)^2 / (2 sigma^2)) + baseline``.

    ``goodness`` is the weighted residual sum of squares divided by the
    number of bins. ``covariance`` is ordered (amplitude, mu, sigma, baseline).
    """

    mu: float
    sigma: float
    amplitude: float
    baseline: float
    goodness: float = 0.0
    covariance: Optional[np.ndarray] = None
    weighting: str = "poisson: 1/max(count,1)"
    n_iterations: int = 0

    @property
    def fwhm(self) -> float:
        return FWHM_PER_SIGMA * self.sigma

    @property
    def sigma_unc(self) -> Optional[float]:
        if self.covariance is None:
            return None
        var = float(self.covariance[2, 2])
        return math.sqrt(var) if var >= 0 and math.isfinite(var) else None

    @property
    def fwhm_unc(self) -> Optional[float]:
        s = self.sigma_unc
        return None if s is None else FWHM_PER_SIGMA * s

    def width_at(self, level: float) -> float:
        """Analytic full width of the Gaussian at ``level`` of its maximum."""
        return 2.0 * self.sigma * math.sqrt(2.0 * math.log(1.0 / level))

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((t - self.mu) / self.sigma) ** 2) + self.baseline

    def check(self) -> None:
        for name in ("mu", "sigma", "amplitude", "baseline"):
            _require(math.isfinite(getattr(self, name)), "GaussianFit", f"{name} finite")
        _require(self.sigma > 0, "GaussianFit", "sigma > 0")
        _require(self.amplitude > 0, "GaussianFit", "amplitude > 0")
        _require(self.baseline >= 0, "GaussianFit", "baseline >= 0")


# ---------------------------------------------------------------------------
# Jitter budget
# ---------------------------------------------------------------------------

_BUDGET_FIELDS = ("j_sys", "j_noise", "j_setup", "j_int")


@dataclass(frozen=True)
class JitterBudget:
    """FWHM jitter components (ps) at one bias point, with optional
    one-sigma uncertainties."""

    j_sys: Optional[float] = None
    j_noise: Optional[float] = None
    j_setup: Optional[float] = None
    j_int: Optional[float] = None
    u_sys: Optional[float] = None
    u_noise: Optional[float] = None
    u_setup: Optional[float] = None
    u_int: Optional[float] = None
    clamped: bool = False

    def components(self) -> dict:
        return {name: getattr(self, name) for name in _BUDGET_FIELDS}

    def check(self) -> None:
        for name in _BUDGET_FIELDS:
            v = getattr(self, name)
            if v is not None:
                _require(math.isfinite(v) and v >= 0, "JitterBudget", f"{name} >= 0")
            u = getattr(self, "u_" + name[2:])
            if u is not None:
                _require(math.isfinite(u) and u >= 0, "JitterBudget", f"u_{name[2:]} >= 0")
        vals = [getattr(self, n) for n in _BUDGET_FIELDS]
        if any(v is None for v in vals):
            return
        sys_, noise, setup, intr = vals
        gap = abs(sys_ ** 2 - (noise ** 2 + setup ** 2 + intr ** 2))
        # radicand uncertainty from first-order propagation of each term
        terms = [(v, u) for v, u in ((sys_, self.u_sys), (noise, self.u_noise),
                                      (setup, self.u_setup), (intr, self.u_int)) if u]
        tol = 2.0 * math.sqrt(sum((v * u) ** 2 for v, u in terms)) if terms else 0.0
        tol = max(tol, 1e-9 * max(sys_ ** 2, 1e-300))
        _require(gap <= tol, "JitterBudget", "j_sys^2 = j_noise^2 + j_setup^2 + j_int^2")


# ---------------------------------------------------------------------------
# Bias sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    bias: float
    sde: float
    sde_unc: float = 0.0
    dcr: float = 0.0
    jitter_fwhm: Optional[float] = None
    jitter_m20db: Optional[float] = None


@dataclass(frozen=True)
class BiasSweep:
    """Ordered per-bias records. ``normalized`` marks bias already divided by I_sat."""

    records: tuple
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name)
                         for r in self.records], dtype=float)

    @property
    def bias(self) -> np.ndarray:
        return self.column("bias")

    @property
    def sde(self) -> np.ndarray:
        return self.column("sde")

    def check(self) -> None:
        _require(len(self.records) > 0, "BiasSweep", "at least one record")
        b = self.bias
        _require(bool(np.all(np.isfinite(b))), "BiasSweep", "bias finite")
        _require(bool(np.all(np.diff(b) > 0)), "BiasSweep", "bias strictly increasing")
        for r in self.records:
            _require(0.0 <= r.sde <= 1.0, "BiasSweep", "0 <= sde <= 1")
            _require(r.sde_unc >= 0, "BiasSweep", "sde_unc >= 0")
            _require(r.dcr >= 0, "BiasSweep", "dcr >= 0")
            for name in ("jitter_fwhm", "jitter_m20db"):
                v = getattr(r, name)
                _require(v is None or v >= 0, "BiasSweep", f"{name} >= 0")


# ---------------------------------------------------------------------------
# Efficiency calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationChain:
    """Optical calibration chain for the photon-flux computation.

    ``r_att`` holds the three measured ratios P_i,att / P_M. ``p_m`` is the
    reference power in W, ``wavelength`` in nm.
    """

    p_m: float
    r_switch: float
    r_att: tuple
    wavelength: float = 1550.0
    cf: float = 1.0
    nlf_high: float = 1.0
    nlf_low: float = 1.0
    r_pc: float = 0.0
    rel_pm: float = 0.0
    rel_rswitch: float = 0.0
    rel_ratt: float = 0.0
    rel_pcr_dcr: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "r_att", tuple(float(r) for r in self.r_att))

    def check(self) -> None:
        name = "CalibrationChain"
        _require(len(self.r_att) == 3, name, "three attenuator ratios")
        for f in ("p_m", "r_switch", "wavelength", "cf", "nlf_high", "nlf_low"):
            v = getattr(self, f)
            _require(math.isfinite(v) and v > 0, name, f"{f} > 0")
        for i, r in enumerate(self.r_att, 1):
            _require(math.isfinite(r) and r > 0, name, f"r_att[{i}] > 0")
        _require(0.0 <= self.r_pc < 1.0, name, "0 <= r_pc < 1")
        for f in ("rel_pm", "rel_rswitch", "rel_ratt", "rel_pcr_dcr"):
            v = getattr(self, f)
            _require(math.isfinite(v) and v >= 0, name, f"{f} >= 0")


# ---------------------------------------------------------------------------
# Waveforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PulseWaveform:
    sample_interval: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_array(self.samples, dtype=float))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_interval

    def check(self) -> None:
        _require(math.isfinite(self.sample_interval) and self.sample_interval > 0,
                 "PulseWaveform", "sample_interval > 0")
        _require(self.samples.ndim == 1 and self.samples.size >= 2,
                 "PulseWaveform", "at least two samples")
        _require(bool(np.all(np.isfinite(self.samples))), "PulseWaveform", "samples finite")


# ---------------------------------------------------------------------------
# Simulator ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Table:
    """Piecewise-linear lookup, held constant beyond its end points."""

    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))

    @classmethod
    def constant(cls, value: float) -> "Table":
        return cls((0.0,), (value,))

    def __call__(self, x):
        return np.interp(x, self.x, self.y)

    def check(self, record: str = "Table") -> None:
        _require(len(self.x) == len(self.y) and len(self.x) >= 1, record, "table x/y same length")
        _require(bool(np.all(np.diff(self.x) > 0)), record, "table x strictly increasing")
        _require(bool(np.all(np.isfinite(self.y))), record, "table values finite")


@dataclass(frozen=True)
class DetectorModel:
    """Ground-truth detector for the Monte Carlo simulator.

    ``intrinsic_sigma`` and ``tail_tau`` are tables over *normalized* bias
    (bias / i_sat) giving the Gaussian sigma and exponential-tail constant
    of the intrinsic delay distribution, both in ps. ``steepness`` is the
    logistic slope of the efficiency curve per unit normalized bias.
    """

    i_sat: float
    sde_max: float
    steepness: float
    intrinsic_sigma: Table
    tail_tau: Table
    sigma_setup: float
    sigma_noise: float
    dcr: float = 0.0
    photon_flux: float = 1e5

    def sde(self, bias) -> np.ndarray:
        """Logistic efficiency curve with its 90 % point pinned to ``i_sat``."""
        x = np.asarray(bias, dtype=float) / self.i_sat
        midpoint = 1.0 - math.log(9.0) / self.steepness
        return self.sde_max / (1.0 + np.exp(-self.steepness * (x - midpoint)))

    def check(self) -> None:
        name = "DetectorModel"
        _require(math.isfinite(self.i_sat) and self.i_sat > 0, name, "i_sat > 0")
        _require(0.0 <= self.sde_max <= 1.0, name, "0 <= sde_max <= 1")
        _require(math.isfinite(self.steepness) and self.steepness > 0, name, "steepness > 0")
        self.intrinsic_sigma.check(name)
        self.tail_tau.check(name)
        _require(min(self.intrinsic_sigma.y) >= 0, name, "intrinsic sigma >= 0")
        _require(min(self.tail_tau.y) >= 0, name, "tail_tau >= 0 everywhere")
        _require(self.sigma_setup >= 0 and self.sigma_noise >= 0, name, "sigma values >= 0")
        _require(self.dcr >= 0, name, "dcr >= 0")
        _require(self.photon_flux > 0, name, "photon_flux > 0")


# ---------------------------------------------------------------------------

@singledispatch
def validate(record):
    """Return ``record`` unchanged if every invariant of its type holds.

    Raises :class:`InvariantViolation` naming the first failed invariant.
    """
    check = getattr(record, "check", None)
    if check is None:
        raise TypeError(f"no invariants known for {type(record).__name__}")
    check()
    return record


def quadrature(*values: float) -> float:
    return math.sqrt(sum(v * v for v in values))


__all__ = [
    "FWHM_PER_SIGMA", "TimingHistogram", "GaussianFit", "JitterBudget", "SweepRecord",
    "BiasSweep", "CalibrationChain", "PulseWaveform", "Table", "DetectorModel",
    "validate", "quadrature",
]
