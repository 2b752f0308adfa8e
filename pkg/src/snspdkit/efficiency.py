"""System detection efficiency, its uncertainty budget, and bias-sweep descriptors."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT, h as PLANCK

from .core import BiasSweep, CalibrationChain, validate
from .errors import (DivisionDomain, EmptyRegion, InvariantViolation, NegativeInput,
                     NegativeNumerator, NeverReaches, NonPositiveISat, TooFewPoints,
                     TooFewSamples, ZeroFlux)

SATURATION_FRACTION = 0.9
N_ATTENUATORS = 3


@dataclass(frozen=True)
class UncertaintyBudget:
    """Relative one-sigma uncertainties feeding the SDE."""

    rel_pcr_dcr: float
    rel_pm: float
    rel_rswitch: float
    rel_ratt: float
    rel_total: float

    def check(self) -> None:
        expected = (self.rel_pcr_dcr ** 2 + self.rel_pm ** 2 + self.rel_rswitch ** 2
                    + N_ATTENUATORS * self.rel_ratt ** 2)
        if abs(self.rel_total ** 2 - expected) > 1e-12 * max(1.0, expected):
            raise InvariantViolation("UncertaintyBudget", "rel_total^2 = sum of squared terms")

    def rows(self):
        return [("PCR - DCR", self.rel_pcr_dcr), ("P_M", self.rel_pm),
                ("R_switch", self.rel_rswitch), ("R_att", self.rel_ratt), ("SDE", self.rel_total)]


@dataclass(frozen=True)
class PlateauAverage:
    sde_mean: float
    sde_rel_unc: float
    n_points: int
    stat_rel_unc: float = 0.0
    max_rel_deviation: float = 0.0
    flat: Optional[bool] = None

    @property
    def sde_abs_unc(self) -> float:
        return self.sde_mean * self.sde_rel_unc


@dataclass(frozen=True)
class Inflexion:
    """Steepest jitter descent. ``position`` is None when no descent exists."""

    position: Optional[float]
    slope: float
    no_descent: bool = False


# ---------------------------------------------------------------------------
# Photon flux and efficiency
# ---------------------------------------------------------------------------

def photon_energy(wavelength_nm: float) -> float:
    """Photon energy in J."""
    return PLANCK * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)


def photon_flux(cal: CalibrationChain) -> float:
    """Photons per second reaching the detector through the attenuated chain."""
    if cal.r_pc >= 1.0:
        raise DivisionDomain(f"end-face reflection r_pc={cal.r_pc} leaves no transmitted light")
    if cal.p_m == 0:
        raise DivisionDomain("zero reference power")
    validate(cal)
    e_gamma = photon_energy(cal.wavelength)
    flux = cal.p_m * cal.r_switch / (1.0 - cal.r_pc) / e_gamma
    for ratio in cal.r_att:
        flux *= ratio
    flux /= cal.cf * cal.nlf_high
    flux *= (cal.nlf_high / cal.nlf_low) ** N_ATTENUATORS
    return flux


def sde(pcr: float, dcr: float, n_gamma: float) -> float:
    """Efficiency as dark-corrected count rate per incident photon."""
    if not n_gamma > 0:
        raise ZeroFlux(f"photon flux must be > 0, got {n_gamma}")
    if dcr < 0:
        raise NegativeInput(f"dcr must be >= 0, got {dcr}")
    if pcr < dcr:
        raise NegativeNumerator(f"pcr={pcr} below dcr={dcr}")
    return (pcr - dcr) / n_gamma


def sde_uncertainty(rel_pcr_dcr: float, rel_pm: float, rel_rswitch: float,
                    rel_ratt: float) -> UncertaintyBudget:
    """Quadrature budget; the attenuator term counts once per attenuator.

    Calibration constants (CF, NLF, R_pc, photon energy) are taken as
    negligible and drop out.
    """
    terms = dict(rel_pcr_dcr=rel_pcr_dcr, rel_pm=rel_pm, rel_rswitch=rel_rswitch,
                 rel_ratt=rel_ratt)
    for name, v in terms.items():
        if not (math.isfinite(v) and v >= 0):
            raise NegativeInput(f"{name} must be >= 0, got {v}")
    total = math.hypot(rel_pcr_dcr, rel_pm, rel_rswitch, math.sqrt(N_ATTENUATORS) * rel_ratt)
    return validate(UncertaintyBudget(rel_total=total, **terms))


def budget_for(cal: CalibrationChain) -> UncertaintyBudget:
    validate(cal)
    return sde_uncertainty(cal.rel_pcr_dcr, cal.rel_pm, cal.rel_rswitch, cal.rel_ratt)


def pcr_dcr_uncertainty(count_samples: Sequence[float], n_plateau_points: int) -> float:
    """Relative scatter of repeated (PCR - DCR) readings, reduced by
    averaging over ``n_plateau_points`` plateau points."""
    x = np.asarray(count_samples, dtype=float)
    if x.size < 2:
        raise TooFewSamples("need at least two count samples")
    if n_plateau_points < 1:
        raise ValueError("n_plateau_points must be >= 1")
    mean = float(np.mean(x))
    if mean <= 0:
        raise NegativeNumerator("mean PCR - DCR must be positive")
    return float(np.std(x, ddof=1)) / mean / math.sqrt(n_plateau_points)


# ---------------------------------------------------------------------------
# Bias sweeps
# ---------------------------------------------------------------------------

def saturation_current(sweep: BiasSweep) -> float:
    """Smallest bias where the SDE reaches 90 % of the sweep maximum,
    linearly interpolated between the bracketing records."""
    validate(sweep)
    b, s = sweep.bias, sweep.sde
    peak = float(np.max(s))
    if peak <= 0:
        raise NeverReaches("SDE never rises above zero")
    thr = SATURATION_FRACTION * peak
    k = int(np.flatnonzero(s >= thr)[0])
    if k == 0:
        return float(b[0])
    s0, s1 = s[k - 1], s[k]
    return float(b[k - 1] + (b[k] - b[k - 1]) * (thr - s0) / (s1 - s0))


def plateau_average(sweep: BiasSweep, region: Optional[tuple] = None,
                    calibration_rel: float = 0.0) -> PlateauAverage:
    """Mean SDE over the plateau.

    ``region`` is an inclusive (lo, hi) bias interval, default
    [I_sat, max bias]; records below I_sat are never averaged. The
    statistical part is the RMS per-point relative uncertainty over
    sqrt(n), combined in quadrature with ``calibration_rel``.
    """
    validate(sweep)
    if calibration_rel < 0:
        raise NegativeInput("calibration_rel must be >= 0")
    i_sat = saturation_current(sweep)
    b = sweep.bias
    lo, hi = (i_sat, float(b[-1])) if region is None else (float(region[0]), float(region[1]))
    mask = (b >= lo) & (b <= hi) & (b >= i_sat)
    if not np.any(mask):
        raise EmptyRegion(f"no records in [{lo:g}, {hi:g}] at or above I_sat={i_sat:g}")
    s = sweep.sde[mask]
    u = sweep.column("sde_unc")[mask]
    n = int(mask.sum())
    mean = float(np.mean(s))
    with np.errstate(divide="ignore", invalid="ignore"):
        per_point = np.where(s > 0, u / s, 0.0)
    point_rel = float(np.sqrt(np.mean(per_point ** 2)))
    stat = point_rel / math.sqrt(n)
    total = math.hypot(stat, calibration_rel)
    max_dev = float(np.max(np.abs(s - mean)) / mean) if mean > 0 else 0.0
    flat = None if point_rel == 0 or n < 2 else bool(max_dev <= 3.0 * point_rel)
    return PlateauAverage(sde_mean=mean, sde_rel_unc=total, n_points=n, stat_rel_unc=stat,
                          max_rel_deviation=max_dev, flat=flat)


def normalize_bias(sweep: BiasSweep, i_sat: float) -> BiasSweep:
    if not (i_sat > 0 and math.isfinite(i_sat)):
        raise NonPositiveISat(f"i_sat must be > 0, got {i_sat}")
    validate(sweep)
    return BiasSweep(tuple(replace(r, bias=r.bias / i_sat) for r in sweep.records),
                     normalized=True)


def jitter_inflexion(sweep: BiasSweep, column: str = "jitter_fwhm") -> Inflexion:
    """Normalized bias of the steepest jitter descent.

    Central-difference slopes locate the most negative one; a parabola
    through it and its two neighbours refines the position.
    """
    validate(sweep)
    if not sweep.normalized:
        raise ValueError("jitter_inflexion expects a normalized sweep")
    b_all, j_all = sweep.bias, sweep.column(column)
    ok = np.isfinite(j_all)
    b, j = b_all[ok], j_all[ok]
    if b.size < 5:
        raise TooFewPoints(f"need >= 5 jitter points, got {b.size}")
    pos = b[1:-1]
    slopes = (j[2:] - j[:-2]) / (b[2:] - b[:-2])
    k = int(np.argmin(slopes))
    scale = float(np.max(np.abs(j))) / float(b[-1] - b[0])
    if not slopes[k] < -1e-9 * scale:
        return Inflexion(position=None, slope=float(slopes[k]), no_descent=True)
    x = float(pos[k])
    if 0 < k < slopes.size - 1:
        a2, a1, _ = np.polyfit(pos[k - 1:k + 2], slopes[k - 1:k + 2], 2)
        if a2 > 0:
            x = float(np.clip(-a1 / (2.0 * a2), pos[k - 1], pos[k + 1]))
    return Inflexion(position=x, slope=float(slopes[k]))
