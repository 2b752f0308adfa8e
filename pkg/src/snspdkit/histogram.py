"""Timing histograms and peak-shape metrics.

Fits are weighted least squares on bin centers with a Poisson weight of
``1/max(count, 1)`` per bin, so the log-scale tails still pull on the fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erfc, erfcx

from .core import FWHM_PER_SIGMA, GaussianFit, TimingHistogram, validate
from .errors import (EmptyInput, FitNotConverged, InsufficientCounts, LevelNotReached,
                     NonPositiveBinWidth)

DEFAULT_BIN_WIDTH = 1.0
MIN_PEAK_COUNT = 10
WEIGHTING = "poisson: 1/max(count,1)"

_GAUSS_XTOL = 1e-9
_GAUSS_MAX_ITER = 200


@dataclass(frozen=True)
class WidthMeasure:
    level: float
    width: float
    left_cross: float
    right_cross: float


@dataclass(frozen=True)
class TailResidue:
    level: float
    measured_width: float
    gaussian_width: float
    residue: float


@dataclass(frozen=True, eq=False)
class EMGFit:
    """Gaussian convolved with a trailing one-sided exponential.

    ``amplitude`` is the height the Gaussian core would have without the
    tail, so ``tau -> 0`` reduces exactly to :class:`GaussianFit`.
    """

    mu: float
    sigma: float
    tau: float
    amplitude: float
    baseline: float
    goodness: float
    covariance: np.ndarray | None = None
    flags: tuple = ()
    weighting: str = WEIGHTING

    def evaluate(self, t) -> np.ndarray:
        return self.amplitude * emg_shape(t, self.mu, self.sigma, self.tau) + self.baseline

    @property
    def tail_dominated(self) -> bool:
        return "tail_dominated" in self.flags


# ---------------------------------------------------------------------------

def build_histogram(delays, bin_width: float = DEFAULT_BIN_WIDTH,
                    origin: float | None = None, pad_bins: int = 0) -> TimingHistogram:
    """Bin delays (ps) into left-closed, right-open bins starting at
    ``origin`` (default: the smallest delay).

    ``pad_bins`` empty bins are added on each side, as a TCSPC window wider
    than the data would record them.
    """
    d = np.asarray(delays, dtype=float).ravel()
    if d.size == 0:
        raise EmptyInput("no delays to histogram")
    if not (bin_width > 0 and math.isfinite(bin_width)):
        raise NonPositiveBinWidth(bin_width)
    if not np.all(np.isfinite(d)):
        raise EmptyInput("delays contain non-finite values")
    lo = float(d.min()) if origin is None else float(origin)
    if lo > d.min():
        raise ValueError("origin lies above the smallest delay")
    lo -= pad_bins * bin_width
    idx = np.floor((d - lo) / bin_width).astype(np.int64)
    counts = np.bincount(idx, minlength=int(idx.max()) + 1 + pad_bins)
    return validate(TimingHistogram(bin_width=float(bin_width), origin=lo,
                                    counts=counts.astype(np.int64), total_events=int(d.size)))


def lowest_decile_baseline(counts) -> float:
    """Median of the lowest 10 % of bins (at least one bin)."""
    c = np.sort(np.asarray(counts, dtype=float))
    n = max(1, int(math.ceil(0.1 * c.size)))
    return float(np.median(c[:n]))


def _peak_index(counts) -> int:
    # np.argmax returns the first maximum: the smallest-time bin wins ties
    return int(np.argmax(counts))


def _require_peak(hist: TimingHistogram) -> None:
    peak = float(np.max(hist.counts))
    if peak <= 0:
        raise InsufficientCounts("histogram is empty")
    if peak < MIN_PEAK_COUNT:
        raise InsufficientCounts(f"peak count {peak:g} < {MIN_PEAK_COUNT}")


def _weights(counts: np.ndarray) -> np.ndarray:
    # residuals are scaled by sqrt(weight), weight = 1/max(count, 1)
    return 1.0 / np.sqrt(np.maximum(counts, 1.0))


def _covariance(jac: np.ndarray, resid: np.ndarray) -> np.ndarray:
    n, p = jac.shape
    dof = max(n - p, 1)
    s2 = float(resid @ resid) / dof
    return np.linalg.pinv(jac.T @ jac) * s2


# ---------------------------------------------------------------------------
# Gaussian
# ---------------------------------------------------------------------------

def _moment_guess(t: np.ndarray, y: np.ndarray) -> tuple:
    base = lowest_decile_baseline(y)
    w = np.clip(y - base, 0.0, None)
    if w.sum() <= 0:
        w = y.astype(float)
    mu = float(np.sum(w * t) / np.sum(w))
    sd = float(math.sqrt(np.sum(w * (t - mu) ** 2) / np.sum(w)))
    amp = float(np.max(y) - base)
    return amp, mu, sd, base


def fit_gaussian(hist: TimingHistogram) -> GaussianFit:
    """Weighted nonlinear least-squares Gaussian-plus-baseline fit."""
    validate(hist)
    _require_peak(hist)
    t = hist.centers
    y = hist.counts.astype(float)
    sw = _weights(y)

    amp0, mu0, sd0, base0 = _moment_guess(t, y)
    sd0 = max(sd0, 0.5 * hist.bin_width)
    x0 = np.array([max(amp0, 1.0), mu0, sd0, max(base0, 0.0)])

    def resid(p):
        a, m, s, b = p
        return (a * np.exp(-0.5 * ((t - m) / s) ** 2) + b - y) * sw

    def jac(p):
        a, m, s, b = p
        u = (t - m) / s
        g = np.exp(-0.5 * u * u)
        return np.column_stack([g, a * g * u / s, a * g * u * u / s, np.ones_like(t)]) * sw[:, None]

    lower = [0.0, -np.inf, 1e-6 * hist.bin_width, 0.0]
    sol = least_squares(resid, x0, jac=jac, bounds=(lower, np.inf), method="trf",
                        xtol=_GAUSS_XTOL, ftol=1e-15, gtol=1e-15, x_scale="jac",
                        max_nfev=_GAUSS_MAX_ITER)
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitNotConverged(f"Gaussian fit: {sol.message}")
    a, m, s, b = (float(v) for v in sol.x)
    if a <= 0:
        raise FitNotConverged("Gaussian fit collapsed to zero amplitude")
    fit = GaussianFit(mu=m, sigma=s, amplitude=a, baseline=b,
                      goodness=float(sol.fun @ sol.fun) / t.size,
                      covariance=_covariance(sol.jac, sol.fun),
                      weighting=WEIGHTING, n_iterations=int(sol.nfev))
    return validate(fit)


def render_gaussian(fit: GaussianFit, bin_width: float, origin: float, n_bins: int,
                    rounded: bool = True) -> TimingHistogram:
    """Histogram whose bin-center values follow ``fit``."""
    centers = origin + (np.arange(n_bins) + 0.5) * bin_width
    vals = fit.evaluate(centers)
    counts = np.rint(vals).astype(np.int64) if rounded else vals
    return TimingHistogram(bin_width=bin_width, origin=origin, counts=counts)


# ---------------------------------------------------------------------------
# Widths at a fraction of the peak
# ---------------------------------------------------------------------------

def width_at_level(hist: TimingHistogram, level: float,
                   fit: GaussianFit | None = None) -> WidthMeasure:
    """Full width where the baseline-corrected histogram falls to ``level``
    of its peak, using the outermost crossing on each side.

    Crossings are linearly interpolated between adjacent bin centers.
    """
    validate(hist)
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if float(np.max(hist.counts)) <= 0:
        raise InsufficientCounts("histogram is empty")
    base = fit.baseline if fit is not None else lowest_decile_baseline(hist.counts)
    y = hist.counts.astype(float) - base
    p = _peak_index(hist.counts)
    if y[p] <= 0:
        raise InsufficientCounts("no peak above baseline")
    thr = level * y[p]
    above = np.flatnonzero(y >= thr)
    lo, hi = int(above[0]), int(above[-1])
    n, bw = y.size, hist.bin_width
    if hi >= n - 1:
        raise LevelNotReached(level, "right")
    if lo <= 0:
        raise LevelNotReached(level, "left")
    c = hist.centers
    right = c[hi] + bw * (y[hi] - thr) / (y[hi] - y[hi + 1])
    left = c[lo] - bw * (y[lo] - thr) / (y[lo] - y[lo - 1])
    return WidthMeasure(level=level, width=float(right - left),
                        left_cross=float(left), right_cross=float(right))


def gaussian_width(sigma: float, level: float) -> float:
    return 2.0 * sigma * math.sqrt(2.0 * math.log(1.0 / level))


def tail_residue(hist: TimingHistogram, fit: GaussianFit, level: float) -> TailResidue:
    """Measured width at ``level`` minus the fitted Gaussian's analytic width."""
    validate(fit)
    measured = width_at_level(hist, level, fit).width
    expected = gaussian_width(fit.sigma, level)
    return TailResidue(level=level, measured_width=measured, gaussian_width=expected,
                       residue=measured - expected)


# ---------------------------------------------------------------------------
# Exponentially modified Gaussian
# ---------------------------------------------------------------------------

def emg_shape(t, mu: float, sigma: float, tau: float) -> np.ndarray:
    """EMG density scaled by ``sqrt(2 pi) * sigma`` (peak 1 when tau = 0)."""
    t = np.asarray(t, dtype=float)
    u = (t - mu) / sigma
    if tau <= 0:
        return np.exp(-0.5 * u * u)
    r = sigma / tau
    z = (r - u) / math.sqrt(2.0)
    out = np.empty_like(u)
    pos = z >= 0
    # erfcx form avoids overflow where the tail is far from the core
    out[pos] = np.exp(-0.5 * u[pos] ** 2) * erfcx(z[pos])
    neg = ~pos
    out[neg] = np.exp(0.5 * r * r - u[neg] * r) * erfc(z[neg])
    return math.sqrt(math.pi / 2.0) * r * out


def fit_exp_modified_gaussian(hist: TimingHistogram,
                              gauss: GaussianFit | None = None) -> EMGFit:
    """Weighted least-squares EMG fit, seeded from the Gaussian fit."""
    validate(hist)
    _require_peak(hist)
    if gauss is None:
        gauss = fit_gaussian(hist)
    t = hist.centers
    y = hist.counts.astype(float)
    sw = _weights(y)
    try:
        measured = width_at_level(hist, 0.5, gauss).width
    except LevelNotReached:
        measured = gauss.fwhm
    tau0 = max(hist.bin_width, measured - gauss.fwhm)
    x0 = np.array([gauss.amplitude, gauss.mu, gauss.sigma, tau0, gauss.baseline])

    def resid(p):
        a, m, s, tau, b = p
        return (a * emg_shape(t, m, s, tau) + b - y) * sw

    lower = [0.0, -np.inf, 1e-3 * hist.bin_width, 0.0, 0.0]
    try:
        sol = least_squares(resid, x0, bounds=(lower, np.inf), method="trf",
                            xtol=1e-10, ftol=1e-12, x_scale="jac", max_nfev=2000)
    except (ValueError, FloatingPointError) as exc:
        raise FitNotConverged(f"EMG fit failed: {exc}") from exc
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitNotConverged(f"EMG fit: {sol.message}")
    a, m, s, tau, b = (float(v) for v in sol.x)
    flags = []
    if tau > 5.0 * s:
        flags.append("tail_dominated")
    if s <= 2e-3 * hist.bin_width:
        flags.append("sigma_at_bound")
    return EMGFit(mu=m, sigma=s, tau=tau, amplitude=a, baseline=b,
                  goodness=float(sol.fun @ sol.fun) / t.size,
                  covariance=_covariance(sol.jac, sol.fun), flags=tuple(flags))


def fwhm_from_sigma(sigma: float) -> float:
    return FWHM_PER_SIGMA * sigma
