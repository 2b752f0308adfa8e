"""Jitter budget and efficiency for a simulated device-#5-like detector.

Simulates 10^5 Gaussian detection delays at 37 uA, fits the histogram,
subtracts setup and noise jitter, and evaluates the SDE budget.
"""

import argparse

from snspdkit.core import BiasSweep, CalibrationChain, FWHM_PER_SIGMA, SweepRecord
from snspdkit.efficiency import budget_for, photon_flux, plateau_average, sde
from snspdkit.histogram import build_histogram, fit_gaussian, width_at_level
from snspdkit.jitter import (Estimate, NoiseJitterInput, budget_from_measurements, noise_jitter,
                             setup_jitter, system_jitter_from_fit)
from snspdkit.simulator import SimulationConfig, draw_delays, gaussian_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--events", type=int, default=100_000)
    args = ap.parse_args()

    j_setup = setup_jitter(6.0, 9.0)
    j_noise = noise_jitter(NoiseJitterInput(5.66, 1.3))
    model = gaussian_model(j_setup / FWHM_PER_SIGMA, j_noise.value / FWHM_PER_SIGMA,
                           21.31 / FWHM_PER_SIGMA)
    delays = draw_delays(model, SimulationConfig(seed=args.seed, n_events=args.events, bias=37.0))
    hist = build_histogram(delays, 1.0, pad_bins=5)
    fit = fit_gaussian(hist)
    budget = budget_from_measurements(system_jitter_from_fit(fit), j_noise, Estimate(j_setup))
    w20 = width_at_level(hist, 0.01, fit).width

    print(f"system jitter      {budget.j_sys:7.2f} +- {budget.u_sys:.2f} ps FWHM")
    print(f"  at -20 dB        {w20:7.2f} ps")
    print(f"setup jitter       {budget.j_setup:7.2f} ps")
    print(f"noise jitter       {budget.j_noise:7.2f} ps")
    print(f"intrinsic jitter   {budget.j_int:7.2f} +- {budget.u_int:.2f} ps")

    cal = CalibrationChain(p_m=1.2e-4, r_switch=0.0105, r_att=(1.02e-3, 0.98e-3, 1.01e-2),
                           r_pc=0.035, cf=1.02, nlf_high=0.998, nlf_low=1.003,
                           rel_pcr_dcr=0.0014, rel_pm=0.007, rel_rswitch=0.008, rel_ratt=0.0007)
    n_gamma = photon_flux(cal)
    rel = budget_for(cal).rel_total
    eta = sde(0.801 * n_gamma + 300.0, 300.0, n_gamma)
    sweep = BiasSweep(tuple(SweepRecord(bias=36.0 + k, sde=eta) for k in range(10)))
    plateau = plateau_average(sweep, calibration_rel=rel)
    print(f"photon flux        {n_gamma:9.0f} photons/s")
    print(f"SDE uncertainty    {100 * rel:7.2f} %")
    print(f"plateau SDE        {100 * plateau.sde_mean:7.1f} % +- {100 * plateau.sde_abs_unc:.1f} %")


if __name__ == "__main__":
    main()
