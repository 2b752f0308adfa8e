"""Spread of the FW(0.01)/FW(0.5) ratio over seeds.

Measures how far the histogram width ratio of a pure-Gaussian stream
scatters around sqrt(ln 100 / ln 2) for a given number of events.
"""

import argparse
import math

import numpy as np

from snspdkit.core import FWHM_PER_SIGMA
from snspdkit.histogram import build_histogram, fit_gaussian, width_at_level
from snspdkit.jitter import setup_jitter
from snspdkit.simulator import SimulationConfig, draw_delays, gaussian_model

LAW = math.sqrt(math.log(100) / math.log(2))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, nargs="+", default=[100_000, 1_000_000, 10_000_000])
    ap.add_argument("--seeds", type=int, default=100)
    args = ap.parse_args()

    model = gaussian_model(setup_jitter(6, 9) / FWHM_PER_SIGMA, 10.25 / FWHM_PER_SIGMA,
                           21.31 / FWHM_PER_SIGMA)
    print(f"{'events':>10} {'mean dev %':>10} {'sd %':>6} {'within 0.5 %':>13}")
    for n in args.events:
        devs = []
        for seed in range(args.seeds):
            d = draw_delays(model, SimulationConfig(seed=seed, n_events=n, bias=37.0))
            h = build_histogram(d, 1.0, pad_bins=5)
            f = fit_gaussian(h)
            r = width_at_level(h, 0.01, f).width / width_at_level(h, 0.5, f).width
            devs.append(100 * (r / LAW - 1))
        devs = np.array(devs)
        print(f"{n:10d} {devs.mean():10.2f} {devs.std(ddof=1):6.2f} "
              f"{np.mean(np.abs(devs) <= 0.5):13.0%}")


if __name__ == "__main__":
    main()
