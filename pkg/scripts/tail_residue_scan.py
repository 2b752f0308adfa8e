"""-20 dB tail residue against the exponential tail constant.

For each tau the script simulates an EMG delay stream, fits a Gaussian
and an EMG, and prints the residue and the recovered tail constant.
"""

import argparse

import numpy as np

from snspdkit.histogram import build_histogram, fit_exp_modified_gaussian, fit_gaussian, tail_residue
from snspdkit.simulator import SimulationConfig, draw_delays, gaussian_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, default=10.0, help="Gaussian core sigma, ps")
    ap.add_argument("--taus", type=float, nargs="+", default=[0, 2, 5, 10, 15, 20, 30])
    ap.add_argument("--events", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    print(f"{'tau':>6} {'res(0.5)':>9} {'res(0.01)':>10} {'emg tau':>8} {'emg sigma':>10}  flags")
    for tau in args.taus:
        d = draw_delays(gaussian_model(0.0, 0.0, args.sigma, tau=tau),
                        SimulationConfig(seed=args.seed, n_events=args.events, bias=35.0))
        h = build_histogram(d, 1.0, pad_bins=5)
        g = fit_gaussian(h)
        r50 = tail_residue(h, g, 0.5).residue
        r01 = tail_residue(h, g, 0.01).residue
        emg = fit_exp_modified_gaussian(h, g)
        print(f"{tau:6.1f} {r50:9.2f} {r01:10.2f} {emg.tau:8.2f} {emg.sigma:10.2f}  "
              f"{','.join(emg.flags) or '-'}")


if __name__ == "__main__":
    np.set_printoptions(precision=3)
    main()
