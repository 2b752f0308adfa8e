"""Command-line entry point: ``snspdkit {fit,jitter,sde,sweep,simulate}``.

Every command writes ``<name>.json`` (full-precision payload plus the run
manifest) and ``<name>.csv`` (six significant digits, manifest in the
``#`` block) into ``--out`` (default ``$SNSPDKIT_OUT`` or ``./snspdkit-out``).

Exit codes: 0 ok, 2 usage, 3 unreadable input, 4 analysis failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import efficiency as eff
from . import histogram as hg
from . import io as fio
from . import jitter as jt
from . import simulator as sim
from .core import FWHM_PER_SIGMA
from .errors import ParseFailure, SnspdError

log = logging.getLogger("snspdkit")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_ANALYSIS = 0, 2, 3, 4


class InputError(Exception):
    """Wraps any failure while loading inputs (exit 3)."""


def _sig6(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _canonical(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

class Report:
    """Collects quantities, side tables and plots for one invocation."""

    def __init__(self, args: argparse.Namespace, name: str):
        self.args = args
        self.name = name
        self.out = Path(args.out)
        self.quantities = []  # (name, value, uncertainty, unit)
        self.payload = {}
        self.tables = {}  # filename -> text
        self.inputs = []

    def add_input(self, path) -> None:
        if path:
            self.inputs.append({"path": str(path), "sha256": _load(fio.sha256_file, path)})

    def q(self, name, value, unc=None, unit=""):
        self.quantities.append((name, value, unc, unit))
        self.payload[name] = value if unc is None else {"value": value, "uncertainty": unc}

    def config(self) -> dict:
        cfg = {}
        for k, v in sorted(vars(self.args).items()):
            if k in ("func", "out"):
                continue
            cfg[k] = v
        return _jsonable(cfg)

    def write(self) -> list:
        fmt = self.args.format
        written = []
        checksums = {}
        for fname, text in self.tables.items():
            p = fio.atomic_write(self.out / fname, text)
            checksums[fname] = hashlib.sha256(text.encode()).hexdigest()
            written.append(p)
        checksums["payload"] = hashlib.sha256(_canonical(self.payload).encode()).hexdigest()
        manifest = {
            "command": self.args.command if not getattr(self.args, "kind", None)
            else f"{self.args.command} {self.args.kind}",
            "inputs": self.inputs,
            "config": self.config(),
            "version": __version__,
            "output_checksums": checksums,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        doc = {"manifest": manifest, "payload": self.payload}
        written.append(fio.atomic_write(self.out / f"{self.name}.json",
                                        json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"))
        if fmt in ("csv", "both"):
            meta = {"command": manifest["command"], "version": __version__,
                    "created": manifest["created"],
                    "inputs": ";".join(f"{i['path']}@{i['sha256'][:16]}" for i in self.inputs),
                    "config": _canonical(manifest["config"]),
                    "payload_sha256": checksums["payload"]}
            rows = [(n, _sig6(v), _sig6(u), unit) for n, v, u, unit in self.quantities]
            written.append(fio.atomic_write(
                self.out / f"{self.name}.csv",
                fio.format_table(["quantity", "value", "uncertainty", "unit"], rows, meta)))
        return written


def _plot(report: Report, draw) -> None:
    """Render a vector plot; failures only log."""
    if report.args.format not in ("plot", "both"):
        return
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        fig.tight_layout()
        report.out.mkdir(parents=True, exist_ok=True)
        fig.savefig(report.out / f"{report.name}.svg")
        plt.close(fig)
    except Exception as exc:  # plotting must never fail the analysis
        log.warning("plot not written: %s", exc)


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------

def _load(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (ParseFailure, OSError, ValueError, SnspdError) as exc:
        raise InputError(str(exc)) from exc


def _load_histogram(args, report: Report):
    if getattr(args, "histogram", None):
        report.add_input(args.histogram)
        return _load(fio.read_histogram, args.histogram)
    if not getattr(args, "timestamps", None):
        raise InputError("give a timestamps file or --histogram")
    report.add_input(args.timestamps)
    delays = _load(fio.read_timestamps, args.timestamps)
    return hg.build_histogram(delays, args.bin_width, pad_bins=args.pad_bins)


def _parse_region(text):
    if text is None:
        return None
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"region must be lo:hi, got {text!r}")
    return lo, hi


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fit(args) -> Report:
    rep = Report(args, "fit")
    hist = _load_histogram(args, rep)
    g = hg.fit_gaussian(hist)
    rep.q("total_events", hist.total_events)
    rep.q("bin_width", hist.bin_width, unit="ps")
    rep.q("gauss_mu", g.mu, None if g.covariance is None else math.sqrt(g.covariance[1, 1]), "ps")
    rep.q("gauss_sigma", g.sigma, g.sigma_unc, "ps")
    rep.q("gauss_fwhm", g.fwhm, g.fwhm_unc, "ps")
    rep.q("gauss_amplitude", g.amplitude, unit="counts")
    rep.q("gauss_baseline", g.baseline, unit="counts")
    rep.q("gauss_goodness", g.goodness)
    rep.payload["weighting"] = g.weighting
    for level in args.levels:
        tag = f"{level:g}"
        try:
            w = hg.width_at_level(hist, level, g)
            r = hg.tail_residue(hist, g, level)
        except SnspdError as exc:
            rep.payload[f"width_{tag}_error"] = str(exc)
            continue
        rep.q(f"width_{tag}", w.width, unit="ps")
        rep.q(f"gauss_width_{tag}", r.gaussian_width, unit="ps")
        rep.q(f"residue_{tag}", r.residue, unit="ps")
    emg = None
    try:
        emg = hg.fit_exp_modified_gaussian(hist, g)
        rep.q("emg_mu", emg.mu, unit="ps")
        rep.q("emg_sigma", emg.sigma, unit="ps")
        rep.q("emg_tau", emg.tau, unit="ps")
        rep.q("emg_amplitude", emg.amplitude, unit="counts")
        rep.q("emg_baseline", emg.baseline, unit="counts")
        rep.q("emg_goodness", emg.goodness)
        rep.payload["emg_flags"] = list(emg.flags)
    except SnspdError as exc:
        rep.payload["emg_error"] = str(exc)

    t = hist.centers
    cols = ["bin_left_ps", "count", "gauss_model"] + (["emg_model"] if emg else [])
    gm = g.evaluate(t)
    em = emg.evaluate(t) if emg else None
    rows = ([float(hist.edges[i]), int(hist.counts[i]), float(gm[i])]
            + ([float(em[i])] if emg else []) for i in range(hist.n_bins))
    rep.tables["fit_histogram.csv"] = fio.format_table(
        cols, rows, {"bin_width_ps": repr(hist.bin_width), "origin_ps": repr(hist.origin)})

    def draw(ax):
        ax.semilogy(t, np.maximum(hist.counts, 0.5), drawstyle="steps-mid", label="data")
        ax.semilogy(t, gm, label="gaussian fit")
        if emg:
            ax.semilogy(t, em, "--", label="EMG fit")
        ax.set_ylim(0.5, None)
        ax.set_xlabel("delay (ps)")
        ax.set_ylabel("counts")
        ax.legend()

    _plot(rep, draw)
    return rep


def cmd_jitter(args) -> Report:
    rep = Report(args, "jitter")
    hist = _load_histogram(args, rep)
    g = hg.fit_gaussian(hist)
    j_sys = jt.system_jitter_from_fit(g)

    if args.setup_fwhm is not None:
        j_setup = jt.Estimate(args.setup_fwhm, args.setup_unc)
    else:
        j_setup = jt.Estimate(jt.setup_jitter(args.pulse_fwhm, args.tcspc_fwhm), args.setup_unc)

    sigma_rms = args.sigma_rms
    if sigma_rms is None:
        if not args.noise_trace:
            raise InputError("give --sigma-rms or --noise-trace")
        rep.add_input(args.noise_trace)
        trace = _load(fio.read_waveform, args.noise_trace, args.sample_interval)
        sigma_rms = jt.baseline_rms(trace, args.noise_samples)
    sr = args.slew_rate
    if sr is None:
        if not args.waveform:
            raise InputError("give --slew-rate or --waveform")
        rep.add_input(args.waveform)
        wf = _load(fio.read_waveform, args.waveform, args.sample_interval)
        sr = jt.slew_rate(wf, smooth=args.smooth)
    j_noise = jt.noise_jitter(jt.NoiseJitterInput(sigma_rms, sr, args.sigma_rms_unc,
                                                  args.slew_rate_unc))
    budget = jt.budget_from_measurements(j_sys, j_noise, j_setup)
    rep.q("sigma_rms", sigma_rms, args.sigma_rms_unc, "mV")
    rep.q("slew_rate", sr, args.slew_rate_unc, "mV/ps")
    rep.q("j_sys", budget.j_sys, budget.u_sys, "ps")
    rep.q("j_noise", budget.j_noise, budget.u_noise, "ps")
    rep.q("j_setup", budget.j_setup, budget.u_setup, "ps")
    rep.q("j_int", budget.j_int, budget.u_int, "ps")
    rep.q("j_int_clamped", budget.clamped)
    rep.payload["uncertainty_method"] = "first-order propagation (artifact choice)"
    for level in args.levels:
        try:
            w = hg.width_at_level(hist, level, g)
            rep.q(f"j_sys_width_{level:g}", w.width, unit="ps")
        except SnspdError as exc:
            rep.payload[f"width_{level:g}_error"] = str(exc)

    def draw(ax):
        names = ["system", "noise", "setup", "intrinsic"]
        vals = [budget.j_sys, budget.j_noise, budget.j_setup, budget.j_int]
        errs = [u or 0.0 for u in (budget.u_sys, budget.u_noise, budget.u_setup, budget.u_int)]
        ax.bar(names, vals, yerr=errs)
        ax.set_ylabel("jitter FWHM (ps)")

    _plot(rep, draw)
    return rep


def cmd_sde(args) -> Report:
    rep = Report(args, "sde")
    rep.add_input(args.calibration)
    cal = _load(fio.read_calibration, args.calibration)
    rel_pcr = cal.rel_pcr_dcr
    if args.counts:
        rep.add_input(args.counts)
        samples = _load(fio.read_numbers, args.counts)
        rel_pcr = eff.pcr_dcr_uncertainty(samples, args.plateau_points)
        rep.q("pcr_dcr_sample_mean", float(np.mean(samples)), unit="counts")
        rep.q("pcr_dcr_sample_std", float(np.std(samples, ddof=1)), unit="counts")
    budget = eff.sde_uncertainty(rel_pcr, cal.rel_pm, cal.rel_rswitch, cal.rel_ratt)
    n_gamma = eff.photon_flux(cal)
    rep.q("photon_energy", eff.photon_energy(cal.wavelength), unit="J")
    rep.q("n_gamma", n_gamma, n_gamma * math.sqrt(cal.rel_pm ** 2 + cal.rel_rswitch ** 2
                                                  + 3 * cal.rel_ratt ** 2), "photons/s")
    for key in ("rel_pcr_dcr", "rel_pm", "rel_rswitch", "rel_ratt", "rel_total"):
        rep.q(key, getattr(budget, key), unit="fraction")
    if args.pcr is not None:
        eta = eff.sde(args.pcr, args.dcr, n_gamma)
        rep.q("sde", eta, eta * budget.rel_total, "fraction")
    return rep


def _calibration_rel(args, rep: Report) -> float:
    if args.calibration:
        rep.add_input(args.calibration)
        cal = _load(fio.read_calibration, args.calibration)
        return eff.budget_for(cal).rel_total
    return args.calibration_rel


def cmd_sweep(args) -> Report:
    rep = Report(args, "sweep")
    rep.add_input(args.sweep)
    sweep = _load(fio.read_sweep, args.sweep)
    cal_rel = _calibration_rel(args, rep)
    if sweep.normalized:
        raise InputError("sweep file already normalized; give bias in uA")
    i_sat = eff.saturation_current(sweep)
    rep.q("i_sat", i_sat, unit="uA")
    plateau = eff.plateau_average(sweep, args.region, cal_rel)
    rep.q("plateau_sde", plateau.sde_mean, plateau.sde_abs_unc, "fraction")
    rep.q("plateau_rel_unc", plateau.sde_rel_unc, unit="fraction")
    rep.q("plateau_points", plateau.n_points)
    rep.q("plateau_max_rel_deviation", plateau.max_rel_deviation, unit="fraction")
    rep.payload["plateau_flat_advisory"] = plateau.flat
    norm = eff.normalize_bias(sweep, i_sat)
    if np.sum(np.isfinite(norm.column("jitter_fwhm"))) >= 5:
        inf = eff.jitter_inflexion(norm)
        rep.q("jitter_inflexion", inf.position, unit="I/I_sat")
        rep.q("jitter_max_descent", inf.slope, unit="ps per I_sat")
        rep.payload["no_descent"] = inf.no_descent
    else:
        rep.payload["jitter_inflexion_error"] = "fewer than 5 jitter points"
    rep.tables["sweep_normalized.csv"] = fio.format_sweep(norm, {"i_sat_uA": repr(i_sat)})

    def draw(ax):
        b = norm.bias
        ax.plot(b, norm.column("jitter_fwhm"), "o-", label="jitter FWHM")
        if np.any(np.isfinite(norm.column("jitter_m20db"))):
            ax.plot(b, norm.column("jitter_m20db"), "s-", label="jitter -20 dB")
        ax.set_xlabel("I_b / I_sat")
        ax.set_ylabel("jitter (ps)")
        ax2 = ax.twinx()
        ax2.plot(b, norm.sde, "r.-", label="SDE")
        ax2.set_ylabel("SDE")
        ax.legend(loc="upper right")

    _plot(rep, draw)
    return rep


def _model(args, rep: Report):
    if args.model:
        rep.add_input(args.model)
        return _load(fio.read_model, args.model)
    return sim.default_model()


def cmd_simulate(args) -> Report:
    rep = Report(args, f"simulate_{args.kind}")
    if args.kind == "delays":
        model = _model(args, rep)
        bias = args.bias if args.bias is not None else model.i_sat
        delays = sim.draw_delays(model, sim.SimulationConfig(args.seed, args.n_events, bias))
        rep.tables["delays.txt"] = _numbers_text(delays, {"bias_uA": repr(bias), "seed": args.seed})
        rep.q("n_events", int(delays.size))
        rep.q("sample_mean", float(np.mean(delays)), unit="ps")
        rep.q("sample_fwhm_equiv", FWHM_PER_SIGMA * float(np.std(delays)), unit="ps")
    elif args.kind == "counts":
        counts = sim.simulate_count_run(args.rate, args.integration_time, args.repeats, args.seed)
        rep.tables["counts.txt"] = _numbers_text(counts, {"seed": args.seed})
        rep.q("mean", float(np.mean(counts)), unit="counts")
        rep.q("std", float(np.std(counts, ddof=1)) if counts.size > 1 else 0.0, unit="counts")
        rep.q("shot_noise", math.sqrt(args.rate * args.integration_time), unit="counts")
    elif args.kind == "sweep":
        model = _model(args, rep)
        lo, hi = args.span
        grid = np.linspace(lo, hi, args.points) * model.i_sat
        sweep = sim.simulate_sweep(model, grid, args.n_events, args.seed,
                                   bin_width=args.bin_width, workers=args.workers)
        rep.tables["sweep.csv"] = fio.format_sweep(sweep, {"seed": args.seed})
        rep.q("points", len(sweep))
        rep.q("model_i_sat", model.i_sat, unit="uA")
    elif args.kind == "waveform":
        wf = sim.synthesize_waveform(args.amplitude, args.rise_time, args.sigma_rms,
                                     args.sample_interval, args.seed, n_pre=args.n_pre)
        rep.tables["waveform.txt"] = _numbers_text(
            wf.samples, {"sample_interval_ps": repr(wf.sample_interval)})
        rep.q("analytic_slew_rate", args.amplitude / args.rise_time, unit="mV/ps")
        rep.q("slew_rate", jt.slew_rate(wf), unit="mV/ps")
    return rep


def _numbers_text(values, header) -> str:
    lines = [f"# {k} = {v}" for k, v in header.items()]
    lines += [repr(float(v)) for v in values]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=os.environ.get(fio.ENV_OUT_DIR, "snspdkit-out"),
                   help=f"output directory (default ${fio.ENV_OUT_DIR} or ./snspdkit-out)")
    p.add_argument("--format", choices=("csv", "plot", "both"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bin-width", type=float, default=hg.DEFAULT_BIN_WIDTH, help="ps")
    p.add_argument("--pad-bins", type=int, default=5,
                   help="empty bins added on each side of a timestamp histogram")
    p.add_argument("--level", dest="levels", type=float, action="append",
                   help="width level as a fraction of the peak (repeatable; default 0.5 and 0.01)")
    p.add_argument("--region", type=_parse_region, default=None, help="plateau lo:hi in uA")
    p.add_argument("--model", default=None, help="detector model file")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snspdkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("fit", help="histogram + Gaussian/EMG fit + widths")
    _common(p)
    p.add_argument("timestamps", nargs="?")
    p.add_argument("--histogram")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("jitter", help="jitter budget from histogram, waveform and setup")
    _common(p)
    p.add_argument("timestamps", nargs="?")
    p.add_argument("--histogram")
    p.add_argument("--pulse-fwhm", type=float, default=6.0, help="laser pulse FWHM, ps")
    p.add_argument("--tcspc-fwhm", type=float, default=9.0, help="TCSPC jitter FWHM, ps")
    p.add_argument("--setup-fwhm", type=float, default=None, help="override the setup jitter, ps")
    p.add_argument("--setup-unc", type=float, default=None)
    p.add_argument("--sigma-rms", type=float, default=None, help="mV")
    p.add_argument("--sigma-rms-unc", type=float, default=None)
    p.add_argument("--noise-trace", default=None)
    p.add_argument("--noise-samples", type=int, default=None)
    p.add_argument("--slew-rate", type=float, default=None, help="mV/ps")
    p.add_argument("--slew-rate-unc", type=float, default=None)
    p.add_argument("--waveform", default=None)
    p.add_argument("--sample-interval", type=float, default=None, help="ps, overrides file header")
    p.add_argument("--smooth", type=int, default=1, help="boxcar width before differencing")
    p.set_defaults(func=cmd_jitter)

    p = sub.add_parser("sde", help="efficiency and uncertainty budget")
    _common(p)
    p.add_argument("--calibration", required=True)
    p.add_argument("--pcr", type=float, default=None, help="photon count rate, cps")
    p.add_argument("--dcr", type=float, default=0.0, help="dark count rate, cps")
    p.add_argument("--counts", default=None, help="repeated PCR-DCR samples, one per line")
    p.add_argument("--plateau-points", type=int, default=10)
    p.set_defaults(func=cmd_sde)

    p = sub.add_parser("sweep", help="I_sat, plateau average, normalized curves, inflexion")
    _common(p)
    p.add_argument("sweep")
    p.add_argument("--calibration", default=None)
    p.add_argument("--calibration-rel", type=float, default=0.0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="delay streams, count runs, sweeps, waveforms")
    _common(p)
    p.add_argument("kind", choices=("delays", "counts", "sweep", "waveform"))
    p.add_argument("--bias", type=float, default=None, help="uA (default: model i_sat)")
    p.add_argument("--n-events", type=int, default=100_000)
    p.add_argument("--rate", type=float, default=1e5)
    p.add_argument("--integration-time", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=200)
    p.add_argument("--span", type=float, nargs=2, default=(0.8, 1.3),
                   metavar=("LO", "HI"), help="sweep range in units of I_sat")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--amplitude", type=float, default=130.0)
    p.add_argument("--rise-time", type=float, default=100.0)
    p.add_argument("--sigma-rms", type=float, default=0.0)
    p.add_argument("--sample-interval", type=float, default=1.0)
    p.add_argument("--n-pre", type=int, default=100)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if not args.levels:
        args.levels = [0.5, 0.01]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = args.func(args)
        written = report.write()
    except InputError as exc:
        print(f"snspdkit: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParseFailure as exc:
        print(f"snspdkit: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SnspdError as exc:
        print(f"snspdkit: analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    for p in written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
