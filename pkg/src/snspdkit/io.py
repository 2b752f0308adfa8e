"""Plain-text file formats.

* timestamps / count samples: one number per line, ``#`` lines are comments
* calibration and model files: flat ``key = value`` text
* histograms, sweeps, waveforms and reports: CSV with a ``# key = value``
  metadata block in front

Numbers are written with ``repr`` so reading back is lossless.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import math
import os
import tempfile
import warnings
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import (BiasSweep, CalibrationChain, DetectorModel, PulseWaveform, SweepRecord,
                   Table, TimingHistogram, validate)
from .errors import EmptyFile, InvariantViolation, MissingField, ParseError

ENV_OUT_DIR = "SNSPDKIT_OUT"


def _num(x) -> str:
    return repr(float(x))


def atomic_write(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            yield lineno, raw.rstrip("\r\n")


# ---------------------------------------------------------------------------
# one-number-per-line files
# ---------------------------------------------------------------------------

def read_numbers(path) -> np.ndarray:
    values = []
    for lineno, line in _lines(path):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            v = float(s)
        except ValueError:
            raise ParseError(lineno, s, str(path)) from None
        if not math.isfinite(v):
            raise ParseError(lineno, s, str(path))
        values.append(v)
    if not values:
        raise EmptyFile(f"{path}: no values")
    return np.array(values, dtype=float)


def read_timestamps(path) -> np.ndarray:
    """Delays in ps, in file order."""
    return read_numbers(path)


def write_numbers(path, values: Iterable[float], header: Optional[dict] = None) -> Path:
    out = _io.StringIO()
    for k, v in (header or {}).items():
        out.write(f"# {k} = {v}\n")
    for v in values:
        out.write(_num(v) + "\n")
    return atomic_write(path, out.getvalue())


def write_timestamps(path, delays, header: Optional[dict] = None) -> Path:
    return write_numbers(path, delays, header)


# ---------------------------------------------------------------------------
# key = value files
# ---------------------------------------------------------------------------

def read_keyvalue(path) -> dict:
    """Map of key -> (raw value, line number)."""
    out = {}
    for lineno, line in _lines(path):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ParseError(lineno, s, str(path))
        key, _, value = s.partition("=")
        key = key.strip().lower()
        if not key:
            raise ParseError(lineno, s, str(path))
        out[key] = (value.strip(), lineno)
    if not out:
        raise EmptyFile(f"{path}: no entries")
    return out


def _float_field(entries: dict, name: str, path) -> float:
    raw, lineno = entries[name]
    try:
        return float(raw)
    except ValueError:
        raise ParseError(lineno, raw, str(path)) from None


def _float_list(entries: dict, name: str, path) -> list:
    raw, lineno = entries[name]
    try:
        return [float(p) for p in raw.replace(";", ",").split(",") if p.strip()]
    except ValueError:
        raise ParseError(lineno, raw, str(path)) from None


# calibration field names; values default when the term is negligible
_CAL_DEFAULTS = {"r_pc": 0.0, "cf": 1.0, "nlf_high": 1.0, "nlf_low": 1.0,
                 "wavelength": 1550.0}
_CAL_UNCERTAINTIES = ("rel_pm", "rel_rswitch", "rel_ratt", "rel_pcr_dcr")


def read_calibration(path) -> CalibrationChain:
    """Calibration chain from a ``key = value`` file.

    ``r_att`` may be given as one comma-separated line or as
    ``r_att_1`` .. ``r_att_3``. Negligible terms fall back to neutral
    defaults with a warning.
    """
    e = read_keyvalue(path)
    for name in ("p_m", "r_switch"):
        if name not in e:
            raise MissingField(name)
    if "r_att" in e:
        r_att = _float_list(e, "r_att", path)
        if len(r_att) != 3:
            raise InvariantViolation("CalibrationChain", "three attenuator ratios")
    else:
        r_att = []
        for i in (1, 2, 3):
            if f"r_att_{i}" not in e:
                raise MissingField(f"r_att_{i}")
            r_att.append(_float_field(e, f"r_att_{i}", path))
    kwargs = {"p_m": _float_field(e, "p_m", path), "r_switch": _float_field(e, "r_switch", path),
              "r_att": tuple(r_att)}
    for name, default in _CAL_DEFAULTS.items():
        if name in e:
            kwargs[name] = _float_field(e, name, path)
        else:
            warnings.warn(f"{path}: {name} not given, using {default}", stacklevel=2)
            kwargs[name] = default
    for name in _CAL_UNCERTAINTIES:
        kwargs[name] = _float_field(e, name, path) if name in e else 0.0
    return validate(CalibrationChain(**kwargs))


def write_calibration(path, cal: CalibrationChain) -> Path:
    lines = [f"p_m = {_num(cal.p_m)}", f"r_switch = {_num(cal.r_switch)}",
             "r_att = " + ", ".join(_num(r) for r in cal.r_att)]
    for name in ("wavelength", "cf", "nlf_high", "nlf_low", "r_pc") + _CAL_UNCERTAINTIES:
        lines.append(f"{name} = {_num(getattr(cal, name))}")
    return atomic_write(path, "\n".join(lines) + "\n")


def _parse_table(entries: dict, name: str, path) -> Table:
    raw, lineno = entries[name]
    try:
        if ":" not in raw:
            return Table.constant(float(raw))
        xs, ys = [], []
        for pair in raw.split(","):
            if not pair.strip():
                continue
            x, y = pair.split(":")
            xs.append(float(x))
            ys.append(float(y))
        return Table(xs, ys)
    except ValueError:
        raise ParseError(lineno, raw[:40], str(path)) from None


_MODEL_SCALARS = ("i_sat", "sde_max", "steepness", "sigma_setup", "sigma_noise")


def read_model(path) -> DetectorModel:
    """Detector model; tables are ``x:y`` pairs over normalized bias, or a
    single number for a constant."""
    e = read_keyvalue(path)
    for name in _MODEL_SCALARS + ("intrinsic_sigma", "tail_tau"):
        if name not in e:
            raise MissingField(name)
    kwargs = {name: _float_field(e, name, path) for name in _MODEL_SCALARS}
    for name in ("dcr", "photon_flux"):
        if name in e:
            kwargs[name] = _float_field(e, name, path)
    kwargs["intrinsic_sigma"] = _parse_table(e, "intrinsic_sigma", path)
    kwargs["tail_tau"] = _parse_table(e, "tail_tau", path)
    return validate(DetectorModel(**kwargs))


def write_model(path, model: DetectorModel) -> Path:
    def table(t: Table) -> str:
        return ", ".join(f"{_num(x)}:{_num(y)}" for x, y in zip(t.x, t.y))

    lines = [f"{name} = {_num(getattr(model, name))}"
             for name in _MODEL_SCALARS + ("dcr", "photon_flux")]
    lines.append(f"intrinsic_sigma = {table(model.intrinsic_sigma)}")
    lines.append(f"tail_tau = {table(model.tail_tau)}")
    return atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# CSV tables with a metadata block
# ---------------------------------------------------------------------------

def format_table(columns: list, rows: Iterable, meta: Optional[dict] = None,
                 fmt=_num) -> str:
    out = _io.StringIO()
    for k, v in (meta or {}).items():
        out.write(f"# {k} = {v}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else (fmt(v) if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    return out.getvalue()


def read_table(path) -> tuple:
    """(metadata dict, header list, rows as lists of (text, line number))."""
    meta, header, rows = {}, None, []
    for lineno, line in _lines(path):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s.lstrip("#").strip()
            if "=" in body:
                k, _, v = body.partition("=")
                meta[k.strip()] = v.strip()
            continue
        cells = next(csv.reader([s]))
        if header is None:
            header = [c.strip() for c in cells]
        else:
            if len(cells) != len(header):
                raise ParseError(lineno, s, str(path))
            rows.append((cells, lineno))
    if header is None or not rows:
        raise EmptyFile(f"{path}: no table rows")
    return meta, header, rows


def _cell(text: str, lineno: int, path, optional: bool = False):
    text = text.strip()
    if text == "" and optional:
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(lineno, text, str(path)) from None


def write_histogram(path, hist: TimingHistogram, meta: Optional[dict] = None) -> Path:
    m = {"bin_width_ps": _num(hist.bin_width), "origin_ps": _num(hist.origin),
         "total_events": hist.total_events}
    m.update(meta or {})
    rows = zip(hist.edges[:-1].tolist(), (int(c) for c in hist.counts))
    return atomic_write(path, format_table(["bin_left_ps", "count"], rows, m))


def read_histogram(path) -> TimingHistogram:
    meta, header, rows = read_table(path)
    if "count" not in header:
        raise MissingField("count")
    ci = header.index("count")
    counts = [_cell(r[ci], ln, path) for r, ln in rows]
    if "bin_width_ps" in meta:
        bw = float(meta["bin_width_ps"])
    elif "bin_left_ps" in header and len(rows) >= 2:
        li = header.index("bin_left_ps")
        bw = _cell(rows[1][0][li], rows[1][1], path) - _cell(rows[0][0][li], rows[0][1], path)
    else:
        raise MissingField("bin_width_ps")
    if "origin_ps" in meta:
        origin = float(meta["origin_ps"])
    elif "bin_left_ps" in header:
        origin = _cell(rows[0][0][header.index("bin_left_ps")], rows[0][1], path)
    else:
        origin = 0.0
    return validate(TimingHistogram(bin_width=bw, origin=origin,
                                    counts=np.array(counts).astype(np.int64)))


SWEEP_COLUMNS = ["bias", "sde", "sde_unc", "dcr_cps", "jitter_fwhm_ps", "jitter_m20db_ps"]
_SWEEP_FIELDS = ["bias", "sde", "sde_unc", "dcr", "jitter_fwhm", "jitter_m20db"]


def format_sweep(sweep: BiasSweep, meta: Optional[dict] = None, fmt=_num) -> str:
    m = {"bias_units": "I/I_sat" if sweep.normalized else "uA"}
    m.update(meta or {})
    rows = ([getattr(r, f) for f in _SWEEP_FIELDS] for r in sweep.records)
    return format_table(SWEEP_COLUMNS, rows, m, fmt=fmt)


def write_sweep(path, sweep: BiasSweep, meta: Optional[dict] = None) -> Path:
    return atomic_write(path, format_sweep(sweep, meta))


def read_sweep(path) -> BiasSweep:
    meta, header, rows = read_table(path)
    for name in ("bias", "sde"):
        if name not in header:
            raise MissingField(name)
    idx = {f: header.index(c) for f, c in zip(_SWEEP_FIELDS, SWEEP_COLUMNS) if c in header}
    records = []
    for cells, ln in rows:
        kw = {}
        for f, i in idx.items():
            v = _cell(cells[i], ln, path, optional=f not in ("bias", "sde"))
            if v is not None:
                kw[f] = v
        records.append(SweepRecord(**kw))
    normalized = meta.get("bias_units", "uA") != "uA"
    return validate(BiasSweep(tuple(records), normalized=normalized))


def write_waveform(path, wf: PulseWaveform) -> Path:
    return write_numbers(path, wf.samples, {"sample_interval_ps": _num(wf.sample_interval)})


def read_waveform(path, sample_interval: Optional[float] = None) -> PulseWaveform:
    """Voltage samples (mV), one per line; the sample interval comes from a
    ``# sample_interval_ps = ...`` header unless given explicitly."""
    dt = sample_interval
    if dt is None:
        for lineno, line in _lines(path):
            s = line.strip()
            if s.startswith("#") and "=" in s:
                k, _, v = s.lstrip("#").partition("=")
                if k.strip() == "sample_interval_ps":
                    try:
                        dt = float(v)
                    except ValueError:
                        raise ParseError(lineno, s, str(path)) from None
        if dt is None:
            raise MissingField("sample_interval_ps")
    return PulseWaveform(sample_interval=dt, samples=read_numbers(path))
