import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from snspdkit import io as fio
from snspdkit.core import CalibrationChain
from snspdkit.efficiency import budget_for
from snspdkit.errors import EmptyFile, InvariantViolation, MissingField, ParseError
from snspdkit.histogram import build_histogram
from snspdkit.simulator import SimulationConfig, default_model, draw_delays, simulate_sweep

REFERENCE_CAL = """# reference chain with its relative uncertainties
p_m = 1.2e-4
r_switch = 0.0105
r_att = 1.02e-3, 0.98e-3, 1.01e-2
r_pc = 0.035
cf = 1.02
nlf_high = 0.998
nlf_low = 1.003
wavelength = 1550
rel_pcr_dcr = 0.0014
rel_pm = 0.0070
rel_rswitch = 0.0080
rel_ratt = 0.0007
"""


def test_read_timestamps(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("0.5\n1.5\n1.6\n")
    assert fio.read_timestamps(p).tolist() == [0.5, 1.5, 1.6]


def test_read_timestamps_parse_error(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("# header\nabc\n1.0\n")
    with pytest.raises(ParseError) as exc:
        fio.read_timestamps(p)
    assert exc.value.line == 2


def test_read_timestamps_empty(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("# only a header\n")
    with pytest.raises(EmptyFile):
        fio.read_timestamps(p)


def test_timestamps_round_trip(tmp_path):
    d = draw_delays(default_model(), SimulationConfig(seed=1, n_events=5000, bias=33.0))
    fio.write_timestamps(tmp_path / "d.txt", d, {"seed": 1})
    assert np.array_equal(fio.read_timestamps(tmp_path / "d.txt"), d)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=50))
def test_numbers_round_trip_lossless(tmp_path, values):
    p = fio.write_numbers(tmp_path / "n.txt", values)
    assert fio.read_numbers(p).tolist() == [float(v) for v in values]


def test_calibration_reference_budget(tmp_path):
    p = tmp_path / "cal.txt"
    p.write_text(REFERENCE_CAL)
    cal = fio.read_calibration(p)
    assert budget_for(cal).rel_total == pytest.approx(0.0108, abs=1e-4)


def test_calibration_r_pc_default_warns(tmp_path):
    p = tmp_path / "cal.txt"
    p.write_text("\n".join(l for l in REFERENCE_CAL.splitlines() if not l.startswith("r_pc")))
    with pytest.warns(UserWarning, match="r_pc"):
        cal = fio.read_calibration(p)
    assert cal.r_pc == 0.0


def test_calibration_split_attenuators(tmp_path):
    p = tmp_path / "cal.txt"
    p.write_text("p_m = 1e-4\nr_switch = 0.01\nr_att_1 = 1e-3\nr_att_2 = 2e-3\nr_att_3 = 3e-3\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert fio.read_calibration(p).r_att == (1e-3, 2e-3, 3e-3)


def test_calibration_missing_field(tmp_path):
    p = tmp_path / "cal.txt"
    p.write_text("r_switch = 0.01\nr_att = 1e-3, 1e-3, 1e-3\n")
    with pytest.raises(MissingField) as exc:
        fio.read_calibration(p)
    assert exc.value.name == "p_m"


@pytest.mark.parametrize("value", ["0", "-0.5"])
def test_calibration_bad_switch_ratio(tmp_path, value):
    p = tmp_path / "cal.txt"
    p.write_text(REFERENCE_CAL.replace("r_switch = 0.0105", f"r_switch = {value}"))
    with pytest.raises(InvariantViolation):
        fio.read_calibration(p)


def test_calibration_round_trip(tmp_path):
    cal = CalibrationChain(p_m=1.234e-4, r_switch=0.0105, r_att=(1.02e-3, 0.98e-3, 1.01e-2),
                           r_pc=0.035, cf=1.02, rel_pm=0.007)
    fio.write_calibration(tmp_path / "c.txt", cal)
    assert fio.read_calibration(tmp_path / "c.txt") == cal


def test_model_round_trip(tmp_path):
    m = default_model()
    fio.write_model(tmp_path / "m.txt", m)
    back = fio.read_model(tmp_path / "m.txt")
    assert np.array_equal(back.intrinsic_sigma.y, m.intrinsic_sigma.y)
    assert np.array_equal(back.tail_tau.x, m.tail_tau.x)
    assert back.sigma_setup == m.sigma_setup and back.i_sat == m.i_sat


def test_model_constant_tables(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("i_sat = 35\nsde_max = 0.8\nsteepness = 30\nsigma_setup = 4.59\n"
                 "sigma_noise = 4.35\nintrinsic_sigma = 9.05\ntail_tau = 0\n")
    m = fio.read_model(p)
    assert float(m.intrinsic_sigma(1.3)) == 9.05


def test_histogram_round_trip(tmp_path):
    h = build_histogram(np.random.default_rng(0).normal(0, 10, 2000), 0.7)
    fio.write_histogram(tmp_path / "h.csv", h)
    back = fio.read_histogram(tmp_path / "h.csv")
    assert back.bin_width == h.bin_width and back.origin == h.origin
    assert np.array_equal(back.counts, h.counts)


def test_sweep_round_trip(tmp_path):
    sw = simulate_sweep(default_model(), np.linspace(28, 45, 8), 2000, seed=3)
    fio.write_sweep(tmp_path / "s.csv", sw)
    assert fio.read_sweep(tmp_path / "s.csv") == sw


def test_sweep_parse_error_names_line(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("# bias_units = uA\nbias,sde\n30,0.5\n31,oops\n")
    with pytest.raises(ParseError) as exc:
        fio.read_sweep(p)
    assert exc.value.line == 4


def test_waveform_round_trip(tmp_path):
    from snspdkit.simulator import synthesize_waveform
    wf = synthesize_waveform(130.0, 100.0, 5.66, 0.5, seed=1)
    fio.write_waveform(tmp_path / "w.txt", wf)
    back = fio.read_waveform(tmp_path / "w.txt")
    assert back.sample_interval == 0.5
    assert np.array_equal(back.samples, wf.samples)


def test_atomic_write_leaves_no_temp(tmp_path):
    fio.atomic_write(tmp_path / "a.txt", "x\n")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
