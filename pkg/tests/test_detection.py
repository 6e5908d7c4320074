"""FID synthesis, spectra, peak classification, and correlations."""
import math

import numpy as np
import pytest

from popsim.channels import gradient_channel
from popsim.detection import (
    correlation,
    fid_to_csv,
    observe_fid,
    peak_table_to_dict,
    peaks,
    readout_check,
    spectrum,
    spectrum_to_csv,
)
from popsim.dsl import parse
from popsim.operators import product_operator
from popsim.system import DeviationState, chloroform


@pytest.fixture
def sys():
    return chloroform(4.0)


def test_fid_starts_at_transverse_amplitude(sys):
    state = DeviationState(product_operator(("x", "e")))
    fid = observe_fid(sys, state, "I")
    # Tr((Ix + iIy) Ix) = 1 in the two-spin space.
    assert fid.samples[0] == pytest.approx(1.0)


def test_fid_t2_decay(sys):
    state = DeviationState(product_operator(("x", "e")))
    fid = observe_fid(sys, state, "I", n=1024)
    k = 512
    t = k * fid.dwell_s
    env = abs(fid.samples[k])
    # The doublet beats, so compare against the unmodulated envelope bound.
    assert env <= math.exp(-t / sys.t2_s[0]) + 1e-12


def test_fid_rejects_bad_sizes(sys):
    state = DeviationState(product_operator(("x", "e")))
    with pytest.raises(ValueError):
        observe_fid(sys, state, "I", n=100)
    with pytest.raises(ValueError):
        observe_fid(sys, state, "I", n=300)


def test_in_phase_doublet(sys):
    state = DeviationState(product_operator(("x", "e")))
    table = peaks(spectrum(observe_fid(sys, state, "I")))
    assert table.pattern == "in-phase doublet"
    assert len(table.peaks) == 2
    j = sys.coupling_hz(0, 1)
    got = sorted(p.freq_hz for p in table.peaks)
    assert got[0] == pytest.approx(-j / 2, abs=1.0)
    assert got[1] == pytest.approx(+j / 2, abs=1.0)


def test_anti_phase_doublet(sys):
    state = DeviationState(product_operator(("x", "z")))
    table = peaks(spectrum(observe_fid(sys, state, "I")))
    assert table.pattern == "anti-phase doublet"
    a, b = table.peaks
    dphase = abs(((a.phase_deg - b.phase_deg) + 180.0) % 360.0 - 180.0)
    assert dphase == pytest.approx(180.0, abs=5.0)


def test_singlet_without_coupling():
    sys = chloroform(4.0, j_hz=0.0, offset_hz=(25.0, 0.0))
    state = DeviationState(product_operator(("x", "e")))
    table = peaks(spectrum(observe_fid(sys, state, "I", dwell_s=1e-3)))
    assert table.pattern == "singlet"
    assert table.peaks[0].freq_hz == pytest.approx(25.0, abs=1.0)


def test_null_channel(sys):
    state = DeviationState(product_operator(("z", "z")))
    table = peaks(spectrum(observe_fid(sys, state, "S")))
    assert table.pattern == "null"
    assert table.peaks == ()


def test_offsets_on_during_detection():
    sys = chloroform(4.0, offset_hz=(40.0, 0.0))
    state = DeviationState(product_operator(("x", "e")))
    got = sorted(p.freq_hz for p in
                 peaks(spectrum(observe_fid(sys, state, "I"))).peaks)
    j = sys.coupling_hz(0, 1)
    assert got[0] == pytest.approx(40.0 - j / 2, abs=1.0)
    assert got[1] == pytest.approx(40.0 + j / 2, abs=1.0)


def test_correlation_values():
    state = DeviationState(product_operator(("x", "x")))
    assert correlation(state, "x", "x") == pytest.approx(2.0)
    assert correlation(state, "x", "y") == pytest.approx(0.0)
    with pytest.raises(ValueError):
        correlation(state, "z", "x")


def test_readout_check_passes_and_fails(sys):
    state = DeviationState(product_operator(("z", "e")))
    good = readout_check(sys, state, parse("[pi/2]^I_y"),
                         {"I": "in-phase doublet", "S": "null"})
    assert good.passed
    bad = readout_check(sys, state, parse("[pi/2]^I_y"),
                        {"I": "singlet", "S": "null"})
    assert not bad.passed
    assert bad.observed["I"] == "in-phase doublet"


def test_readout_check_rejects_non_unitary(sys):
    state = DeviationState(product_operator(("z", "e")))
    with pytest.raises(ValueError):
        readout_check(sys, state, [gradient_channel(sys)], {"I": "null"})


def test_csv_outputs(tmp_path, sys):
    state = DeviationState(product_operator(("x", "e")))
    fid = observe_fid(sys, state, "I", n=256)
    sp = spectrum(fid)
    fpath = tmp_path / "fid.csv"
    spath = tmp_path / "spec.csv"
    fid_to_csv(fid, fpath)
    spectrum_to_csv(sp, spath)
    flines = fpath.read_text().splitlines()
    assert flines[0] == "t_s,re,im"
    assert len(flines) == 257
    slines = spath.read_text().splitlines()
    assert slines[0] == "freq_hz,re,im"
    assert len(slines) == 513
    # Round-trip through repr keeps full precision.
    t, re, im = flines[1].split(",")
    assert float(re) == fid.samples[0].real


def test_peak_table_to_dict(sys):
    state = DeviationState(product_operator(("x", "e")))
    d = peak_table_to_dict(peaks(spectrum(observe_fid(sys, state, "I"))))
    assert d["pattern"] == "in-phase doublet"
    assert len(d["peaks"]) == 2
    assert set(d["peaks"][0]) == {"freq_hz", "magnitude", "phase_deg"}


def test_spectrum_parseval(sys):
    state = DeviationState(product_operator(("y", "z")))
    fid = observe_fid(sys, state, "I", n=512)
    sp = spectrum(fid)
    lhs = np.sum(np.abs(fid.samples) ** 2)
    rhs = np.sum(np.abs(sp.amplitudes) ** 2) / len(sp.amplitudes)
    assert lhs == pytest.approx(rhs, rel=1e-9)
