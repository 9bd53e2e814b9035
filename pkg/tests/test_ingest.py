import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegpipe.errors import (
    EmptyCorpus,
    EmptyMask,
    NonNumericField,
    PowerOutOfRange,
    SessionFormatError,
    WrongColumnCount,
    WrongRowCount,
)
from eegpipe.ingest import (
    ALL_BANDS,
    N_EVENTS,
    Band,
    Corpus,
    Scaler,
    ScalerMode,
    SessionClass,
    apply_scaler,
    fit_scaler,
    format_band_mask,
    parse_band_mask,
    parse_session,
    read_corpus,
    select_bands,
    session_filename,
    write_corpus,
    write_session,
)

from conftest import make_session


def test_band_table():
    assert len(Band) == 8
    ranges = [b.freq_range for b in Band]
    assert ranges == [(1, 3), (4, 7), (8, 9), (10, 12), (13, 17), (18, 30), (31, 40), (41, 50)]
    for (_, hi), (lo, _) in zip(ranges, ranges[1:]):
        assert hi < lo
    assert Band.HIGH_ALPHA.contains(10) and Band.THETA.contains(5)
    assert not Band.LOW_ALPHA.contains(10)


def test_band_mask_parsing():
    assert parse_band_mask("halpha, delta") == (Band.DELTA, Band.HIGH_ALPHA)
    assert parse_band_mask("all") == ALL_BANDS
    assert parse_band_mask(["HIGH_GAMMA", "0"]) == (Band.DELTA, Band.HIGH_GAMMA)
    assert format_band_mask(parse_band_mask("lbeta,theta")) == "theta,lbeta"
    with pytest.raises(EmptyMask):
        parse_band_mask("")
    with pytest.raises(ValueError):
        parse_band_mask("kappa")


def _rows(n_rows=N_EVENTS, n_cols=11, value="100"):
    line = ",".join(["1600000000", "10", "5"] + [value] * (n_cols - 3))
    return "\n".join([line] * n_rows) + "\n"


def test_parse_well_formed():
    s = parse_session(_rows(), session_id="a")
    assert len(s.events) == N_EVENTS
    assert s.powers.shape == (N_EVENTS, 8)
    assert s.primary_freq == 10.0 and s.secondary_freq == 5.0
    assert np.all(s.powers == 100.0)


@pytest.mark.parametrize(
    "text, error",
    [
        (_rows(n_rows=39), WrongRowCount),
        (_rows(n_rows=41), WrongRowCount),
        (_rows(n_cols=10), WrongColumnCount),
        (_rows(n_cols=12), WrongColumnCount),
        (_rows(value="abc"), NonNumericField),
        (_rows(value="40000"), PowerOutOfRange),
        (_rows(value="-1"), PowerOutOfRange),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse_session(text)


def test_parse_rejects_mixed_frequencies():
    lines = _rows().splitlines()
    lines[5] = lines[5].replace(",10,5,", ",12,5,", 1)
    with pytest.raises(SessionFormatError):
        parse_session("\n".join(lines))


def test_parse_accepts_file_object():
    s = parse_session(io.StringIO(_rows()))
    assert s.powers.shape == (N_EVENTS, 8)


def test_write_format():
    s = make_session(3)
    lines = write_session(s).splitlines()
    assert len(lines) == N_EVENTS
    assert all(len(line.split(",")) == 11 for line in lines)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 32767.0))
def test_round_trip(seed, scale):
    s = make_session(seed, scale=scale)
    back = parse_session(write_session(s), session_id=s.session_id, participant_id=0)
    assert back == s
    assert np.array_equal(back.powers, s.powers)


def test_corpus_dir_round_trip(tmp_path, small_corpus):
    names = write_corpus(small_corpus, tmp_path)
    assert "noise_n0.csv" in names and "0_s0.csv" in names
    manifest = (tmp_path / "manifest.csv").read_text().splitlines()
    assert manifest[0] == "session_file,participant_id,class"
    assert "noise_n0.csv,-1,noise" in manifest
    back = read_corpus(tmp_path)
    assert [s.session_id for s in back] == [s.session_id for s in small_corpus]
    for a, b in zip(back, small_corpus):
        assert a == b
    noise = [s for s in back if s.session_class is SessionClass.NOISE][0]
    assert noise.participant_id is None
    assert session_filename(noise) == "noise_n0.csv"


def test_read_empty_dir(tmp_path):
    with pytest.raises(EmptyCorpus):
        read_corpus(tmp_path)


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        Corpus((make_session(0, "x"), make_session(1, "x")))


def test_fit_scaler_min_max():
    s = make_session(0)
    powers = np.array(s.powers)
    powers[:, Band.DELTA] = np.linspace(10, 1000, N_EVENTS)
    c = Corpus((s.with_powers(powers),))
    sc = fit_scaler(c)
    assert (sc.mins[Band.DELTA], sc.maxs[Band.DELTA]) == (10.0, 1000.0)
    assert np.array_equal(sc.mins, powers.min(axis=0))


def test_fixed_range():
    sc = fit_scaler(Corpus((make_session(0),)), ScalerMode.FIXED_RANGE)
    assert np.all(sc.mins == 0) and np.all(sc.maxs == 32767)


def test_fit_scaler_empty():
    with pytest.raises(EmptyCorpus):
        fit_scaler(Corpus(()))


def test_apply_scaler_endpoints_and_constant_band():
    s = make_session(1)
    powers = np.array(s.powers)
    powers[:, Band.THETA] = 77.0
    c = Corpus((s.with_powers(powers), make_session(2, "b")))
    scaled = apply_scaler(fit_scaler(c), c)
    allp = np.concatenate([x.powers for x in scaled])
    assert allp.min() == 0.0 and allp.max() == 1.0
    assert np.all(allp[:, Band.DELTA].max() == 1.0) and allp[:, Band.DELTA].min() == 0.0
    assert np.all(scaled.sessions[0].powers[:, Band.THETA] == 0.0)


def test_scaler_clamps_and_is_monotone():
    sc = Scaler(np.zeros(8), np.full(8, 100.0))
    x = np.tile(np.array([-5.0, 0, 25, 50, 100, 150, 10, 90]), (2, 1))
    out = sc.transform(x)
    assert out[0].tolist() == [0.0, 0.0, 0.25, 0.5, 1.0, 1.0, 0.1, 0.9]


def test_unit_scaler_is_idempotent():
    s = make_session(4, scale=1.0)
    sc = Scaler(np.zeros(8), np.ones(8), ScalerMode.FIXED_RANGE)
    assert np.array_equal(sc.transform(s.powers), s.powers)


@pytest.mark.parametrize("mask, width", [("delta,halpha", 2), ("all", 8), ("delta", 1)])
def test_select_bands(mask, width):
    s = make_session(5)
    m = select_bands(s, parse_band_mask(mask))
    assert m.shape == (N_EVENTS, width)
    if mask == "delta,halpha":
        assert np.array_equal(m, s.powers[:, [0, 3]])
    if mask == "all":
        assert m.size == 320


def test_select_bands_empty():
    with pytest.raises(EmptyMask):
        select_bands(make_session(0), ())


def test_session_is_immutable():
    s = make_session(0)
    with pytest.raises(ValueError):
        s.powers[0, 0] = 1.0
