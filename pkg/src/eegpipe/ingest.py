"""Session data model, session file I/O, [0, 1] scaling and band selection.

A session file is headerless ASCII CSV with 40 lines of 11 fields::

    timestamp, primary_freq, secondary_freq, delta, theta, low_alpha,
    high_alpha, low_beta, high_beta, low_gamma, high_gamma

Session metadata (participant, class, id) lives in the corpus manifest,
not in the session file itself.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyCorpus,
    EmptyMask,
    NonNumericField,
    PowerOutOfRange,
    SessionFormatError,
    WrongColumnCount,
    WrongRowCount,
)

N_EVENTS = 40
N_COLUMNS = 11
POWER_MAX = 32767.0
NOISE_PARTICIPANT = -1


class Band(enum.IntEnum):
    """The eight device bands, in ascending frequency order."""

    DELTA = 0
    THETA = 1
    LOW_ALPHA = 2
    HIGH_ALPHA = 3
    LOW_BETA = 4
    HIGH_BETA = 5
    LOW_GAMMA = 6
    HIGH_GAMMA = 7

    @property
    def freq_range(self) -> tuple[int, int]:
        return _BAND_RANGES[self]

    @property
    def short_name(self) -> str:
        return _SHORT_NAMES[self]

    def contains(self, freq: float) -> bool:
        lo, hi = self.freq_range
        return lo <= freq <= hi


_BAND_RANGES = {
    Band.DELTA: (1, 3),
    Band.THETA: (4, 7),
    Band.LOW_ALPHA: (8, 9),
    Band.HIGH_ALPHA: (10, 12),
    Band.LOW_BETA: (13, 17),
    Band.HIGH_BETA: (18, 30),
    Band.LOW_GAMMA: (31, 40),
    Band.HIGH_GAMMA: (41, 50),
}

_SHORT_NAMES = {
    Band.DELTA: "delta",
    Band.THETA: "theta",
    Band.LOW_ALPHA: "lalpha",
    Band.HIGH_ALPHA: "halpha",
    Band.LOW_BETA: "lbeta",
    Band.HIGH_BETA: "hbeta",
    Band.LOW_GAMMA: "lgamma",
    Band.HIGH_GAMMA: "hgamma",
}

ALL_BANDS: tuple[Band, ...] = tuple(Band)


def parse_band_mask(text: str | Iterable[str]) -> tuple[Band, ...]:
    """Parse ``"delta,halpha"`` (or ``"all"``) into a sorted band tuple.

    Accepts the short names above, the enum names (``HIGH_ALPHA``) and
    band indices.
    """
    if isinstance(text, str):
        if text.strip().lower() == "all":
            return ALL_BANDS
        items = [t for t in (s.strip() for s in text.split(",")) if t]
    else:
        items = list(text)
    lookup = {b.short_name: b for b in Band}
    lookup.update({b.name.lower(): b for b in Band})
    lookup.update({b.name.lower().replace("_", ""): b for b in Band})
    bands = set()
    for item in items:
        key = str(item).strip().lower()
        if key.isdigit() and int(key) < len(Band):
            bands.add(Band(int(key)))
        elif key in lookup:
            bands.add(lookup[key])
        else:
            raise ValueError(f"unknown band {item!r}")
    if not bands:
        raise EmptyMask("band mask is empty")
    return tuple(sorted(bands))


def format_band_mask(mask: Sequence[Band]) -> str:
    return ",".join(Band(b).short_name for b in sorted(mask))


class SessionClass(enum.Enum):
    SIGNAL = "signal"
    NOISE = "noise"


@dataclass(frozen=True)
class EegEvent:
    timestamp: int
    primary_freq: float
    secondary_freq: float
    powers: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Session:
    """One recording: 40 events of 8 band powers under a fixed stimulus.

    ``powers`` is a read-only ``(40, 8)`` float array. Raw sessions hold
    values in [0, 32767]; scaled sessions hold values in [0, 1].
    """

    timestamps: np.ndarray
    primary_freq: float
    secondary_freq: float
    powers: np.ndarray
    session_id: str = ""
    participant_id: int | None = None
    session_class: SessionClass = SessionClass.SIGNAL

    def __post_init__(self):
        ts = np.array(self.timestamps, dtype=np.int64)
        pw = np.array(self.powers, dtype=np.float64)
        if ts.shape != (N_EVENTS,):
            raise WrongRowCount(f"expected {N_EVENTS} events, got {ts.shape[0] if ts.ndim else 0}")
        if pw.shape != (N_EVENTS, len(Band)):
            raise SessionFormatError(f"powers must be {N_EVENTS}x{len(Band)}, got {pw.shape}")
        if np.any(np.diff(ts) < 0):
            raise SessionFormatError("timestamps must be non-decreasing")
        if not np.all(np.isfinite(pw)) or pw.min() < 0 or pw.max() > POWER_MAX:
            raise PowerOutOfRange(f"band powers must lie in [0, {POWER_MAX:g}]")
        if not (self.primary_freq > 0 and self.secondary_freq > 0):
            raise SessionFormatError("stimulus frequencies must be positive")
        ts.flags.writeable = False
        pw.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "powers", pw)
        object.__setattr__(self, "primary_freq", float(self.primary_freq))
        object.__setattr__(self, "secondary_freq", float(self.secondary_freq))

    @property
    def events(self) -> tuple[EegEvent, ...]:
        return tuple(
            EegEvent(int(t), self.primary_freq, self.secondary_freq, tuple(map(float, row)))
            for t, row in zip(self.timestamps, self.powers)
        )

    def with_powers(self, powers: np.ndarray) -> "Session":
        return replace(self, powers=powers)

    def __eq__(self, other):
        if not isinstance(other, Session):
            return NotImplemented
        return (
            np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.powers, other.powers)
            and self.primary_freq == other.primary_freq
            and self.secondary_freq == other.secondary_freq
            and self.session_id == other.session_id
            and self.participant_id == other.participant_id
            and self.session_class == other.session_class
        )

    __hash__ = None


@dataclass(frozen=True)
class Corpus:
    sessions: tuple[Session, ...]
    band_mask: tuple[Band, ...] = ALL_BANDS

    def __post_init__(self):
        object.__setattr__(self, "sessions", tuple(self.sessions))
        object.__setattr__(self, "band_mask", tuple(sorted(Band(b) for b in self.band_mask)))
        ids = [s.session_id for s in self.sessions]
        if len(set(ids)) != len(ids):
            raise ValueError("session ids must be unique")
        if not self.band_mask:
            raise EmptyMask("band mask is empty")

    def __len__(self):
        return len(self.sessions)

    def __iter__(self):
        return iter(self.sessions)

    def with_mask(self, mask: Sequence[Band]) -> "Corpus":
        return Corpus(self.sessions, tuple(mask))

    def signal_only(self) -> "Corpus":
        return Corpus(
            tuple(s for s in self.sessions if s.session_class is SessionClass.SIGNAL),
            self.band_mask,
        )


# --------------------------------------------------------------------------
# Session file format
# --------------------------------------------------------------------------


def _format_number(x: float) -> str:
    # repr round-trips exactly; integral values are written without ".0"
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def parse_session(
    text: str | io.TextIOBase,
    *,
    session_id: str = "",
    participant_id: int | None = None,
    session_class: SessionClass = SessionClass.SIGNAL,
) -> Session:
    """Parse a 40x11 session CSV.

    Raises
    ------
    WrongRowCount, WrongColumnCount, NonNumericField, PowerOutOfRange
    """
    if not isinstance(text, str):
        text = text.read()
    rows = [line for line in text.splitlines() if line.strip()]
    if len(rows) != N_EVENTS:
        raise WrongRowCount(f"expected {N_EVENTS} data rows, got {len(rows)}")
    timestamps = []
    freqs = []
    powers = []
    for lineno, line in enumerate(rows, start=1):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != N_COLUMNS:
            raise WrongColumnCount(f"line {lineno}: expected {N_COLUMNS} fields, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise NonNumericField(f"line {lineno}: non-numeric field in {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise NonNumericField(f"line {lineno}: non-finite field in {line!r}")
        if not values[0].is_integer():
            raise NonNumericField(f"line {lineno}: timestamp must be an integer")
        bands = values[3:]
        if min(bands) < 0 or max(bands) > POWER_MAX:
            raise PowerOutOfRange(f"line {lineno}: band power outside [0, {POWER_MAX:g}]")
        timestamps.append(int(values[0]))
        freqs.append((values[1], values[2]))
        powers.append(bands)
    if len(set(freqs)) != 1:
        raise SessionFormatError("stimulus frequencies differ between events")
    primary, secondary = freqs[0]
    return Session(
        timestamps=np.array(timestamps, dtype=np.int64),
        primary_freq=primary,
        secondary_freq=secondary,
        powers=np.array(powers),
        session_id=session_id,
        participant_id=participant_id,
        session_class=session_class,
    )


def write_session(s: Session) -> str:
    lines = []
    f1 = _format_number(s.primary_freq)
    f2 = _format_number(s.secondary_freq)
    for t, row in zip(s.timestamps, s.powers):
        lines.append(",".join([str(int(t)), f1, f2] + [_format_number(p) for p in row]))
    return "\n".join(lines) + "\n"


def session_filename(s: Session) -> str:
    prefix = "noise" if s.session_class is SessionClass.NOISE else str(s.participant_id)
    return f"{prefix}_{s.session_id}.csv"


MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = ("session_file", "participant_id", "class")


def write_corpus(corpus: Corpus, directory: str | os.PathLike) -> list[str]:
    """Write every session file plus ``manifest.csv``; return written names."""
    os.makedirs(directory, exist_ok=True)
    names = []
    manifest = io.StringIO()
    writer = csv.writer(manifest, lineterminator="\n")
    writer.writerow(MANIFEST_COLUMNS)
    for s in corpus.sessions:
        name = session_filename(s)
        with open(os.path.join(directory, name), "w", newline="") as fh:
            fh.write(write_session(s))
        pid = NOISE_PARTICIPANT if s.participant_id is None else s.participant_id
        writer.writerow([name, pid, s.session_class.value])
        names.append(name)
    with open(os.path.join(directory, MANIFEST_NAME), "w", newline="") as fh:
        fh.write(manifest.getvalue())
    return names


def read_corpus(directory: str | os.PathLike, band_mask: Sequence[Band] = ALL_BANDS) -> Corpus:
    """Load a corpus directory written by :func:`write_corpus`.

    The session id is the file name minus its ``<participant|noise>_``
    prefix and ``.csv`` suffix.
    """
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        raise EmptyCorpus(f"no {MANIFEST_NAME} in {directory}")
    sessions = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise SessionFormatError(f"manifest lacks columns {sorted(missing)}")
        for row in reader:
            name = row["session_file"]
            pid = int(row["participant_id"])
            cls = SessionClass(row["class"].strip().lower())
            stem = os.path.splitext(name)[0]
            session_id = stem.split("_", 1)[1] if "_" in stem else stem
            with open(os.path.join(directory, name)) as sf:
                sessions.append(
                    parse_session(
                        sf,
                        session_id=session_id,
                        participant_id=None if pid == NOISE_PARTICIPANT else pid,
                        session_class=cls,
                    )
                )
    if not sessions:
        raise EmptyCorpus(f"manifest in {directory} lists no sessions")
    return Corpus(tuple(sessions), band_mask)


# --------------------------------------------------------------------------
# Scaling and band selection
# --------------------------------------------------------------------------


class ScalerMode(enum.Enum):
    PER_BAND_MIN_MAX = "per_band"
    FIXED_RANGE = "fixed"


@dataclass(frozen=True, eq=False)
class Scaler:
    mins: np.ndarray
    maxs: np.ndarray
    mode: ScalerMode = ScalerMode.PER_BAND_MIN_MAX

    def __post_init__(self):
        mins = np.array(self.mins, dtype=np.float64).reshape(len(Band))
        maxs = np.array(self.maxs, dtype=np.float64).reshape(len(Band))
        if np.any(maxs < mins):
            raise ValueError("scaler max must be >= min for every band")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @classmethod
    def fixed(cls, lo: float = 0.0, hi: float = POWER_MAX) -> "Scaler":
        return cls(np.full(len(Band), lo), np.full(len(Band), hi), ScalerMode.FIXED_RANGE)

    def transform(self, powers: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = np.clip((np.asarray(powers, dtype=np.float64) - self.mins) / safe, 0.0, 1.0)
        return np.where(span > 0, out, 0.0)


def fit_scaler(c: Corpus, mode: ScalerMode | str = ScalerMode.PER_BAND_MIN_MAX) -> Scaler:
    mode = ScalerMode(mode)
    if len(c.sessions) == 0:
        raise EmptyCorpus("cannot fit a scaler on an empty corpus")
    if mode is ScalerMode.FIXED_RANGE:
        return Scaler.fixed()
    stacked = np.concatenate([s.powers for s in c.sessions], axis=0)
    return Scaler(stacked.min(axis=0), stacked.max(axis=0), mode)


def apply_scaler(sc: Scaler, c: Corpus) -> Corpus:
    return Corpus(tuple(s.with_powers(sc.transform(s.powers)) for s in c.sessions), c.band_mask)


def select_bands(s: Session, mask: Sequence[Band]) -> np.ndarray:
    """Return the ``(40, len(mask))`` matrix of the selected band columns."""
    cols = sorted({int(Band(b)) for b in mask})
    if not cols:
        raise EmptyMask("band mask is empty")
    return np.array(s.powers[:, cols])
