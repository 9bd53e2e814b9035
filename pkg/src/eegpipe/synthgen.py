"""Seeded synthetic signal/noise sessions with planted participant signatures.

Signal power for band ``b`` at event ``i`` is::

    base[b] * gain(b) * exp(drift * u[b]) * exp(jitter * v[i, b])

where ``gain(b)`` is the participant's SSVEP gain for bands whose range
contains either stimulus frequency (1 otherwise), ``u`` is drawn once per
session and ``v`` once per event, both standard normal. Noise sessions are
i.i.d. uniform over the full device range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ingest import ALL_BANDS, N_EVENTS, POWER_MAX, Band, Corpus, Session, SessionClass

_SIGNAL_STREAM = 1
_NOISE_STREAM = 2
_PROFILE_STREAM = 3

TIMESTAMP_STRIDE = 10**6


@dataclass(frozen=True)
class ParticipantProfile:
    participant_id: int
    base_power: tuple[float, ...]
    ssvep_gain: float = 2.0
    within_session_jitter: float = 0.1
    between_session_drift: float = 0.05

    def __post_init__(self):
        base = tuple(float(x) for x in self.base_power)
        object.__setattr__(self, "base_power", base)
        if len(base) != len(Band):
            raise ValueError(f"base_power needs {len(Band)} values, got {len(base)}")
        if not all(0.0 < x < POWER_MAX for x in base):
            raise ValueError("base_power components must lie in (0, 32767)")
        if self.ssvep_gain < 1.0:
            raise ValueError("ssvep_gain must be >= 1")
        for name in ("within_session_jitter", "between_session_drift"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.participant_id < 0:
            raise ValueError("participant_id must be non-negative")


@dataclass(frozen=True)
class GeneratorConfig:
    profiles: tuple[ParticipantProfile, ...]
    sessions_per_participant: int | tuple[int, ...] = 8
    noise_sessions: int = 0
    primary_freq: float = 10.0
    secondary_freq: float = 5.0
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if not self.profiles:
            raise ValueError("at least one participant profile is required")
        ids = [p.participant_id for p in self.profiles]
        if len(set(ids)) != len(ids):
            raise ValueError("participant ids must be unique")
        counts = self.sessions_per_participant
        if not isinstance(counts, int):
            counts = tuple(int(c) for c in counts)
            object.__setattr__(self, "sessions_per_participant", counts)
            if len(counts) != len(self.profiles):
                raise ValueError("one session count per profile is required")
        if min(self.session_counts()) < 0 or self.noise_sessions < 0:
            raise ValueError("session counts must be >= 0")
        if not (self.primary_freq > 0 and self.secondary_freq > 0):
            raise ValueError("stimulus frequencies must be positive")

    def session_counts(self) -> tuple[int, ...]:
        c = self.sessions_per_participant
        return (c,) * len(self.profiles) if isinstance(c, int) else c


def stimulated_bands(primary_freq: float, secondary_freq: float) -> tuple[Band, ...]:
    return tuple(b for b in Band if b.contains(primary_freq) or b.contains(secondary_freq))


def generate_signal_session(p: ParticipantProfile, cfg: GeneratorConfig, session_index: int) -> Session:
    rng = np.random.default_rng([cfg.master_seed, _SIGNAL_STREAM, p.participant_id, session_index])
    gain = np.array(
        [p.ssvep_gain if (b.contains(cfg.primary_freq) or b.contains(cfg.secondary_freq)) else 1.0 for b in Band]
    )
    drift = np.exp(p.between_session_drift * rng.standard_normal(len(Band)))
    jitter = np.exp(p.within_session_jitter * rng.standard_normal((N_EVENTS, len(Band))))
    powers = np.asarray(p.base_power) * gain * drift * jitter
    return Session(
        timestamps=session_index * TIMESTAMP_STRIDE + np.arange(N_EVENTS),
        primary_freq=cfg.primary_freq,
        secondary_freq=cfg.secondary_freq,
        powers=np.clip(powers, 0.0, POWER_MAX),
        session_id=f"p{p.participant_id}s{session_index:02d}",
        participant_id=p.participant_id,
        session_class=SessionClass.SIGNAL,
    )


def generate_noise_session(cfg: GeneratorConfig, noise_index: int) -> Session:
    rng = np.random.default_rng([cfg.master_seed, _NOISE_STREAM, noise_index])
    return Session(
        timestamps=noise_index * TIMESTAMP_STRIDE + np.arange(N_EVENTS),
        primary_freq=cfg.primary_freq,
        secondary_freq=cfg.secondary_freq,
        powers=rng.uniform(0.0, POWER_MAX, size=(N_EVENTS, len(Band))),
        session_id=f"n{noise_index:02d}",
        participant_id=None,
        session_class=SessionClass.NOISE,
    )


def generate_corpus(cfg: GeneratorConfig, band_mask: Sequence[Band] = ALL_BANDS) -> Corpus:
    """All signal sessions (participant-major) followed by all noise sessions."""
    sessions = [
        generate_signal_session(p, cfg, i)
        for p, count in zip(cfg.profiles, cfg.session_counts())
        for i in range(count)
    ]
    sessions += [generate_noise_session(cfg, j) for j in range(cfg.noise_sessions)]
    return Corpus(tuple(sessions), band_mask)


def default_profiles(
    n_participants: int,
    seed: int = 0,
    *,
    jitter: float = 0.1,
    drift: float = 0.05,
    power_range: tuple[float, float] = (200.0, 4000.0),
    gain_range: tuple[float, float] = (1.5, 3.0),
) -> tuple[ParticipantProfile, ...]:
    """Distinct random profiles: log-uniform base powers, uniform SSVEP gains."""
    rng = np.random.default_rng([seed, _PROFILE_STREAM])
    lo, hi = np.log(power_range[0]), np.log(power_range[1])
    profiles = []
    for pid in range(n_participants):
        base = np.exp(rng.uniform(lo, hi, size=len(Band)))
        gain = rng.uniform(*gain_range)
        profiles.append(ParticipantProfile(pid, tuple(base), float(gain), jitter, drift))
    return tuple(profiles)


# Reference experiment shape: 3 participants with 6 to 18 sessions each,
# 26 signal and 26 noise sessions for the signal/noise task.
REFERENCE_SESSION_COUNTS = (6, 8, 12)
REFERENCE_NOISE_SESSIONS = 26


def signal_noise_config(seed: int = 0, **kw) -> GeneratorConfig:
    return GeneratorConfig(
        profiles=default_profiles(len(REFERENCE_SESSION_COUNTS), seed, **kw),
        sessions_per_participant=REFERENCE_SESSION_COUNTS,
        noise_sessions=REFERENCE_NOISE_SESSIONS,
        master_seed=seed,
    )


def participant_config(seed: int = 0, **kw) -> GeneratorConfig:
    return GeneratorConfig(
        profiles=default_profiles(len(REFERENCE_SESSION_COUNTS), seed, **kw),
        sessions_per_participant=REFERENCE_SESSION_COUNTS,
        noise_sessions=0,
        master_seed=seed,
    )
