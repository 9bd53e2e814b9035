"""Flat ``key = value`` experiment configuration.

Example::

    # signal vs noise, reduced epochs
    task = signal_noise
    seed = 7
    bands = delta,theta,lalpha,halpha,lbeta,hbeta
    ae.hidden = 5
    ae.epochs = 5000
    gen.sessions = 6,8,12
    grid = knn,svm_linear
    profile.0.ssvep_gain = 2.5

Blank lines and ``#`` comments are ignored. Unknown keys are an error.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, replace
from typing import Mapping

from .autoencoder import AeHyperParams, Contractive, Denoising
from .errors import ConfigError, PipelineError
from .gridsearch import STANDARD_GRID, CvConfig, ParamGrid
from .ingest import Band, ScalerMode, format_band_mask, parse_band_mask
from .synthgen import (
    REFERENCE_NOISE_SESSIONS,
    REFERENCE_SESSION_COUNTS,
    GeneratorConfig,
    default_profiles,
)

# Encoding epochs used by the CLI unless overridden; the tuned preset trains
# ten times longer (ae.epochs = 50000).
CLI_EPOCHS = 5000


class Task(enum.Enum):
    SIGNAL_NOISE = "signal_noise"
    PARTICIPANT = "participant"

    @classmethod
    def parse(cls, text: str) -> "Task":
        t = text.strip().lower().replace("-", "_")
        for task in cls:
            if task.value == t:
                return task
        raise ConfigError(f"unknown task {text!r}; expected signal_noise or participant")


# Per-task encoding presets: bands, hidden units, batch size.
TASK_PRESETS = {
    Task.SIGNAL_NOISE: (
        (Band.DELTA, Band.THETA, Band.LOW_ALPHA, Band.HIGH_ALPHA, Band.LOW_BETA, Band.HIGH_BETA),
        5,
        10,
    ),
    Task.PARTICIPANT: ((Band.DELTA, Band.HIGH_ALPHA), 2, 5),
}
CORRELATION_PRESET = ((Band.DELTA, Band.HIGH_ALPHA), 2)


@dataclass(frozen=True)
class AeSettings:
    variant: str = "contractive"
    hidden: int | None = None
    learning_rate: float = 0.1
    batch_size: int | None = None
    epochs: int = CLI_EPOCHS
    level: float = 0.1
    tied: bool = True


@dataclass(frozen=True)
class GenSettings:
    participants: int = len(REFERENCE_SESSION_COUNTS)
    sessions: tuple[int, ...] = REFERENCE_SESSION_COUNTS
    noise_sessions: int | None = None
    jitter: float = 0.1
    drift: float = 0.05
    primary_freq: float = 10.0
    secondary_freq: float = 5.0
    profile_overrides: tuple[tuple[int, str, object], ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    task: Task = Task.SIGNAL_NOISE
    seed: int = 0
    out: str = "out"
    input: str | None = None
    bands: tuple[Band, ...] | None = None
    scaler: ScalerMode = ScalerMode.PER_BAND_MIN_MAX
    ae: AeSettings = field(default_factory=AeSettings)
    gen: GenSettings = field(default_factory=GenSettings)
    grid: tuple[str, ...] | None = None
    cv_k: int = 3
    cv_stratified: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.bands is not None and not self.bands:
            raise ConfigError("band mask must be non-empty")
        if self.input is not None and not os.path.isdir(self.input):
            raise ConfigError(f"input directory {self.input!r} does not exist")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

    # -- derived settings ---------------------------------------------------

    @property
    def band_mask(self) -> tuple[Band, ...]:
        return self.bands if self.bands is not None else TASK_PRESETS[self.task][0]

    def ae_hyper_params(self) -> AeHyperParams:
        _, hidden, batch = TASK_PRESETS[self.task]
        a = self.ae
        if a.variant == "contractive":
            variant = Contractive(a.level)
        elif a.variant == "denoising":
            variant = Denoising(a.level)
        else:
            raise ConfigError(f"unknown auto-encoder variant {a.variant!r}")
        try:
            return AeHyperParams(
                hidden_units=a.hidden if a.hidden is not None else hidden,
                learning_rate=a.learning_rate,
                batch_size=a.batch_size if a.batch_size is not None else batch,
                epochs=a.epochs,
                variant=variant,
                seed=self.seed,
                tied=a.tied,
            )
        except PipelineError as exc:
            raise ConfigError(str(exc)) from None

    def generator_config(self) -> GeneratorConfig:
        g = self.gen
        profiles = list(default_profiles(g.participants, self.seed, jitter=g.jitter, drift=g.drift))
        for pid, key, value in g.profile_overrides:
            if not 0 <= pid < len(profiles):
                raise ConfigError(f"profile.{pid}: no such participant")
            try:
                profiles[pid] = replace(profiles[pid], **{key: value})
            except ValueError as exc:
                raise ConfigError(f"profile.{pid}.{key}: {exc}") from None
        sessions = g.sessions
        if len(sessions) == 1:
            sessions = sessions[0]
        elif len(sessions) != g.participants:
            raise ConfigError(f"gen.sessions lists {len(sessions)} counts for {g.participants} participants")
        noise = g.noise_sessions
        if noise is None:
            noise = REFERENCE_NOISE_SESSIONS if self.task is Task.SIGNAL_NOISE else 0
        try:
            return GeneratorConfig(
                profiles=tuple(profiles),
                sessions_per_participant=sessions,
                noise_sessions=noise,
                primary_freq=g.primary_freq,
                secondary_freq=g.secondary_freq,
                master_seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def param_grid(self) -> ParamGrid:
        try:
            return ParamGrid.standard(self.grid)
        except PipelineError as exc:
            raise ConfigError(str(exc)) from None

    def cv_config(self) -> CvConfig:
        return CvConfig(k=self.cv_k, seed=self.seed, stratified=self.cv_stratified)

    def describe(self) -> str:
        hp = self.ae_hyper_params()
        return (
            f"task={self.task.value} seed={self.seed} bands={format_band_mask(self.band_mask)} "
            f"hidden={hp.hidden_units} batch={hp.batch_size} epochs={hp.epochs}"
        )


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _grid(text: str) -> tuple[str, ...] | None:
    kinds = tuple(k.strip() for k in text.split(",") if k.strip())
    if kinds in ((), ("all",)):
        return None
    unknown = [k for k in kinds if k not in STANDARD_GRID]
    if unknown:
        raise ValueError(f"unknown classifier kinds {unknown}")
    return kinds


_TOP = {
    "task": ("task", Task.parse),
    "seed": ("seed", int),
    "out": ("out", str),
    "input": ("input", str),
    "bands": ("bands", parse_band_mask),
    "scaler": ("scaler", ScalerMode),
    "grid": ("grid", _grid),
    "cv.k": ("cv_k", int),
    "cv.stratified": ("cv_stratified", _bool),
    "n_jobs": ("n_jobs", int),
}
_AE = {
    "variant": str,
    "hidden": int,
    "learning_rate": float,
    "batch_size": int,
    "epochs": int,
    "level": float,
    "tied": _bool,
}
_GEN = {
    "participants": int,
    "sessions": _ints,
    "noise_sessions": int,
    "jitter": float,
    "drift": float,
    "primary_freq": float,
    "secondary_freq": float,
}
_PROFILE = {
    "base_power": _floats,
    "ssvep_gain": float,
    "jitter": ("within_session_jitter", float),
    "drift": ("between_session_drift", float),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Raw ``key -> value`` pairs; later keys override earlier ones."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        pairs[key] = value
    return pairs


def build_config(pairs: Mapping[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply ``pairs`` on top of ``base`` (defaults when omitted)."""
    top: dict = {}
    ae: dict = {}
    gen: dict = {}
    overrides = list(base.gen.profile_overrides) if base else []
    for key, value in pairs.items():
        try:
            if key in _TOP:
                name, conv = _TOP[key]
                top[name] = conv(value)
            elif key.startswith("ae.") and key[3:] in _AE:
                ae[key[3:]] = _AE[key[3:]](value)
            elif key.startswith("gen.") and key[4:] in _GEN:
                gen[key[4:]] = _GEN[key[4:]](value)
            elif key.startswith("profile."):
                parts = key.split(".")
                if len(parts) != 3 or parts[2] not in _PROFILE:
                    raise ConfigError(f"unknown key {key!r}")
                spec = _PROFILE[parts[2]]
                name, conv = spec if isinstance(spec, tuple) else (parts[2], spec)
                overrides.append((int(parts[1]), name, conv(value)))
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ConfigError:
            raise
        except (ValueError, PipelineError) as exc:
            raise ConfigError(f"{key}: {exc}") from None
    base = base or ExperimentConfig()
    gen["profile_overrides"] = tuple(overrides)
    return replace(
        base,
        ae=replace(base.ae, **ae),
        gen=replace(base.gen, **gen),
        **top,
    )


def load_config(path: str | os.PathLike | None, overrides: Mapping[str, str] | None = None) -> ExperimentConfig:
    pairs: dict[str, str] = {}
    if path is not None:
        try:
            with open(path) as fh:
                pairs.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    if overrides:
        pairs.update(overrides)
    return build_config(pairs)


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical text form of the settings that affect outputs."""
    hp = cfg.ae_hyper_params()
    g = cfg.gen
    lines = [
        f"task = {cfg.task.value}",
        f"seed = {cfg.seed}",
        f"bands = {format_band_mask(cfg.band_mask)}",
        f"scaler = {cfg.scaler.value}",
        f"ae.variant = {cfg.ae.variant}",
        f"ae.hidden = {hp.hidden_units}",
        f"ae.learning_rate = {hp.learning_rate!r}",
        f"ae.batch_size = {hp.batch_size}",
        f"ae.epochs = {hp.epochs}",
        f"ae.level = {cfg.ae.level!r}",
        f"ae.tied = {str(hp.tied).lower()}",
        f"gen.participants = {g.participants}",
        f"gen.sessions = {','.join(str(s) for s in g.sessions)}",
        f"gen.jitter = {g.jitter!r}",
        f"gen.drift = {g.drift!r}",
        f"grid = {','.join(cfg.grid) if cfg.grid else 'all'}",
        f"cv.k = {cfg.cv_k}",
        f"cv.stratified = {str(cfg.cv_stratified).lower()}",
    ]
    if g.noise_sessions is not None:
        lines.append(f"gen.noise_sessions = {g.noise_sessions}")
    return "\n".join(lines) + "\n"

