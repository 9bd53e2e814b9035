"""Session-quality check: correlate per-session encodings and render a heatmap."""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autoencoder import AeHyperParams, session_representation, train
from .errors import ConstantColumnWarning, LengthMismatch, TooFewSessions, TooShort
from .ingest import Corpus, select_bands

CELL_PIXELS = 32


@dataclass(frozen=True, eq=False)
class RepresentationMatrix:
    """Features x sessions matrix of flattened encoder weights."""

    values: np.ndarray
    session_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, ndmin=2)
        ids = tuple(self.session_ids)
        if values.shape[1] != len(ids):
            raise LengthMismatch(f"{values.shape[1]} columns but {len(ids)} session ids")
        if not np.all(np.isfinite(values)):
            raise ValueError("representation contains non-finite entries")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "session_ids", ids)

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_sessions(self) -> int:
        return self.values.shape[1]

    def to_csv(self) -> str:
        """Header row of session ids, then one row per feature."""
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.session_ids)
        for row in self.values:
            w.writerow([repr(float(v)) for v in row])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RepresentationMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        rows = [r for r in rows if r]
        if not rows:
            raise ValueError("empty representation file")
        ids = tuple(rows[0])
        values = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(len(rows) - 1, len(ids))
        return cls(values, ids)


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    values: np.ndarray
    session_ids: tuple[str, ...]
    constant_columns: tuple[str, ...] = ()

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow([""] + list(self.session_ids))
        for sid, row in zip(self.session_ids, self.values):
            w.writerow([sid] + [repr(float(v)) for v in row])
        return out.getvalue()

    def mean_off_diagonal(self) -> float:
        s = self.values.shape[0]
        if s < 2:
            return float("nan")
        mask = ~np.eye(s, dtype=bool)
        return float(self.values[mask].mean())


def _encode_session(args):
    data, hp = args
    params, _ = train(data, hp)
    return session_representation(params)


def build_representation(c: Corpus, hp: AeHyperParams, *, n_jobs: int = 1) -> RepresentationMatrix:
    """Train one auto-encoder per session and stack the encodings as columns.

    Every session is trained from the same seed (``hp.seed``) so that
    identical sessions map to identical encodings and columns stay
    comparable.
    """
    jobs = [(select_bands(s, c.band_mask), hp) for s in c.sessions]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            columns = list(ex.map(_encode_session, jobs))
    else:
        columns = [_encode_session(j) for j in jobs]
    values = np.column_stack(columns) if columns else np.zeros((hp.hidden_units * len(c.band_mask), 0))
    return RepresentationMatrix(values, tuple(s.session_id for s in c.sessions))


def _pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.mean(xc * xc))
    syy = float(np.mean(yc * yc))
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    r = float(np.mean(xc * yc)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r)), False


def pearson(x, y) -> float:
    """Pearson r with population moments; 0 (plus a warning) for constant input."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise TooShort("pearson needs at least two observations")
    r, constant = _pearson(x, y)
    if constant:
        warnings.warn("constant input; correlation set to 0", ConstantColumnWarning, stacklevel=2)
    return r


def correlation_matrix(R: RepresentationMatrix) -> CorrelationMatrix:
    S = R.n_sessions
    if S < 2:
        raise TooFewSessions(f"need at least 2 sessions, got {S}")
    if R.n_features < 2:
        raise TooShort("need at least 2 features per session")
    cols = R.values.T
    out = np.empty((S, S))
    constant = set()
    for i in range(S):
        for j in range(i, S):
            r, flag = _pearson(cols[i], cols[j])
            if flag:
                for k in (i, j):
                    if np.all(cols[k] == cols[k][0]):
                        constant.add(k)
            out[i, j] = out[j, i] = r
    # exact 1 on the diagonal for non-constant columns
    for i in range(S):
        out[i, i] = 0.0 if i in constant else 1.0
    flagged = tuple(R.session_ids[k] for k in sorted(constant))
    if flagged:
        warnings.warn(f"constant encodings for sessions {flagged}", ConstantColumnWarning, stacklevel=2)
    return CorrelationMatrix(out, R.session_ids, flagged)


def _round_half_away(v: float) -> int:
    return int(math.floor(abs(v) + 0.5)) * (1 if v >= 0 else -1)


def correlation_color(r: float) -> tuple[int, int, int]:
    """Blue (-1) through white (0) to red (+1), linear in each half."""
    r = min(1.0, max(-1.0, float(r)))
    if r >= 0:
        fade = _round_half_away(255.0 * (1.0 - r))
        return 255, fade, fade
    fade = _round_half_away(255.0 * (1.0 + r))
    return fade, fade, 255


def ppm_image(M: CorrelationMatrix, cell: int = CELL_PIXELS) -> str:
    """Plain (P3) PPM, one ``cell`` x ``cell`` block per matrix entry."""
    S = M.values.shape[0]
    side = S * cell
    lines = ["P3", f"{side} {side}", "255"]
    for i in range(S):
        row_pixels = []
        for j in range(S):
            rgb = "{} {} {}".format(*correlation_color(M.values[i, j]))
            row_pixels.extend([rgb] * cell)
        line = " ".join(row_pixels)
        lines.extend([line] * cell)
    return "\n".join(lines) + "\n"


def render_heatmap(M: CorrelationMatrix, ppm_path, csv_path=None, png_path=None) -> None:
    """Write the PPM heatmap, the labelled CSV and optionally a PNG figure."""
    if csv_path is not None:
        _write_text(csv_path, M.to_csv())
    _write_text(ppm_path, ppm_image(M))
    if png_path is not None:
        from .plotting import plot_correlation_heatmap

        plot_correlation_heatmap(M, png_path)


def _write_text(path, text: str) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def group_mean_correlations(M: CorrelationMatrix, groups: Sequence) -> tuple[float, float]:
    """Mean off-diagonal r within groups and across groups."""
    g = np.asarray(groups)
    same = g[:, None] == g[None, :]
    off = ~np.eye(len(g), dtype=bool)
    within = M.values[same & off]
    across = M.values[~same]
    return (
        float(within.mean()) if within.size else float("nan"),
        float(across.mean()) if across.size else float("nan"),
    )
