"""Command-line entry point: gen, encode, correlate, search and e2e.

Exit codes: 0 success, 1 runtime or data error, 2 degenerate input,
64 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from dataclasses import replace

import numpy as np

from .classifiers import Dataset
from .config import CORRELATION_PRESET, ExperimentConfig, Task, dump_config, load_config
from .correlation import RepresentationMatrix, build_representation, correlation_matrix, render_heatmap
from .errors import ClassTooSmall, ConfigError, ConstantColumnWarning, PipelineError, TooFewSessions, TooShort
from .gridsearch import SearchResult, grid_search
from .ingest import Corpus, SessionClass, apply_scaler, fit_scaler, format_band_mask, read_corpus, write_corpus
from .synthgen import generate_corpus

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2
EXIT_USAGE = 64

CORPUS_DIR = "corpus"
REPRESENTATION_FILE = "representation.csv"
CORRELATION_CSV = "correlation.csv"
CORRELATION_PPM = "correlation.ppm"
CORRELATION_PNG = "correlation.png"
REPORT_FILE = "report.csv"
SEARCH_PNG = "search.png"
CONFIG_FILE = "config.txt"

_DEGENERATE = (TooFewSessions, TooShort, ClassTooSmall)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise PipelineError(f"cannot read {path}: {exc.strerror}") from None


def _echo(*parts) -> None:
    print(*parts, flush=True)


# --------------------------------------------------------------------------
# Pipeline stages
# --------------------------------------------------------------------------


def task_corpus(corpus: Corpus, task: Task) -> Corpus:
    """Sessions relevant to ``task``: noise is dropped for participant identification."""
    return corpus.signal_only() if task is Task.PARTICIPANT else corpus


def task_labels(corpus: Corpus, task: Task, session_ids) -> tuple[list[int], tuple[str, ...]]:
    """Class labels for ``session_ids`` and the matching label names."""
    by_id = {s.session_id: s for s in corpus.sessions}
    missing = [sid for sid in session_ids if sid not in by_id]
    if missing:
        raise PipelineError(f"representation columns not in corpus manifest: {missing[:5]}")
    sessions = [by_id[sid] for sid in session_ids]
    if task is Task.SIGNAL_NOISE:
        return [int(s.session_class is SessionClass.SIGNAL) for s in sessions], ("noise", "signal")
    pids = sorted({s.participant_id for s in sessions})
    return [s.participant_id for s in sessions], tuple(f"participant {p}" for p in pids)


def encode_corpus(corpus: Corpus, cfg: ExperimentConfig, bands=None, hp=None) -> RepresentationMatrix:
    corpus = task_corpus(corpus, cfg.task)
    if not corpus.sessions:
        raise PipelineError(f"no sessions usable for task {cfg.task.value}")
    scaled = apply_scaler(fit_scaler(corpus, cfg.scaler), corpus)
    scaled = scaled.with_mask(bands if bands is not None else cfg.band_mask)
    return build_representation(scaled, hp or cfg.ae_hyper_params(), n_jobs=cfg.n_jobs)


def correlate_representation(R: RepresentationMatrix, csv_path, ppm_path, png_path) -> bool:
    """Render the heatmap; returns False when some encodings were constant."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantColumnWarning)
        M = correlation_matrix(R)
    render_heatmap(M, ppm_path, csv_path, png_path)
    _echo(f"correlation: {len(M.session_ids)} sessions, mean off-diagonal r = {M.mean_off_diagonal():.4f}")
    if M.constant_columns:
        _echo(f"warning: constant encodings for {', '.join(M.constant_columns)}")
        return False
    return True


def search_representation(R: RepresentationMatrix, corpus: Corpus, cfg: ExperimentConfig) -> SearchResult:
    ids = R.session_ids
    if cfg.task is Task.PARTICIPANT:
        signal = {s.session_id for s in corpus.signal_only().sessions}
        keep = [i for i, sid in enumerate(ids) if sid in signal]
        R = RepresentationMatrix(R.values[:, keep], tuple(ids[i] for i in keep))
    y, names = task_labels(corpus, cfg.task, R.session_ids)
    d = Dataset(R.values.T, y, names)
    return grid_search(d, cfg.param_grid(), cfg.cv_config(), n_jobs=cfg.n_jobs)


def best_row_line(result: SearchResult, cfg: ExperimentConfig) -> str:
    """One Table-style summary line for the best candidate."""
    best = result.best
    hp = cfg.ae_hyper_params()
    head = f"bands={format_band_mask(cfg.band_mask)} batch={hp.batch_size} hidden={hp.hidden_units}"
    if best is None:
        return f"{head} no candidate succeeded"
    return f"{head} classifier={best.spec.text} score={best.mean_score:.3f} (std: {best.std_score:.3f})"


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def _corpus_dir(cfg: ExperimentConfig, args) -> str:
    return getattr(args, "input", None) or cfg.input or os.path.join(cfg.out, CORPUS_DIR)


def cmd_gen(cfg: ExperimentConfig, args) -> int:
    corpus = generate_corpus(cfg.generator_config())
    directory = os.path.join(cfg.out, CORPUS_DIR)
    files = write_corpus(corpus, directory)
    n_signal = len(corpus.signal_only().sessions)
    _echo(f"gen: {len(files)} sessions ({n_signal} signal, {len(files) - n_signal} noise) -> {directory}")
    return EXIT_OK


def cmd_encode(cfg: ExperimentConfig, args) -> int:
    corpus = read_corpus(_corpus_dir(cfg, args))
    R = encode_corpus(corpus, cfg)
    path = args.out_csv or os.path.join(cfg.out, REPRESENTATION_FILE)
    _write(path, R.to_csv())
    _echo(f"encode: {cfg.describe()} -> {R.n_features}x{R.n_sessions} matrix {path}")
    return EXIT_OK


def cmd_correlate(cfg: ExperimentConfig, args) -> int:
    if args.representation:
        R = RepresentationMatrix.from_csv(_read(args.representation))
    else:
        corpus = read_corpus(_corpus_dir(cfg, args))
        # the correlation preset applies unless bands / hidden units were set
        bands, hidden = CORRELATION_PRESET
        if cfg.bands is not None:
            bands = cfg.bands
        hp = cfg.ae_hyper_params()
        if cfg.ae.hidden is None:
            hp = replace(hp, hidden_units=hidden)
        R = encode_corpus(corpus, cfg, bands=bands, hp=hp)
    ok = correlate_representation(
        R,
        args.out_csv or os.path.join(cfg.out, CORRELATION_CSV),
        args.out_ppm or os.path.join(cfg.out, CORRELATION_PPM),
        args.out_png or os.path.join(cfg.out, CORRELATION_PNG),
    )
    return EXIT_OK if ok else EXIT_DEGENERATE


def cmd_search(cfg: ExperimentConfig, args) -> int:
    rep_path = args.representation or os.path.join(cfg.out, REPRESENTATION_FILE)
    R = RepresentationMatrix.from_csv(_read(rep_path))
    corpus = read_corpus(_corpus_dir(cfg, args))
    result = search_representation(R, corpus, cfg)
    report = args.report or os.path.join(cfg.out, REPORT_FILE)
    _write(report, result.to_csv())
    from .plotting import plot_search_summary

    plot_search_summary(result, args.out_png or os.path.join(cfg.out, SEARCH_PNG))
    _echo(f"search: {len(result)} candidates, {len(result.failed)} failed -> {report}")
    _echo(best_row_line(result, cfg))
    return EXIT_OK


def cmd_e2e(cfg: ExperimentConfig, args) -> int:
    """gen -> encode -> correlate -> search under one seed.

    The heatmap is drawn from the task representation rather than a
    separately trained correlation preset.
    """
    out = cfg.out
    _write(os.path.join(out, CONFIG_FILE), dump_config(cfg))
    if cfg.input is None:
        cmd_gen(cfg, args)
    corpus = read_corpus(_corpus_dir(cfg, args))
    R = encode_corpus(corpus, cfg)
    _write(os.path.join(out, REPRESENTATION_FILE), R.to_csv())
    _echo(f"encode: {cfg.describe()} -> {R.n_features}x{R.n_sessions} matrix")
    ok = correlate_representation(
        R,
        os.path.join(out, CORRELATION_CSV),
        os.path.join(out, CORRELATION_PPM),
        os.path.join(out, CORRELATION_PNG),
    )
    result = search_representation(R, corpus, cfg)
    _write(os.path.join(out, REPORT_FILE), result.to_csv())
    from .plotting import plot_search_summary

    plot_search_summary(result, os.path.join(out, SEARCH_PNG))
    _echo(f"search: {len(result)} candidates, {len(result.failed)} failed")
    _echo(best_row_line(result, cfg))
    return EXIT_OK if ok else EXIT_DEGENERATE


COMMANDS = {
    "gen": cmd_gen,
    "encode": cmd_encode,
    "correlate": cmd_correlate,
    "search": cmd_search,
    "e2e": cmd_e2e,
}


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def _global_options(suppress: bool) -> argparse.ArgumentParser:
    # shared so the options work before or after the subcommand name
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", default=default, help="flat key = value config file")
    p.add_argument("--seed", type=int, default=default, help="master seed (overrides config)")
    p.add_argument("--out", metavar="DIR", default=default, help="output directory (default: out)")
    p.add_argument("--task", choices=[t.value for t in Task], default=default)
    p.add_argument("--n-jobs", type=int, default=default, dest="n_jobs", help="worker processes")
    return p


def _encoding_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bands", help="comma-separated bands, e.g. delta,halpha, or 'all'")
    p.add_argument("--hidden", type=int, help="hidden units")
    p.add_argument("--batch", type=int, help="mini-batch size")
    p.add_argument("--epochs", type=int, help="training epochs")
    p.add_argument("--variant", choices=["contractive", "denoising"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eegpipe", description=__doc__.splitlines()[0], parents=[_global_options(False)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    shared = _global_options(True)

    p = sub.add_parser("gen", parents=[shared], help="write a synthetic corpus")
    p.add_argument("--participants", type=int)
    p.add_argument("--sessions", help="sessions per participant: one count or a comma list")
    p.add_argument("--noise-sessions", type=int, dest="noise_sessions")
    p.add_argument("--jitter", type=float)
    p.add_argument("--drift", type=float)

    p = sub.add_parser("encode", parents=[shared], help="train per-session auto-encoders")
    p.add_argument("--input", metavar="DIR", help="corpus directory (default: OUT/corpus)")
    _encoding_options(p)
    p.add_argument("--out-csv", dest="out_csv", metavar="PATH")

    p = sub.add_parser("correlate", parents=[shared], help="session correlation heatmap")
    p.add_argument("--input", metavar="DIR", help="corpus to encode (default: OUT/corpus)")
    p.add_argument("--representation", metavar="PATH", help="use an existing representation file")
    _encoding_options(p)
    p.add_argument("--out-csv", dest="out_csv", metavar="PATH")
    p.add_argument("--out-ppm", dest="out_ppm", metavar="PATH")
    p.add_argument("--out-png", dest="out_png", metavar="PATH")

    p = sub.add_parser("search", parents=[shared], help="grid search with k-fold CV")
    p.add_argument("--input", metavar="DIR", help="corpus directory providing labels")
    p.add_argument("--representation", metavar="PATH")
    p.add_argument("--grid", help="comma-separated classifier kinds, or 'all'")
    p.add_argument("--folds", type=int)
    p.add_argument("--report", metavar="PATH")
    p.add_argument("--out-png", dest="out_png", metavar="PATH")

    p = sub.add_parser("e2e", parents=[shared], help="gen, encode, correlate and search")
    p.add_argument("--input", metavar="DIR", help="existing corpus instead of generating one")
    _encoding_options(p)
    p.add_argument("--participants", type=int)
    p.add_argument("--sessions")
    p.add_argument("--noise-sessions", type=int, dest="noise_sessions")
    p.add_argument("--jitter", type=float)
    p.add_argument("--drift", type=float)
    p.add_argument("--grid")
    p.add_argument("--folds", type=int)
    return parser


# flag dest -> config key
_FLAG_KEYS = {
    "seed": "seed",
    "out": "out",
    "task": "task",
    "n_jobs": "n_jobs",
    "input": "input",
    "bands": "bands",
    "hidden": "ae.hidden",
    "batch": "ae.batch_size",
    "epochs": "ae.epochs",
    "variant": "ae.variant",
    "participants": "gen.participants",
    "sessions": "gen.sessions",
    "noise_sessions": "gen.noise_sessions",
    "jitter": "gen.jitter",
    "drift": "gen.drift",
    "grid": "grid",
    "folds": "cv.k",
}


def config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = str(value)
    if args.command == "correlate" and args.representation and "input" in overrides:
        del overrides["input"]
    return load_config(getattr(args, "config", None), overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"eegpipe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"eegpipe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DEGENERATE as exc:
        print(f"eegpipe: degenerate input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (PipelineError, OSError, ValueError) as exc:
        print(f"eegpipe: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
