"""Exhaustive hyper-parameter grid search scored by stratified k-fold CV."""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .classifiers import ClassifierSpec, Dataset, accuracy, fit, predict
from .classifiers.base import SCHEMAS
from .errors import ClassTooSmall, InvalidGrid, InvalidHyperParam, PipelineError

# Standard search space, one entry per classifier in reporting order.
STANDARD_GRID: dict[str, dict[str, list]] = {
    "random_forest": {
        "max_depth": [3, 5, 8, None],
        "max_features": [1, 3, 4],
        "min_samples_split": [2, 3, 4],
        "min_samples_leaf": [1, 3, 10],
        "bootstrap": [True, False],
        "criterion": ["gini", "entropy"],
        "n_estimators": [10, 20, 50, 100, 200],
    },
    "ada_boost": {
        "learning_rate": [0.01, 0.1, 1],
        "n_estimators": [10, 20, 50, 100],
    },
    "decision_tree": {
        "max_depth": [3, 5, 8, None],
        "min_samples_split": [2, 3, 4],
        "min_samples_leaf": [1, 3, 10, 20, 30],
    },
    "gaussian_process": {
        "warm_start": [True, False],
    },
    "mlp": {
        "alpha": [0.0001, 0.001, 0.01],
        "learning_rate_init": [0.001, 0.01, 0.1, 0.5],
        "momentum": [0.9, 0.99, 0.999],
        "solver": ["lbfgs", "sgd", "adam"],
        "activation": ["logistic", "tanh", "relu"],
        "hidden_layer_sizes": [4, 8, 10],
    },
    "knn": {
        "n_neighbors": [2, 3, 5],
        "algorithm": ["ball_tree", "kd_tree", "brute"],
    },
    "gaussian_nb": {
        "priors": [None],
    },
    "qda": {
        "priors": [None],
        "reg_param": [0.0, 0.01, 0.1, 0.9],
    },
    "svm_rbf": {
        "C": [0.1, 0.5, 1.0],
        "gamma": [0.1, 0.5, 1.0, 2.0, 3.0, "auto"],
    },
    "svm_linear": {
        "C": [0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 1.0],
    },
}


@dataclass(frozen=True)
class ParamGrid:
    """Ordered ``kind -> {param: candidate values}`` mapping."""

    entries: tuple[tuple[str, tuple[tuple[str, tuple], ...]], ...]

    def __post_init__(self):
        entries = self.entries.items() if isinstance(self.entries, Mapping) else self.entries
        normalized = []
        for kind, params in entries:
            if kind not in SCHEMAS:
                raise InvalidGrid(f"unknown classifier kind {kind!r}")
            items = params.items() if isinstance(params, Mapping) else params
            plist = []
            for name, values in items:
                values = tuple(values)
                if not values:
                    raise InvalidGrid(f"{kind}.{name}: empty value list")
                for v in values:
                    try:
                        ClassifierSpec(kind, ((name, v),))
                    except InvalidHyperParam as exc:
                        raise InvalidGrid(f"{kind}.{name}: {exc}") from None
                plist.append((name, values))
            normalized.append((kind, tuple(plist)))
        object.__setattr__(self, "entries", tuple(normalized))

    @classmethod
    def standard(cls, kinds: Iterable[str] | None = None) -> "ParamGrid":
        """The standard grid, optionally restricted to ``kinds`` (kept in table order)."""
        if kinds is None:
            return cls(STANDARD_GRID)
        kinds = list(kinds)
        unknown = set(kinds) - set(STANDARD_GRID)
        if unknown:
            raise InvalidGrid(f"unknown classifier kinds {sorted(unknown)}")
        return cls({k: v for k, v in STANDARD_GRID.items() if k in kinds})

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.entries)


def expand_grid(g: ParamGrid) -> list[ClassifierSpec]:
    """Cartesian product per kind; the last parameter varies fastest."""
    specs = []
    for kind, params in g.entries:
        names = [n for n, _ in params]
        for combo in itertools.product(*(vals for _, vals in params)):
            specs.append(ClassifierSpec(kind, tuple(zip(names, combo))))
    return specs


def grid_size(g: ParamGrid) -> dict[str, int]:
    return {kind: math.prod(len(v) for _, v in params) for kind, params in g.entries}


@dataclass(frozen=True)
class CvConfig:
    k: int = 3
    seed: int = 0
    stratified: bool = True


def stratified_folds(y: Sequence[int], k: int, seed: int) -> np.ndarray:
    """Fold id per sample.

    Within each class (ascending label order) indices are shuffled, then
    dealt round-robin; the dealing position carries over from one class to
    the next so fold sizes stay within one of each other.
    """
    y = np.asarray(y)
    if not 2 <= k <= y.shape[0]:
        raise ClassTooSmall(f"need 2 <= k <= {y.shape[0]} samples, got k={k}")
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts < k):
        small = classes[counts < k].tolist()
        raise ClassTooSmall(f"classes {small} have fewer than k={k} members")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.shape[0], dtype=np.int64)
    dealt = 0
    for c in classes:
        members = rng.permutation(np.flatnonzero(y == c))
        folds[members] = (dealt + np.arange(members.shape[0])) % k
        dealt += members.shape[0]
    return folds


def plain_folds(n: int, k: int, seed: int) -> np.ndarray:
    if not 2 <= k <= n:
        raise ClassTooSmall(f"need 2 <= k <= {n} samples, got k={k}")
    folds = np.empty(n, dtype=np.int64)
    folds[np.random.default_rng(seed).permutation(n)] = np.arange(n) % k
    return folds


def make_folds(y, cv: CvConfig) -> np.ndarray:
    if cv.stratified:
        return stratified_folds(y, cv.k, cv.seed)
    return plain_folds(len(y), cv.k, cv.seed)


def fold_seed(master_seed: int, candidate_index: int, fold: int) -> int:
    """Hash of (master seed, candidate, fold); independent of evaluation order."""
    return int(np.random.SeedSequence([master_seed, candidate_index, fold]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class CvScore:
    mean: float
    std: float
    fold_scores: tuple[float, ...]
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def __iter__(self):
        return iter((self.mean, self.std, self.fold_scores))


def _summarize(scores: Sequence[float]) -> tuple[float, float]:
    k = len(scores)
    mean = sum(scores) / k
    std = math.sqrt(sum((s - mean) ** 2 for s in scores) / k)
    return mean, std


def _failed(exc: Exception) -> CvScore:
    return CvScore(float("nan"), float("nan"), (), f"{type(exc).__name__}: {exc}")


def cross_val_score(
    spec: ClassifierSpec,
    d: Dataset,
    cv: CvConfig,
    *,
    candidate_index: int = 0,
    folds: np.ndarray | None = None,
) -> CvScore:
    """Accuracy per held-out fold, with population mean and std.

    A fit/predict error marks the whole candidate as failed instead of
    raising.
    """
    if folds is None:
        folds = make_folds(d.y, cv)
    scores = []
    seen = np.zeros(d.n_samples, dtype=np.int64)
    for f in range(cv.k):
        test = np.flatnonzero(folds == f)
        train = np.flatnonzero(folds != f)
        assert np.intersect1d(train, test).size == 0
        seen[test] += 1
        try:
            model = fit(spec, d.subset(train), fold_seed(cv.seed, candidate_index, f))
            scores.append(accuracy(d.y[test], predict(model, d.X[test])))
        except PipelineError as exc:
            return _failed(exc)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return _failed(exc)
    assert np.all(seen == 1), "every sample must be tested exactly once"
    mean, std = _summarize(scores)
    return CvScore(mean, std, tuple(scores))


@dataclass(frozen=True)
class CandidateResult:
    index: int
    spec: ClassifierSpec
    score: CvScore
    rank: int | None = None

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def mean_score(self) -> float:
        return self.score.mean

    @property
    def std_score(self) -> float:
        return self.score.std

    @property
    def fold_scores(self) -> tuple[float, ...]:
        return self.score.fold_scores

    @property
    def failed(self) -> bool:
        return self.score.failed

    @property
    def status(self) -> str:
        return f"Failed({self.score.error})" if self.failed else "ok"


REPORT_COLUMNS = ("rank", "kind", "spec", "mean_score", "std_score", "fold_scores", "status")


@dataclass(frozen=True)
class SearchResult:
    """Candidates ranked by mean score (desc) then spec text; failures last."""

    rows: tuple[CandidateResult, ...]

    @property
    def ranked(self) -> tuple[CandidateResult, ...]:
        return tuple(r for r in self.rows if not r.failed)

    @property
    def failed(self) -> tuple[CandidateResult, ...]:
        return tuple(r for r in self.rows if r.failed)

    @property
    def best(self) -> CandidateResult | None:
        ranked = self.ranked
        return ranked[0] if ranked else None

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            if r.failed:
                w.writerow(["", r.kind, r.spec.text, "", "", "", r.status])
            else:
                w.writerow(
                    [
                        r.rank,
                        r.kind,
                        r.spec.text,
                        repr(r.mean_score),
                        repr(r.std_score),
                        ";".join(repr(s) for s in r.fold_scores),
                        r.status,
                    ]
                )
        return out.getvalue()


def rank_results(results: Iterable[CandidateResult]) -> SearchResult:
    results = list(results)
    ok = sorted((r for r in results if not r.failed), key=lambda r: (-r.mean_score, r.spec.text))
    bad = sorted((r for r in results if r.failed), key=lambda r: r.index)
    ranked = [CandidateResult(r.index, r.spec, r.score, rank) for rank, r in enumerate(ok, start=1)]
    return SearchResult(tuple(ranked + bad))


def _evaluate_chunk(args):
    chunk, d, cv, folds = args
    return [CandidateResult(i, spec, cross_val_score(spec, d, cv, candidate_index=i, folds=folds)) for i, spec in chunk]


def grid_search(d: Dataset, g: ParamGrid, cv: CvConfig, *, n_jobs: int = 1, chunk_size: int = 64) -> SearchResult:
    """Score every expanded candidate; result is independent of ``n_jobs``."""
    specs = list(enumerate(expand_grid(g)))
    folds = make_folds(d.y, cv)
    chunks = [specs[i : i + chunk_size] for i in range(0, len(specs), chunk_size)]
    if n_jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            parts = list(ex.map(_evaluate_chunk, [(c, d, cv, folds) for c in chunks]))
    else:
        parts = [_evaluate_chunk((c, d, cv, folds)) for c in chunks]
    return rank_results(itertools.chain.from_iterable(parts))
