import numpy as np
import pytest

from eegpipe.classifiers import Dataset
from eegpipe.ingest import N_EVENTS, Band, Corpus, Session, SessionClass


def make_session(seed=0, session_id="s0", participant_id=0, session_class=SessionClass.SIGNAL, scale=32767.0):
    rng = np.random.default_rng(seed)
    return Session(
        timestamps=np.arange(N_EVENTS) + 1_600_000_000,
        primary_freq=10.0,
        secondary_freq=5.0,
        powers=np.round(rng.uniform(0, scale, size=(N_EVENTS, len(Band))), 3),
        session_id=session_id,
        participant_id=participant_id,
        session_class=session_class,
    )


@pytest.fixture
def small_corpus():
    sessions = [make_session(i, f"s{i}", i % 2) for i in range(4)]
    sessions.append(make_session(9, "n0", None, SessionClass.NOISE))
    return Corpus(tuple(sessions))


def blob_dataset(seed=0, n_train=80, n_test=40, sep=6.0, n_classes=2):
    """Gaussian blobs with unit variance and means ``sep`` apart."""
    rng = np.random.default_rng(seed)
    means = np.array([[sep * k / np.sqrt(2), sep * k / np.sqrt(2)] for k in range(n_classes)])

    def draw(n):
        y = np.arange(n) % n_classes
        return means[y] + rng.normal(size=(n, 2)), y

    Xtr, ytr = draw(n_train)
    Xte, yte = draw(n_test)
    return Dataset(Xtr, ytr), Dataset(Xte, yte)


@pytest.fixture
def blobs():
    return blob_dataset()
