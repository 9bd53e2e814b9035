"""Gaussian naive Bayes and quadratic discriminant analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidHyperParam, SingularCovariance

VAR_SMOOTHING = 1e-9
SINGULAR_RTOL = 1e-10


def _priors(y, n_classes, given):
    if given is None:
        return np.bincount(y, minlength=n_classes) / y.shape[0]
    p = np.asarray(given, dtype=np.float64)
    if p.shape != (n_classes,):
        raise InvalidHyperParam(f"priors need {n_classes} entries, got {p.shape[0]}")
    return p


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


@dataclass(frozen=True, eq=False)
class NaiveBayesState:
    means: np.ndarray
    variances: np.ndarray
    log_priors: np.ndarray


def fit_gaussian_nb(X, y, n_classes, params, rng):
    """Per-class feature means/variances, variances floored by 1e-9 * max variance."""
    epsilon = VAR_SMOOTHING * float(np.max(np.var(X, axis=0)))
    if epsilon == 0.0:
        epsilon = np.finfo(float).tiny
    means = np.array([X[y == k].mean(axis=0) for k in range(n_classes)])
    variances = np.array([X[y == k].var(axis=0) for k in range(n_classes)]) + epsilon
    return NaiveBayesState(means, variances, _log(_priors(y, n_classes, params["priors"])))


def gaussian_nb_log_joint(state: NaiveBayesState, X):
    out = np.empty((X.shape[0], state.means.shape[0]))
    for k in range(state.means.shape[0]):
        diff = X - state.means[k]
        out[:, k] = (
            state.log_priors[k]
            - 0.5 * np.sum(np.log(2.0 * np.pi * state.variances[k]))
            - 0.5 * np.sum(diff * diff / state.variances[k], axis=1)
        )
    return out


def predict_gaussian_nb(state, X, n_classes):
    return np.argmax(gaussian_nb_log_joint(state, X), axis=1)


@dataclass(frozen=True, eq=False)
class QdaState:
    means: np.ndarray
    covariances: np.ndarray
    log_priors: np.ndarray
    # eigen-decompositions of the covariances, used for the discriminant
    eigvals: np.ndarray
    eigvecs: np.ndarray


def fit_qda(X, y, n_classes, params, rng):
    """Per-class mean and covariance shrunk toward I by ``reg_param``.

    Raises SingularCovariance when a regularised covariance is not
    positive definite.
    """
    reg = params["reg_param"]
    F = X.shape[1]
    means, covs, vals, vecs = [], [], [], []
    for k in range(n_classes):
        Xk = X[y == k]
        mu = Xk.mean(axis=0)
        if Xk.shape[0] > 1:
            diff = Xk - mu
            cov = diff.T @ diff / (Xk.shape[0] - 1)
        else:
            cov = np.zeros((F, F))
        cov = (1.0 - reg) * cov + reg * np.eye(F)
        lam, U = np.linalg.eigh(cov)
        if lam[0] <= SINGULAR_RTOL * max(lam[-1], np.finfo(float).tiny):
            raise SingularCovariance(f"covariance of class index {k} is singular (reg_param={reg})")
        means.append(mu)
        covs.append(cov)
        vals.append(lam)
        vecs.append(U)
    return QdaState(
        np.array(means), np.array(covs), _log(_priors(y, n_classes, params["priors"])), np.array(vals), np.array(vecs)
    )


def qda_discriminants(state: QdaState, X):
    """delta_k(x) = -1/2 log|S_k| - 1/2 (x-mu_k)' S_k^-1 (x-mu_k) + log pi_k."""
    out = np.empty((X.shape[0], state.means.shape[0]))
    for k in range(state.means.shape[0]):
        z = (X - state.means[k]) @ state.eigvecs[k]
        maha = np.sum(z * z / state.eigvals[k], axis=1)
        out[:, k] = -0.5 * np.sum(np.log(state.eigvals[k])) - 0.5 * maha + state.log_priors[k]
    return out


def predict_qda(state, X, n_classes):
    return np.argmax(qda_discriminants(state, X), axis=1)
