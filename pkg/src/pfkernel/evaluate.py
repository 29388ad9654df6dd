"""Repeated stratified train/test evaluation with inner cross-validation.

Every kernel configuration becomes a :class:`Candidate` that yields a full
Gram matrix over all samples given the current training indices (PF needs
the training set to pick ``t`` from the distance quantiles). For each
repeat, hyperparameters (kernel configuration and SVM ``C``) are chosen by
stratified k-fold CV on the training part only, then the selected model is
scored on the held-out part.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from sklearn.model_selection import StratifiedKFold, StratifiedShuffleSplit

from .kernels import PSS, PWG, SW, Prob, default_grid, gram, quantile_t
from .learn import IndefiniteKernelError, check_psd, svm_predict, svm_train
from .measure import SmoothingParams
from .metric import fim_matrix

log = logging.getLogger(__name__)

__all__ = [
    "Candidate",
    "CvReport",
    "build_candidates",
    "pf_candidates",
    "repeated_evaluation",
    "stratified_splits",
]

SIGMA_GRID = tuple(10.0 ** k for k in range(-3, 4))
T_QUANTILES = (1, 2, 5, 10, 20, 50)
C_GRID = tuple(10.0 ** k for k in range(-2, 3))


@dataclass
class Candidate:
    params: dict
    matrix: Callable[[np.ndarray], np.ndarray] = field(repr=False)


def pf_candidates(diagrams, sigmas=SIGMA_GRID, quantiles=T_QUANTILES, ts=None,
                  accel: str = "exact", epsilon: float = 1e-6) -> list[Candidate]:
    """PF kernels over ``sigmas``; ``t`` from training quantiles or fixed ``ts``."""
    out = []
    for sigma in sigmas:
        D = fim_matrix(diagrams, SmoothingParams(sigma, accel, epsilon))

        if ts:
            for t in ts:
                out.append(Candidate({"kernel": "pf", "sigma": sigma, "t": t},
                                     lambda train, D=D, t=t: np.exp(-t * D)))
            continue

        for s in quantiles:
            def matrix(train, D=D, s=s):
                sub = D[np.ix_(train, train)]
                t = quantile_t(sub[np.triu_indices(len(train), 1)], s)
                return np.exp(-t * D)
            out.append(Candidate({"kernel": "pf", "sigma": sigma, "t_quantile": s}, matrix))
    return out


def _fixed(params: dict, K: np.ndarray) -> Candidate:
    return Candidate(params, lambda train, K=K: K)


def build_candidates(diagrams, kernel: str, sigmas=SIGMA_GRID, quantiles=T_QUANTILES, ts=None,
                     bandwidths=SIGMA_GRID, taus=(0.1, 1.0, 10.0), sw_directions: int = 10,
                     accel: str = "exact", epsilon: float = 1e-6, grid_size: int = 20) -> list[Candidate]:
    """Candidate kernel configurations for one kernel family."""
    if kernel == "pf":
        return pf_candidates(diagrams, sigmas, quantiles, ts, accel, epsilon)
    out = []
    if kernel == "pss":
        for s in sigmas:
            out.append(_fixed({"kernel": "pss", "sigma": s}, gram(diagrams, PSS(s)).values))
    elif kernel == "pwg":
        for s in sigmas:
            for tau in taus:
                out.append(_fixed({"kernel": "pwg", "sigma": s, "tau": tau},
                                  gram(diagrams, PWG(sigma=s, tau=tau)).values))
    elif kernel == "sw":
        for s in sigmas:
            out.append(_fixed({"kernel": "sw", "sigma": s, "M": sw_directions},
                              gram(diagrams, SW(sw_directions, s)).values))
    elif kernel == "prob":
        grid = default_grid(diagrams, grid_size)
        for s in sigmas:
            for bw in bandwidths:
                out.append(_fixed({"kernel": "prob", "sigma": s, "bandwidth": bw, "grid_size": grid_size},
                                  gram(diagrams, Prob(s, bw, grid)).values))
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    return out


def stratified_splits(labels, repeats: int, test_size: float = 0.3, seed: int = 0):
    """``repeats`` stratified train/test splits; split ``r`` uses seed ``seed + r``."""
    labels = np.asarray(labels)
    out = []
    for r in range(repeats):
        sss = StratifiedShuffleSplit(n_splits=1, test_size=test_size, random_state=seed + r)
        train, test = next(sss.split(np.zeros(len(labels)), labels))
        out.append((np.sort(train), np.sort(test)))
    return out


@dataclass
class CvReport:
    accuracies: list
    selected: list

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies, ddof=1)) if len(self.accuracies) > 1 else 0.0

    def summary(self) -> str:
        return f"{100 * self.mean:.2f} ± {100 * self.std:.2f}"


def _inner_score(K: np.ndarray, y: np.ndarray, C: float, folds) -> float:
    accs = []
    for tr, te in folds:
        model = svm_train(K[np.ix_(tr, tr)], y[tr], C, check=False)
        accs.append(float(np.mean(svm_predict(model, K[np.ix_(te, tr)]) == y[te])))
    return float(np.mean(accs))


def repeated_evaluation(candidates, labels, splits, C_grid=C_GRID, folds: int = 3,
                        seed: int = 0) -> CvReport:
    """Outer test accuracy per split with hyperparameters chosen by inner CV.

    Candidates whose training Gram is clearly indefinite, or whose ``t``
    cannot be chosen, are skipped for that split. Ties go to the earliest
    candidate in grid order.
    """
    labels = np.asarray(labels)
    accuracies, selected = [], []
    for r, (train, test) in enumerate(splits):
        y_tr = labels[train]
        skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed + r)
        inner = list(skf.split(np.zeros(len(train)), y_tr))
        best = None
        for cand in candidates:
            try:
                K = cand.matrix(train)
                K_tr = K[np.ix_(train, train)]
                check_psd(K_tr)
            except (ValueError, IndefiniteKernelError) as exc:
                log.debug("skipping %s: %s", cand.params, exc)
                continue
            for C in C_grid:
                score = _inner_score(K_tr, y_tr, C, inner)
                if best is None or score > best[0]:
                    best = (score, cand, C, K)
        if best is None:
            raise RuntimeError("no admissible candidate for this split")
        _, cand, C, K = best
        model = svm_train(K[np.ix_(train, train)], y_tr, C, check=False)
        pred = svm_predict(model, K[np.ix_(test, train)])
        accuracies.append(float(np.mean(pred == labels[test])))
        selected.append({**cand.params, "C": C})
        log.info("split %d: accuracy %.4f with %s", r, accuracies[-1], selected[-1])
    return CvReport(accuracies, selected)
