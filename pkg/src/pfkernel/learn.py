"""Kernel machines driven by precomputed Gram matrices.

* A one-vs-one C-SVM trained by SMO (maximal-violating-pair selection with
  second-order working set choice, no shrinking).
* Kernel Fisher discriminant ratio scan for change-point detection.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BinarySvm",
    "IndefiniteKernelError",
    "KfdrConfig",
    "SvmModel",
    "check_psd",
    "kfdr_argmax",
    "kfdr_scan",
    "kfdr_score",
    "smo_solve",
    "svm_predict",
    "svm_train",
]

_TAU = 1e-12
PSD_TOLERANCE = 1e-6


class IndefiniteKernelError(ValueError):
    pass


def check_psd(K: np.ndarray, tol: float = PSD_TOLERANCE) -> float:
    """Return the smallest eigenvalue; raise if it is below ``-tol * max``.

    Slightly negative eigenvalues are tolerated, with a warning once they
    exceed rounding level.
    """
    ev = np.linalg.eigvalsh((K + K.T) / 2.0)
    lo, hi = float(ev[0]), float(max(ev[-1], 0.0))
    if lo < -tol * hi:
        raise IndefiniteKernelError(f"Gram matrix is indefinite: min eigenvalue {lo:.3g}, max {hi:.3g}")
    if lo < -1e-12 * hi:
        warnings.warn(f"Gram matrix has small negative eigenvalue {lo:.3g}", RuntimeWarning, stacklevel=2)
    return lo


@dataclass
class BinarySvm:
    """Decision function ``f(x) = sum_s coef[s] K(x, x_s) - rho``."""

    support: np.ndarray
    coef: np.ndarray
    rho: float
    n_iter: int = 0
    objective: list = field(default_factory=list, repr=False)
    kkt_gap: float = 0.0


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int = 10_000_000, track_objective: bool = False) -> BinarySvm:
    """Solve the C-SVM dual on a precomputed kernel with labels in {+1, -1}.

    Maximizes ``sum(a) - a'Qa/2`` with ``Q = yy' * K``, ``0 <= a <= C`` and
    ``y'a = 0``. Stops when the maximal KKT violation drops below ``tol``.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    history = []
    it = 0
    gap = math.inf
    pos = y > 0
    while it < max_iter:
        if track_objective:
            history.append(float(-0.5 * alpha @ (G - 1.0)))
        upper = alpha >= C
        lower = alpha <= 0
        up_mask = np.where(pos, ~upper, ~lower)
        low_mask = np.where(pos, ~lower, ~upper)
        yG = -y * G
        if not up_mask.any() or not low_mask.any():
            gap = 0.0
            break
        score_up = np.where(up_mask, yG, -np.inf)
        i = int(np.argmax(score_up))
        g_max = score_up[i]
        score_low = np.where(low_mask, yG, np.inf)
        g_min = float(score_low.min())
        gap = g_max - g_min
        if gap < tol:
            break
        grad_diff = g_max - yG
        quad = QD[i] + QD - 2.0 * K[i]
        quad = np.where(quad > 0, quad, _TAU)
        cand = low_mask & (grad_diff > 0)
        if not cand.any():
            break
        obj = np.where(cand, -(grad_diff ** 2) / quad, np.inf)
        j = int(np.argmin(obj))

        ai, aj = alpha[i], alpha[j]
        Qi, Qj = Q[i], Q[j]
        if y[i] != y[j]:
            qc = QD[i] + QD[j] + 2.0 * Qi[j]
            qc = qc if qc > 0 else _TAU
            delta = (-G[i] - G[j]) / qc
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            else:
                if ni < 0:
                    ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            else:
                if nj > C:
                    nj, ni = C, C + diff
        else:
            qc = QD[i] + QD[j] - 2.0 * Qi[j]
            qc = qc if qc > 0 else _TAU
            delta = (G[i] - G[j]) / qc
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            else:
                if nj < 0:
                    nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            else:
                if ni < 0:
                    ni, nj = 0.0, total
        G += Qi * (ni - ai) + Qj * (nj - aj)
        alpha[i], alpha[j] = ni, nj
        it += 1

    rho = _bias(alpha, G, y, C)
    sv = np.flatnonzero(alpha > 0)
    return BinarySvm(sv, alpha[sv] * y[sv], rho, it, history, float(gap))


def _bias(alpha, G, y, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    upper = alpha >= C
    lower = alpha <= 0
    # bounds on rho from the bounded variables
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else math.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -math.inf
    if math.isinf(ub) or math.isinf(lb):
        return float(ub if math.isfinite(ub) else lb if math.isfinite(lb) else 0.0)
    return float((ub + lb) / 2.0)


@dataclass
class SvmModel:
    classes: np.ndarray
    n_train: int
    machines: dict  # (class_a, class_b) -> (train indices, BinarySvm)

    def decision_values(self, cross_gram: np.ndarray) -> dict:
        cg = np.asarray(cross_gram, dtype=float)
        if cg.ndim != 2 or cg.shape[1] != self.n_train:
            raise ValueError(f"cross Gram must have {self.n_train} columns, got shape {cg.shape}")
        out = {}
        for pair, (idx, m) in self.machines.items():
            out[pair] = cg[:, idx[m.support]] @ m.coef - m.rho
        return out


def svm_train(K, labels, C: float = 1.0, tol: float = 1e-3, check: bool = True) -> SvmModel:
    """One-vs-one SVM on a precomputed Gram matrix.

    Raises ``ValueError`` for fewer than two classes or non-finite entries
    and :class:`IndefiniteKernelError` for clearly indefinite Grams.
    """
    K = np.asarray(getattr(K, "values", K), dtype=float)
    labels = np.asarray(labels)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != len(labels):
        raise ValueError("Gram matrix must be square and match the labels")
    if not np.isfinite(K).all():
        raise ValueError("Gram matrix has non-finite entries")
    if not C > 0:
        raise ValueError("C must be positive")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    if check:
        check_psd(K)
    machines = {}
    for a, b in itertools.combinations(classes.tolist(), 2):
        idx = np.flatnonzero((labels == a) | (labels == b))
        y = np.where(labels[idx] == a, 1.0, -1.0)
        machines[(a, b)] = (idx, smo_solve(K[np.ix_(idx, idx)], y, C, tol))
    return SvmModel(classes, len(labels), machines)


def svm_predict(model: SvmModel, cross_gram) -> np.ndarray:
    """Majority vote over pairwise machines.

    A pairwise decision value ``>= 0`` votes for the lower class id; ties in
    the vote count go to the lowest class id.
    """
    cg = np.asarray(getattr(cross_gram, "values", cross_gram), dtype=float)
    dec = model.decision_values(cg)
    n_test = cg.shape[0]
    pos = {c: k for k, c in enumerate(model.classes.tolist())}
    votes = np.zeros((n_test, len(model.classes)), dtype=np.int64)
    for (a, b), d in dec.items():
        win_a = d >= 0
        votes[win_a, pos[a]] += 1
        votes[~win_a, pos[b]] += 1
    return model.classes[np.argmax(votes, axis=1)]


# -- KFDR ---------------------------------------------------------------------

@dataclass(frozen=True)
class KfdrConfig:
    """Regularization ``gamma`` and inclusive range of first-segment sizes."""

    gamma: float = 1e-3
    candidate_range: tuple | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


def kfdr_score(K: np.ndarray, tau: int, gamma: float) -> float:
    """KFDR between samples ``[0, tau)`` and ``[tau, n)``.

    ``(n1 n2 / n) * d' (S_W + gamma I)^{-1} d`` where ``d`` is the difference
    of the segment means in feature space and ``S_W = (n1 S_1 + n2 S_2) / n``
    the pooled within-segment covariance. Through the Gram matrix this is::

        (n1 n2 / (n gamma)) * (v'Kv - (HKv)' (n gamma I + HKH)^{-1} HKv)

    with ``v = 1_2/n2 - 1_1/n1`` and ``H`` the block-diagonal centering.
    """
    n = len(K)
    n1, n2 = tau, n - tau
    v = np.concatenate([np.full(n1, -1.0 / n1), np.full(n2, 1.0 / n2)])
    H = np.zeros((n, n))
    H[:n1, :n1] = np.eye(n1) - 1.0 / n1
    H[n1:, n1:] = np.eye(n2) - 1.0 / n2
    Kv = K @ v
    HKv = H @ Kv
    A = n * gamma * np.eye(n) + H @ K @ H
    quad = float(v @ Kv) - float(HKv @ np.linalg.solve(A, HKv))
    return n1 * n2 / n * quad / gamma


def kfdr_scan(gram, config: KfdrConfig = KfdrConfig()) -> list[tuple[int, float]]:
    """Scores for every admissible split; ``tau`` is the size of the first segment.

    Splits leaving fewer than two samples on either side are skipped.
    """
    K = np.asarray(getattr(gram, "values", gram), dtype=float)
    n = len(K)
    lo, hi = config.candidate_range or (2, n - 2)
    out = []
    for tau in range(max(lo, 2), min(hi, n - 2) + 1):
        out.append((tau, kfdr_score(K, tau, config.gamma)))
    return out


def kfdr_argmax(scores) -> int:
    """Split with the highest score (earliest on ties)."""
    if not scores:
        raise ValueError("no admissible split")
    best = max(range(len(scores)), key=lambda k: (scores[k][1], -k))
    return scores[best][0]
