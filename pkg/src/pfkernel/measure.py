"""Smoothed, normalized discrete measures built from diagrams.

A multiset of plane points ``U`` and a finite support ``Theta`` give the
probability vector::

    w[k] = sum_{u in U} g(theta_k - u) / Z,    Z = sum_k sum_{u in U} g(theta_k - u)

with ``g(v) = exp(-|v|^2 / (2 sigma^2))``. The Gaussian's normalizing
prefactor cancels in ``Z`` and is omitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .diagram import PersistenceDiagram, diagonal_mirror
from .fgt import GaussTransformProblem, gauss_transform_exact, gauss_transform_fast

__all__ = [
    "DiscreteMeasure",
    "SmoothingParams",
    "SmoothingUnderflowError",
    "build_support",
    "gauss_sums",
    "smooth",
]

_TINY = 1e-300


class SmoothingUnderflowError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SmoothingParams:
    """Gaussian bandwidth and evaluation mode (``"exact"`` or ``"fgt"``)."""

    sigma: float
    accel: str = "exact"
    epsilon: float = 1e-6

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive and finite")
        if self.accel not in ("exact", "fgt"):
            raise ValueError(f"unknown accel mode {self.accel!r}")
        if self.accel == "fgt" and not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = {"sigma": self.sigma, "accel": self.accel}
        if self.accel == "fgt":
            d["epsilon"] = self.epsilon
        return d


@dataclass(frozen=True)
class DiscreteMeasure:
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.support) != len(self.weights):
            raise ValueError("support and weights differ in length")

    def __len__(self) -> int:
        return len(self.weights)


def _points(x) -> np.ndarray:
    if isinstance(x, PersistenceDiagram):
        x = x.points
    arr = np.asarray(x, dtype=float).reshape(-1, 2)
    if not np.isfinite(arr).all():
        raise ValueError("points must be finite; resolve essential classes first")
    return arr


def build_support(dg_i: PersistenceDiagram, dg_j: PersistenceDiagram) -> np.ndarray:
    """Union of both diagrams and their diagonal projections, without repeats.

    Rows are returned in lexicographic order, so the result does not depend
    on argument order. Duplicates are detected by exact coordinate equality.
    """
    parts = [_points(dg_i), _points(dg_j),
             _points(diagonal_mirror(dg_i)), _points(diagonal_mirror(dg_j))]
    allpts = np.concatenate(parts)
    if len(allpts) == 0:
        return np.empty((0, 2))
    return np.unique(allpts, axis=0)


def _sq_dists(targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
    return ((targets[:, None, 0] - sources[None, :, 0]) ** 2
            + (targets[:, None, 1] - sources[None, :, 1]) ** 2)


def _log_gauss_sums(sources, targets, sigma):
    return logsumexp(-_sq_dists(targets, sources) / (2.0 * sigma * sigma), axis=1)


def _cutoff_sums(sources: np.ndarray, targets: np.ndarray, sigma: float, rel_eps: float) -> np.ndarray:
    """Gaussian sums with relative error ``rel_eps``, using only nearby sources.

    A target at distance ``d`` from its nearest source has a sum of at least
    ``exp(-d^2/h^2)``; sources beyond ``sqrt(d^2 + h^2 ln(n/rel_eps))``
    contribute less than ``rel_eps`` times that in total.
    """
    h2 = 2.0 * sigma * sigma
    n = len(sources)
    tree = cKDTree(sources)
    d_nn, _ = tree.query(targets, k=1)
    radii = np.sqrt(d_nn ** 2 + h2 * math.log(n / rel_eps))
    out = np.empty(len(targets))
    for k, idx in enumerate(tree.query_ball_point(targets, radii)):
        idx = np.sort(np.asarray(idx, dtype=np.int64))
        diff = sources[idx] - targets[k]
        out[k] = np.exp(-np.einsum("ij,ij->i", diff, diff) / h2).sum()
    return out


def _gauss_sums(src: np.ndarray, tgt: np.ndarray, params: SmoothingParams):
    n = len(src)
    if params.accel == "exact" or n == 0 or len(tgt) == 0:
        prob = GaussTransformProblem(src, np.ones(n), tgt, params.sigma)
        return gauss_transform_exact(prob), False
    eps_abs = max(params.epsilon / (4.0 * n), 1e-13)
    prob = GaussTransformProblem(src, np.ones(n), tgt, params.sigma, eps_abs)
    approx, plan = gauss_transform_fast(prob, return_plan=True)
    if plan.direct:
        return approx, False
    bound = eps_abs * n
    uncertified = (approx - bound) * params.epsilon < bound
    if uncertified.any():
        approx[uncertified] = _cutoff_sums(src, tgt[uncertified], params.sigma, params.epsilon / 2.0)
    return approx, True


def gauss_sums(sources, targets, params: SmoothingParams) -> np.ndarray:
    """``S[k] = sum_u g(theta_k - u)`` for unit charges.

    In ``fgt`` mode every entry carries a relative error of at most
    ``params.epsilon``: the fast transform runs with an absolute budget small
    enough to certify most entries, and entries it cannot certify are
    recomputed from nearby sources only.
    """
    return _gauss_sums(_points(sources), _points(targets), params)[0]


def smooth(points, theta, params: SmoothingParams) -> DiscreteMeasure:
    """Smooth a point multiset onto ``theta`` and normalize to unit mass."""
    return _smooth(_points(points), _points(theta), params)[0]


def _smooth(src: np.ndarray, support: np.ndarray, params: SmoothingParams):
    if len(src) == 0:
        if len(support) == 0:
            return DiscreteMeasure(support, np.empty(0)), False
        raise ValueError("cannot normalize an empty point set")
    if len(support) == 0:
        raise ValueError("support set is empty but points are not")
    sums, accelerated = _gauss_sums(src, support, params)
    z = sums.sum()
    if z < _TINY or not math.isfinite(z):
        logs = _log_gauss_sums(src, support, params.sigma)
        w = np.exp(logs - logsumexp(logs))
        if not np.isfinite(w).all() or w.sum() == 0:
            raise SmoothingUnderflowError(
                f"Gaussian sums underflow at sigma={params.sigma}; use a larger sigma")
    else:
        w = sums / z
    return DiscreteMeasure(support, w), accelerated
