"""Kernels on persistence diagrams and Gram matrix assembly.

``pf``    exp(-t * d_FIM)                                   (Persistence Fisher)
``pss``   heat-diffusion kernel with a diagonal mirror      (scale space)
``pwg``   Gaussian on arctan-weighted kernel mean embeddings
``sw``    exp(-d_SW / (2 sigma^2)) with M sliced directions
``prob``  Gaussian on diagrams smoothed over a fixed grid   (baseline)

The PF Gram matrix keeps its distance matrix, so a new ``t`` costs only an
element-wise exponential (``K_t2 = K_t1 ** (t2 / t1)``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np

from .diagram import PersistenceDiagram
from .measure import SmoothingParams, _points, smooth
from .metric import fim, fim_cross, fim_matrix

__all__ = [
    "PF",
    "PSS",
    "PWG",
    "SW",
    "Prob",
    "GramMatrix",
    "KernelParams",
    "cross_gram",
    "default_grid",
    "gram",
    "kernel_value",
    "pf_kernel",
    "prob_features",
    "pss_kernel",
    "pwg_kernel",
    "quantile_t",
    "sliced_wasserstein_distance",
    "sw_kernel",
]


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class PF:
    t: float
    sigma: float
    accel: str = "exact"
    epsilon: float = 1e-6
    name = "pf"

    def __post_init__(self):
        _positive("t", self.t)
        self.smoothing()

    def smoothing(self) -> SmoothingParams:
        return SmoothingParams(self.sigma, self.accel, self.epsilon)


@dataclass(frozen=True)
class PSS:
    sigma: float
    name = "pss"

    def __post_init__(self):
        _positive("sigma", self.sigma)


@dataclass(frozen=True)
class PWG:
    C: float = 1.0
    q: float = 1.0
    sigma: float = 0.1
    tau: float = 1.0
    name = "pwg"

    def __post_init__(self):
        for k in ("C", "q", "sigma", "tau"):
            _positive(k, getattr(self, k))


@dataclass(frozen=True)
class SW:
    M: int = 10
    sigma: float = 1.0
    name = "sw"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        _positive("sigma", self.sigma)


@dataclass(frozen=True)
class Prob:
    """Gaussian kernel on measures smoothed over a fixed ``grid``."""

    sigma: float
    bandwidth: float
    grid: np.ndarray = field(repr=False, compare=False, default=None)
    name = "prob"

    def __post_init__(self):
        _positive("sigma", self.sigma)
        _positive("bandwidth", self.bandwidth)
        if self.grid is None:
            raise ValueError("prob kernel needs a grid")


KernelParams = Union[PF, PSS, PWG, SW, Prob]


def params_dict(params: KernelParams) -> dict:
    d = {k: v for k, v in asdict(params).items() if k != "grid"}
    if isinstance(params, Prob):
        d["grid_points"] = int(len(params.grid))
    d["kernel"] = params.name
    return d


# -- individual kernels -----------------------------------------------------

def pf_kernel(dg_i, dg_j, params: PF) -> float:
    return math.exp(-params.t * fim(dg_i, dg_j, params.smoothing()).value)


def _gauss_double_sum(a: np.ndarray, b: np.ndarray, scale: float, wa=None, wb=None) -> float:
    if len(a) == 0 or len(b) == 0:
        return 0.0
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    g = np.exp(-d2 / scale)
    if wa is not None:
        g = wa[:, None] * g * wb[None, :]
    return float(g.sum())


def pss_kernel(dg_i, dg_j, params: PSS) -> float:
    a, b = _points(dg_i), _points(dg_j)
    scale = 8.0 * params.sigma
    direct = _gauss_double_sum(a, b, scale)
    mirrored = _gauss_double_sum(a, b[:, ::-1], scale)
    return (direct - mirrored) / (8.0 * math.pi * params.sigma)


def _pwg_weights(p: np.ndarray, params: PWG) -> np.ndarray:
    pers = np.maximum(p[:, 1] - p[:, 0], 0.0)
    return np.arctan(params.C * pers ** params.q)


def _pwg_inner(a, b, wa, wb, params: PWG) -> float:
    return _gauss_double_sum(a, b, 2.0 * params.sigma ** 2, wa, wb)


def pwg_kernel(dg_i, dg_j, params: PWG) -> float:
    a, b = _points(dg_i), _points(dg_j)
    wa, wb = _pwg_weights(a, params), _pwg_weights(b, params)
    sq = (_pwg_inner(a, a, wa, wa, params) - 2.0 * _pwg_inner(a, b, wa, wb, params)
          + _pwg_inner(b, b, wb, wb, params))
    return math.exp(-max(sq, 0.0) / (2.0 * params.tau ** 2))


def sw_directions(M: int) -> np.ndarray:
    """Unit vectors at angles ``-pi/2 + k pi / M``, ``k = 0..M-1``."""
    ang = -math.pi / 2.0 + np.arange(M) * math.pi / M
    return np.column_stack([np.cos(ang), np.sin(ang)])


def sliced_wasserstein_distance(dg_i, dg_j, M: int = 10, directions=None) -> float:
    """Sliced distance averaged over ``M`` evenly spaced directions.

    Each diagram is padded with the other's diagonal projections, both are
    projected on a direction, and the sorted projections are compared in
    L1. The result is ``(1/M) * sum_k |sort(A.theta_k) - sort(B.theta_k)|_1``.
    """
    a, b = _points(dg_i), _points(dg_j)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    mid_a = np.repeat(a.sum(axis=1, keepdims=True) / 2.0, 2, axis=1)
    mid_b = np.repeat(b.sum(axis=1, keepdims=True) / 2.0, 2, axis=1)
    left = np.concatenate([a, mid_b])
    right = np.concatenate([b, mid_a])
    dirs = sw_directions(M) if directions is None else np.asarray(directions, dtype=float).reshape(-1, 2)
    pl = np.sort(left @ dirs.T, axis=0)
    pr = np.sort(right @ dirs.T, axis=0)
    return float(np.abs(pl - pr).sum(axis=0).mean())


def sw_kernel(dg_i, dg_j, params: SW) -> float:
    d = sliced_wasserstein_distance(dg_i, dg_j, params.M)
    return math.exp(-d / (2.0 * params.sigma ** 2))


def default_grid(diagrams, size: int = 20, pad: float = 0.05) -> np.ndarray:
    """Regular ``size x size`` grid covering every point of ``diagrams``."""
    pts = [_points(d) for d in diagrams]
    pts = np.concatenate(pts) if pts else np.empty((0, 2))
    if len(pts) == 0:
        lo, hi = np.zeros(2), np.ones(2)
    else:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    lo, hi = lo - pad * span, hi + pad * span
    xs = np.linspace(lo[0], hi[0], size)
    ys = np.linspace(lo[1], hi[1], size)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def prob_features(diagrams, grid: np.ndarray, sigma: float) -> np.ndarray:
    """Rows are diagrams smoothed onto ``grid``; empty diagrams give zero rows."""
    params = SmoothingParams(sigma)
    rows = []
    for d in diagrams:
        p = _points(d)
        rows.append(smooth(p, grid, params).weights if len(p) else np.zeros(len(grid)))
    return np.array(rows).reshape(len(rows), len(grid))


def _gaussian_on_rows(fa: np.ndarray, fb: np.ndarray, bandwidth: float) -> np.ndarray:
    d2 = ((fa[:, None, :] - fb[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2 / (2.0 * bandwidth ** 2))


def kernel_value(dg_i, dg_j, params: KernelParams) -> float:
    """Kernel between two diagrams for any parameter type."""
    if isinstance(params, PF):
        return pf_kernel(dg_i, dg_j, params)
    if isinstance(params, PSS):
        return pss_kernel(dg_i, dg_j, params)
    if isinstance(params, PWG):
        return pwg_kernel(dg_i, dg_j, params)
    if isinstance(params, SW):
        return sw_kernel(dg_i, dg_j, params)
    if isinstance(params, Prob):
        f = prob_features([dg_i, dg_j], params.grid, params.sigma)
        return float(_gaussian_on_rows(f[:1], f[1:], params.bandwidth)[0, 0])
    raise TypeError(f"unknown kernel parameters {params!r}")


# -- Gram matrices ------------------------------------------------------------

@dataclass
class GramMatrix:
    """Kernel matrix with the parameters and diagram ids that produced it.

    For PF kernels ``distances`` holds the d_FIM matrix used to build it.
    """

    values: np.ndarray
    kernel: KernelParams
    diagram_ids: list
    distances: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.values)

    def with_t(self, t: float) -> "GramMatrix":
        """Same PF Gram at a different ``t``, reusing the stored distances."""
        if not isinstance(self.kernel, PF) or self.distances is None:
            raise TypeError("only PF Gram matrices with cached distances can be re-scaled")
        k = PF(t, self.kernel.sigma, self.kernel.accel, self.kernel.epsilon)
        return GramMatrix(np.exp(-t * self.distances), k, list(self.diagram_ids), self.distances)

    def metadata(self) -> dict:
        return {"kernel": params_dict(self.kernel), "diagram_ids": [str(i) for i in self.diagram_ids],
                "size": len(self)}


def _pairwise(diagrams, fn) -> np.ndarray:
    n = len(diagrams)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = fn(diagrams[i], diagrams[j])
    return out


def gram(diagrams: Sequence[PersistenceDiagram], params: KernelParams, ids=None) -> GramMatrix:
    """Symmetric Gram matrix over ``diagrams``."""
    diagrams = list(diagrams)
    if not diagrams:
        raise ValueError("need at least one diagram")
    ids = list(range(len(diagrams))) if ids is None else list(ids)
    if len(ids) != len(diagrams):
        raise ValueError("ids and diagrams differ in length")
    if isinstance(params, PF):
        dist = fim_matrix(diagrams, params.smoothing())
        return GramMatrix(np.exp(-params.t * dist), params, ids, dist)
    if isinstance(params, Prob):
        f = prob_features(diagrams, params.grid, params.sigma)
        return GramMatrix(_gaussian_on_rows(f, f, params.bandwidth), params, ids)
    return GramMatrix(_pairwise(diagrams, lambda a, b: kernel_value(a, b, params)), params, ids)


def cross_gram(rows, cols, params: KernelParams) -> np.ndarray:
    """Kernel values between ``rows`` (e.g. test) and ``cols`` (e.g. train)."""
    if isinstance(params, PF):
        return np.exp(-params.t * fim_cross(rows, cols, params.smoothing()))
    if isinstance(params, Prob):
        fr = prob_features(rows, params.grid, params.sigma)
        fc = prob_features(cols, params.grid, params.sigma)
        return _gaussian_on_rows(fr, fc, params.bandwidth)
    return np.array([[kernel_value(a, b, params) for b in cols] for a in rows]).reshape(len(rows), len(cols))


def quantile_t(fim_values, s: float) -> float:
    """``1 / q_s`` where ``q_s`` is the nearest-rank ``s``% quantile.

    The quantile is the element at 1-based position ``ceil(s * n / 100)`` of
    the sorted values (``s = 100`` gives the maximum).
    """
    vals = np.sort(np.asarray(fim_values, dtype=float).ravel())
    if vals.size == 0:
        raise ValueError("quantile of an empty list")
    if not 0 < s <= 100:
        raise ValueError("s must lie in (0, 100]")
    rank = max(1, math.ceil(s * vals.size / 100.0 - 1e-12))
    q = vals[rank - 1]
    if q <= 0:
        raise ValueError(f"{s}% quantile of the distances is zero; use a larger sigma or distinct diagrams")
    return 1.0 / q
