"""Fast Gauss Transform in two dimensions.

Computes ``G[k] = sum_j q[j] * exp(-|y[k] - x[j]|^2 / (2 sigma^2))`` for all
targets ``y`` using the improved FGT construction: sources are grouped by
farthest-point clustering, each cluster's contribution is a truncated
Taylor series of ``exp(2 dx.dy / h^2)`` about its center (``h^2 = 2 sigma^2``),
and a target only evaluates the clusters whose center lies within a cutoff
radius.

With ``a = r_x / h`` (cluster radius) and ``b = r_y / h`` (cutoff radius),
truncating the series after total degree ``p - 1`` costs at most
``(2ab)^p / p!`` per unit charge, and skipping a cluster whose center is
farther than ``r_y = r_x + h sqrt(ln(1/eps))`` costs at most ``eps`` per
unit charge. Each source is either expanded or skipped for a given target,
so the output error is bounded by ``eps * sum(|q|)`` element-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "GaussTransformProblem",
    "IfgtPlan",
    "farthest_point_clustering",
    "gauss_transform_exact",
    "gauss_transform_fast",
    "plan_ifgt",
    "triangular_multi_indices",
]

# below this many source-target products the direct sum is always used
FALLBACK_PRODUCTS = 4096
# fraction of eps spent on the analytic bound; the rest absorbs rounding
_SAFETY = 0.5
_MAX_ORDER = 120
_MAX_CLUSTERS = 1024
_CHUNK = 1 << 22
_BLOCK = 4096


@dataclass(frozen=True)
class GaussTransformProblem:
    """Sources with charges, targets, Gaussian bandwidth and error budget.

    ``bandwidth`` is the standard deviation ``sigma`` of the (unnormalized)
    Gaussian ``exp(-|y - x|^2 / (2 sigma^2))``.
    """

    sources: np.ndarray
    charges: np.ndarray
    targets: np.ndarray
    bandwidth: float
    epsilon: float = 1e-6

    def __post_init__(self):
        src = np.asarray(self.sources, dtype=float).reshape(-1, 2)
        tgt = np.asarray(self.targets, dtype=float).reshape(-1, 2)
        q = np.asarray(self.charges, dtype=float).ravel()
        if q.shape[0] != src.shape[0]:
            raise ValueError("charges and sources differ in length")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not (np.isfinite(src).all() and np.isfinite(tgt).all() and np.isfinite(q).all()):
            raise ValueError("non-finite input")
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "targets", tgt)
        object.__setattr__(self, "charges", q)


def gauss_transform_exact(p: GaussTransformProblem) -> np.ndarray:
    """Direct O(N M) evaluation, chunked over targets."""
    src, q, tgt = p.sources, p.charges, p.targets
    out = np.zeros(len(tgt))
    if len(src) == 0 or len(tgt) == 0:
        return out
    scale = -1.0 / (2.0 * p.bandwidth * p.bandwidth)
    step = max(1, _CHUNK // len(src))
    for lo in range(0, len(tgt), step):
        y = tgt[lo:lo + step]
        d2 = (y[:, None, 0] - src[None, :, 0]) ** 2 + (y[:, None, 1] - src[None, :, 1]) ** 2
        out[lo:lo + step] = np.exp(scale * d2) @ q
    return out


def triangular_multi_indices(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Exponent pairs ``(i, j)`` with ``i + j < order``, graded by total degree."""
    ii, jj = [], []
    for deg in range(order):
        for i in range(deg, -1, -1):
            ii.append(i)
            jj.append(deg - i)
    return np.array(ii, dtype=np.int64), np.array(jj, dtype=np.int64)


def _fps(points: np.ndarray):
    """Yield ``(center, covering radius with the centers so far)`` forever."""
    x, y = points[:, 0], points[:, 1]
    dist2 = (x - x[0]) ** 2 + (y - y[0]) ** 2
    tmp = np.empty_like(dist2)
    center = 0
    while True:
        far = int(np.argmax(dist2))
        yield center, math.sqrt(float(dist2[far]))
        center = far
        np.subtract(x, x[far], out=tmp)
        np.square(tmp, out=tmp)
        t2 = (y - y[far]) ** 2
        tmp += t2
        np.minimum(dist2, tmp, out=dist2)


def farthest_point_clustering(points: np.ndarray, k_max: int, stop_radius: float = 0.0):
    """Gonzalez farthest-point clustering, seeded at point 0.

    Returns the chosen center indices (in selection order) and ``radii``
    where ``radii[k-1]`` is the covering radius using the first ``k`` centers.
    Stops early once the radius falls to ``stop_radius`` or below.
    """
    k_max = max(1, min(k_max, len(points)))
    centers, radii = [], []
    for c, r in _fps(points):
        centers.append(c)
        radii.append(r)
        if len(centers) >= k_max or r <= stop_radius:
            break
    return np.array(centers, dtype=np.int64), np.array(radii)


def _truncation_order(two_ab: float, eps: float) -> int:
    # smallest p with (2ab)^p / p! <= eps, evaluated in logs
    if two_ab <= 0.0:
        return 1
    log_eps = math.log(eps)
    log_x = math.log(two_ab)
    for p in range(1, _MAX_ORDER + 1):
        if p * log_x - math.lgamma(p + 1) <= log_eps:
            return p
    return _MAX_ORDER + 1


@dataclass(frozen=True)
class IfgtPlan:
    """Parameters chosen for one transform; ``direct`` means fall back."""

    direct: bool
    n_clusters: int = 0
    order: int = 0
    cluster_radius: float = 0.0
    cutoff_radius: float = 0.0
    centers: np.ndarray = field(default=None, repr=False)
    cost: float = 0.0


def plan_ifgt(p: GaussTransformProblem, allow_fallback: bool = True) -> IfgtPlan:
    """Choose cluster count and truncation order by a simple cost model."""
    n, m = len(p.sources), len(p.targets)
    direct_cost = float(n) * float(m)
    if allow_fallback and (n * m <= FALLBACK_PRODUCTS or n == 0 or m == 0):
        return IfgtPlan(direct=True, cost=direct_cost)
    if n == 0 or m == 0:
        return IfgtPlan(direct=True, cost=0.0)

    h = math.sqrt(2.0) * p.bandwidth
    eps = _SAFETY * p.epsilon
    skip_reach = h * math.sqrt(math.log(1.0 / eps))
    allpts = np.vstack([p.sources, p.targets])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    diam = float(np.hypot(*(hi - lo)))
    slo, shi = p.sources.min(axis=0), p.sources.max(axis=0)
    area = float(max(shi[0] - slo[0], h) * max(shi[1] - slo[1], h))

    centers = []
    best = None
    k_max = min(_MAX_CLUSTERS, n)
    for c, r_x in _fps(p.sources):
        centers.append(c)
        k = len(centers)
        r_y = r_x + skip_reach
        a = r_x / h
        b = min(r_y, diam) / h
        order = _truncation_order(2.0 * a * b, eps)
        cost = math.inf
        if order <= _MAX_ORDER:
            n_terms = order * (order + 1) // 2
            near = min(float(k), 1.0 + k * math.pi * r_y * r_y / area)
            cost = n * n_terms + m * near * n_terms + n * k
            if best is None or cost < best.cost:
                best = IfgtPlan(False, k, order, r_x, r_y, np.array(centers, dtype=np.int64), cost)
        # the clustering alone already costs n * k; far past the best k the
        # modelled cost only grows
        if k >= k_max or r_x <= 0.05 * h or (best is not None and (
                n * k >= best.cost or (cost > 2.0 * best.cost and k > 2 * best.n_clusters + 8))):
            break
    if best is None or (allow_fallback and best.cost >= direct_cost):
        return IfgtPlan(direct=True, cost=direct_cost)
    return best


def _monomials(d: np.ndarray, ii: np.ndarray, jj: np.ndarray, order: int) -> np.ndarray:
    px = np.ones((len(d), order))
    py = np.ones((len(d), order))
    for e in range(1, order):
        px[:, e] = px[:, e - 1] * d[:, 0]
        py[:, e] = py[:, e - 1] * d[:, 1]
    return px[:, ii] * py[:, jj]


def _ifgt(p: GaussTransformProblem, plan: IfgtPlan) -> np.ndarray:
    h = math.sqrt(2.0) * p.bandwidth
    src, q, tgt = p.sources, p.charges, p.targets
    centers = src[plan.centers]
    # nearest-center assignment keeps every |dx| within the covering radius
    _, label = cKDTree(centers).query(src, k=1)
    ii, jj = triangular_multi_indices(plan.order)
    lg = np.array([math.lgamma(i + 1) + math.lgamma(j + 1) for i, j in zip(ii, jj)])
    factor = np.exp((ii + jj) * math.log(2.0) - lg)

    coef = np.zeros((plan.n_clusters, len(ii)))
    for lo in range(0, len(src), _BLOCK):
        sl = slice(lo, lo + _BLOCK)
        dx = (src[sl] - centers[label[sl]]) / h
        weights = q[sl] * np.exp(-np.einsum("ij,ij->i", dx, dx))
        terms = _monomials(dx, ii, jj, plan.order) * weights[:, None]
        for t in range(len(ii)):
            coef[:, t] += np.bincount(label[sl], weights=terms[:, t], minlength=plan.n_clusters)
    coef *= factor

    out = np.zeros(len(tgt))
    tree = cKDTree(tgt)
    for k, idx in enumerate(tree.query_ball_point(centers, plan.cutoff_radius)):
        if not idx:
            continue
        # indices are distinct, so their order does not affect the result
        idx = np.asarray(idx, dtype=np.int64)
        for lo in range(0, len(idx), _BLOCK):
            part = idx[lo:lo + _BLOCK]
            dy = (tgt[part] - centers[k]) / h
            vals = _monomials(dy, ii, jj, plan.order) @ coef[k]
            out[part] += vals * np.exp(-np.einsum("ij,ij->i", dy, dy))
    return out


def gauss_transform_fast(p: GaussTransformProblem, allow_fallback: bool = True,
                         return_plan: bool = False):
    """Approximate Gauss transform with error at most ``epsilon * sum(|q|)``.

    Small or unfavourable problems (per the cost model) are evaluated
    exactly by :func:`gauss_transform_exact`; pass ``allow_fallback=False``
    to force the expansion path. With ``return_plan`` the chosen
    :class:`IfgtPlan` is returned as well.
    """
    plan = plan_ifgt(p, allow_fallback)
    out = gauss_transform_exact(p) if plan.direct else _ifgt(p, plan)
    return (out, plan) if return_plan else out
