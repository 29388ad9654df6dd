"""Persistent homology of point clouds and sampled functions.

Vietoris-Rips convention: an edge ``{x, z}`` enters the filtration at
``a = |x - z| / 2`` (a simplex is present at scale ``a`` when all pairwise
distances are at most ``2a``). Many tools use ``a = |x - z|`` instead;
multiply our values by two to compare.

H0 is computed with union-find over the sorted edges. H1 is computed over
Z/2 on the 2-skeleton by reducing edge coboundaries (persistent
cohomology yields the same pairs as homology) with clearing of spanning
tree edges. Points with zero persistence are discarded.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .diagram import PersistenceDiagram

__all__ = [
    "UnionFind",
    "load_point_cloud",
    "rips_edges",
    "rips_persistence",
    "save_point_cloud",
    "sublevel_persistence",
]


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def _as_cloud(cloud) -> np.ndarray:
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise ValueError("point cloud must be a non-empty (n, d) array")
    if not np.isfinite(pts).all():
        raise ValueError("point cloud has non-finite coordinates")
    return pts


def rips_edges(cloud, max_scale: float = math.inf):
    """Edges of the Rips filtration in filtration order.

    Returns
    -------
    edges : ndarray, shape (m, 2)
        Vertex pairs ``i < j``, sorted by (value, i, j).
    values : ndarray, shape (m,)
        Filtration value of each edge (half the pairwise distance).
    """
    pts = _as_cloud(cloud)
    n = len(pts)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64), np.empty(0)
    iu, ju = np.triu_indices(n, k=1)
    vals = pdist(pts) / 2.0
    keep = vals <= max_scale
    iu, ju, vals = iu[keep], ju[keep], vals[keep]
    order = np.lexsort((ju, iu, vals))
    return np.column_stack([iu[order], ju[order]]), vals[order]


def _h0(n: int, edges: np.ndarray, values: np.ndarray):
    uf = UnionFind(n)
    pairs = []
    negative = np.zeros(len(edges), dtype=bool)
    for k, (i, j) in enumerate(edges.tolist()):
        if uf.union(i, j):
            negative[k] = True
            if values[k] > 0.0:
                pairs.append((0.0, float(values[k])))
    n_components = n - int(negative.sum())
    pairs.extend([(0.0, math.inf)] * n_components)
    return pairs, negative


def _edge_index(n: int, edges: np.ndarray) -> np.ndarray:
    index = np.full((n, n), -1, dtype=np.int64)
    index[edges[:, 0], edges[:, 1]] = np.arange(len(edges))
    index[edges[:, 1], edges[:, 0]] = np.arange(len(edges))
    return index


def _triangles(n: int, edges: np.ndarray):
    """Triangles of the clique complex, as rows of three edge indices."""
    index = _edge_index(n, edges)
    adj = index >= 0
    tris = []
    for i, j in edges.tolist():
        common = np.flatnonzero(adj[i, j + 1:] & adj[j, j + 1:]) + j + 1
        if common.size:
            e_ij = np.full(common.size, index[i, j])
            tris.append(np.column_stack([e_ij, index[i, common], index[j, common]]))
    if not tris:
        return np.empty((0, 3), dtype=np.int64)
    return np.concatenate(tris)


def _h1_boundary(n: int, edges: np.ndarray, values: np.ndarray, negative: np.ndarray):
    """H1 by reducing the full edge/triangle boundary matrix.

    Enumerates every triangle, so it is only practical for sparse
    complexes; kept as a cross-check for :func:`_h1`.
    """
    tris = _triangles(n, edges)
    pairs = []
    paired = negative.copy()
    if len(tris):
        tris.sort(axis=1)
        # triangle value is the value of its youngest edge; ties broken by the
        # remaining edges, which is a lexicographic order on the simplex
        order = np.lexsort((tris[:, 0], tris[:, 1], tris[:, 2]))
        tris = tris[order]
        pivots: dict[int, int] = {}
        for a, b, c in tris.tolist():
            col = (1 << a) | (1 << b) | (1 << c)
            low = c
            while low in pivots:
                col ^= pivots[low]
                if not col:
                    break
                low = col.bit_length() - 1
            if not col:
                continue
            pivots[low] = col
            paired[low] = True
            birth, death = float(values[low]), float(values[c])
            if death > birth:
                pairs.append((birth, death))
    for k in np.flatnonzero(~paired).tolist():
        pairs.append((float(values[k]), math.inf))
    return pairs


def _xor_sorted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Symmetric difference of two sorted arrays without repeats."""
    c = np.concatenate([a, b])
    # timsort merges the two presorted runs in linear time
    c.sort(kind="stable")
    dup = np.flatnonzero(c[1:] == c[:-1])
    if dup.size == 0:
        return c
    keep = np.ones(c.size, dtype=bool)
    keep[dup] = False
    keep[dup + 1] = False
    return c[keep]


def _h1(n: int, edges: np.ndarray, values: np.ndarray, negative: np.ndarray):
    """H1 by persistent cohomology with clearing and apparent pairs.

    Edges are processed from the youngest to the oldest. The coboundary of
    an edge lists the triangles containing it, each keyed by its sorted edge
    indices ``c > b > a`` as ``(c * m + b) * m + a`` so that key order is a
    filtration order on triangles. The pivot of a column is its smallest
    key. MST edges kill H0 classes and are skipped (clearing). When the
    pivot triangle has the current edge as its youngest edge the pair is
    apparent and needs no reduction; only reduced columns of the other
    edges are stored, apparent ones are regenerated on demand.
    """
    m = len(edges)
    if m == 0:
        return []
    if m ** 3 >= 2 ** 63:
        raise ValueError("too many edges for the triangle key space")
    index = _edge_index(n, edges)
    adj = index >= 0

    def coboundary(e: int) -> np.ndarray:
        i, j = edges[e]
        ks = np.flatnonzero(adj[i] & adj[j])
        if ks.size == 0:
            return ks
        tri = np.sort(np.column_stack([np.full(ks.size, e), index[i, ks], index[j, ks]]), axis=1)
        return np.sort((tri[:, 2] * m + tri[:, 1]) * m + tri[:, 0])

    owner: dict[int, int] = {}
    reduced: dict[int, np.ndarray] = {}
    pairs = []
    for e in range(m - 1, -1, -1):
        if negative[e]:
            continue
        col = coboundary(e)
        while col.size and col[0] in owner:
            other = owner[col[0]]
            col = _xor_sorted(col, reduced[other] if other in reduced else coboundary(other))
        if col.size == 0:
            pairs.append((float(values[e]), math.inf))
            continue
        pivot = int(col[0])
        owner[pivot] = e
        youngest = pivot // (m * m)
        if youngest != e:
            reduced[e] = col
        death = float(values[youngest])
        if death > values[e]:
            pairs.append((float(values[e]), death))
    return pairs


def rips_persistence(cloud, max_dim: int = 1, max_scale: float = math.inf) -> list[PersistenceDiagram]:
    """Vietoris-Rips persistence diagrams in dimensions ``0..max_dim``.

    Parameters
    ----------
    cloud : array_like, shape (n, d)
        Points in Euclidean space.
    max_dim : {0, 1}
        Highest homology dimension to compute.
    max_scale : float
        Largest filtration value ``a`` included. Classes still alive at
        ``max_scale`` are reported with infinite death.

    Returns
    -------
    list of PersistenceDiagram
        ``[H0]`` or ``[H0, H1]``, each sorted lexicographically.
    """
    if max_dim not in (0, 1):
        raise ValueError(f"unsupported homology dimension {max_dim}; only 0 and 1 are implemented")
    if not max_scale > 0:
        raise ValueError("max_scale must be positive")
    pts = _as_cloud(cloud)
    n = len(pts)
    edges, values = rips_edges(pts, max_scale)
    h0, negative = _h0(n, edges, values)
    out = [PersistenceDiagram(h0, 0).sorted()]
    if max_dim >= 1:
        out.append(PersistenceDiagram(_h1(n, edges, values, negative), 1).sorted())
    return out


def sublevel_persistence(values) -> PersistenceDiagram:
    """H0 diagram of the sublevel filtration of a function sampled on a path.

    Vertices enter at their value and consecutive samples are joined as soon
    as both are present. When two components merge the younger one (higher
    birth; later index on ties) dies. The global minimum is essential.

    >>> sublevel_persistence([0.0, 2.0, 0.0]).points.tolist()
    [[0.0, 2.0], [0.0, inf]]
    """
    f = np.asarray(values, dtype=float).ravel()
    if f.size == 0:
        raise ValueError("sublevel persistence needs at least one sample")
    if not np.isfinite(f).all():
        raise ValueError("function values must be finite")
    n = f.size
    order = np.lexsort((np.arange(n), f))
    uf = UnionFind(n)
    birth_vertex = list(range(n))
    present = np.zeros(n, dtype=bool)
    pairs = []
    for v in order.tolist():
        present[v] = True
        for w in (v - 1, v + 1):
            if 0 <= w < n and present[w]:
                rv, rw = uf.find(v), uf.find(w)
                if rv == rw:
                    continue
                bv, bw = birth_vertex[rv], birth_vertex[rw]
                # elder = lower value, earlier in processing order on ties
                older, younger = (bv, bw) if (f[bv], bv) <= (f[bw], bw) else (bw, bv)
                if f[v] > f[younger]:
                    pairs.append((float(f[younger]), float(f[v])))
                uf.union(rv, rw)
                birth_vertex[uf.find(v)] = older
    pairs.append((float(f[order[0]]), math.inf))
    return PersistenceDiagram(pairs, 0).sorted()


def load_point_cloud(path) -> np.ndarray:
    """Read whitespace-separated coordinates, one point per line."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(t) for t in line.split()])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: cannot parse coordinates") from None
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(f"{path}: line {lineno}: inconsistent dimension")
    return _as_cloud(rows)


def save_point_cloud(path, cloud) -> None:
    pts = _as_cloud(cloud)
    lines = [" ".join(repr(float(x)) for x in row) for row in pts.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
