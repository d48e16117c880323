"""Comparison methods: ST-Isomap with out-of-sample extension, and MBMS denoising."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .extension import TimeSeriesSet, isomap_oose
from .geodesics import (NeighborGraph, as_points, build_knn_graph, extend_distances,
                        knn_indices, shortest_path_distances)
from .isomap import isomap_embed

__all__ = [
    "StIsomapParams",
    "MbmsParams",
    "ST_EPSILON_GRID",
    "ST_CTN_GRID",
    "MBMS_SIGMA_GRID",
    "ctn_sets",
    "st_isomap_graph",
    "st_isomap_oose",
    "mbms_denoise",
]

log = logging.getLogger(__name__)

ST_EPSILON_GRID = (1, 2, 3, 5)
ST_CTN_GRID = (1.0, 2.0, 5.0, 10.0)
MBMS_SIGMA_GRID = tuple(float(s) for s in range(1, 21))


@dataclass(frozen=True)
class StIsomapParams:
    c_atn: float = 1.0
    c_ctn: float = 1.0
    epsilon: int = 1
    k: int = 20

    def __post_init__(self):
        if self.c_atn < 1 or self.c_ctn < 1:
            raise ValueError("ST-Isomap scaling factors must be >= 1")
        if int(self.epsilon) < 1 or int(self.k) < 1:
            raise ValueError("epsilon and k must be positive")


@dataclass(frozen=True)
class MbmsParams:
    sigma: float = 1.0
    local_dim: int = 1
    k: int = 20
    iterations: int = 3

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if int(self.iterations) < 1:
            raise ValueError("iterations must be >= 1")
        if int(self.local_dim) < 1 or int(self.k) < 1:
            raise ValueError("local_dim and k must be positive")


def ctn_sets(dist: np.ndarray, nbrs: np.ndarray, epsilon: int) -> list[np.ndarray]:
    """Common temporal neighbors of each point.

    ``dist`` is the full pairwise distance matrix in temporal order and
    ``nbrs[i]`` the spatial kNN of point ``i``. A neighbor is common when it is
    no farther than the closest trivial match (index within ``epsilon``).
    """
    n = dist.shape[0]
    out = []
    for i in range(n):
        lo, hi = max(0, i - epsilon), min(n, i + epsilon + 1)
        trivial = [j for j in range(lo, hi) if j != i]
        nearest = dist[i, trivial].min()
        out.append(nbrs[i][dist[i, nbrs[i]] <= nearest])
    return out


def st_isomap_graph(data, timestamps, p: StIsomapParams) -> NeighborGraph:
    """ST-Isomap neighborhood graph.

    Starts from the union kNN graph, adds edges between points whose
    timestamps differ by one (weight divided by ``c_atn``), then divides the
    weight of every common-temporal-neighbor edge by ``c_ctn``. Weights only
    ever shrink. A pair that is both adjacent and common gets both factors.
    """
    u = as_points(data, "data", min_rows=2)
    n = u.shape[0]
    ts = np.asarray(timestamps)
    if ts.shape != (n,):
        raise ValueError("need one timestamp per training point")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("timestamps must be strictly increasing")

    base = build_knn_graph(u, p.k)
    dist = cdist(u, u)
    w = base.weights.tolil()

    # consecutive timestamps are the only candidates for a unit step
    for i in np.flatnonzero(np.diff(ts) == 1):
        j = i + 1
        d = max(dist[i, j], np.finfo(float).eps) / p.c_atn
        w[i, j] = d
        w[j, i] = d

    if p.c_ctn != 1:
        nbrs = knn_indices(dist, p.k, exclude_self=True)
        scaled = set()
        for i, ctn in enumerate(ctn_sets(dist, nbrs, int(p.epsilon))):
            for j in ctn:
                pair = (min(i, int(j)), max(i, int(j)))
                if pair in scaled:
                    continue
                scaled.add(pair)
                d = w[pair[0], pair[1]] / p.c_ctn
                w[pair[0], pair[1]] = d
                w[pair[1], pair[0]] = d
    return NeighborGraph(sparse.csr_matrix(w))


def st_isomap_oose(data, timestamps, oos, p: StIsomapParams, m: int = 2):
    """Train ST-Isomap and extend it to ``oos`` with the plain Isomap formula.

    Out-of-sample points link to their ``p.k`` nearest training points
    exactly as in plain extension; the temporal graph surgery applies only
    to the training graph.

    Returns
    -------
    clean_embedding : (m, n) array
    extension : (m, N) array
    """
    graph = st_isomap_graph(data, timestamps, p)
    field = shortest_path_distances(graph)
    emb = isomap_embed(field.delta_n, m)
    y = oos.points if isinstance(oos, TimeSeriesSet) else oos
    ext = extend_distances(data, graph, field, y, p.k)
    return emb.l_matrix, isomap_oose(emb, field.delta_n, ext.delta_x)


def _tangent_basis(nbhd: np.ndarray, local_dim: int):
    centered = nbhd - nbhd.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(centered.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > tol))
    if rank < local_dim:
        return None
    return vt[:local_dim].T


def mbms_denoise(points, p: MbmsParams) -> np.ndarray:
    """Manifold blurring mean shift.

    Each round moves every point by the component of its Gaussian mean-shift
    step (over itself and its ``k`` nearest neighbors) that is orthogonal to
    the top ``local_dim`` principal directions of that neighborhood. All
    points in a round read the previous iterate.
    """
    x = as_points(points, "points", min_rows=2).copy()
    n, dim = x.shape
    if not p.k < n:
        raise ValueError("k must be smaller than the number of points")
    if not p.local_dim < dim:
        raise ValueError("local_dim must be smaller than the ambient dimension")

    for it in range(int(p.iterations)):
        dist = cdist(x, x)
        nbrs = knn_indices(dist, p.k, exclude_self=True)
        new = x.copy()
        skipped = 0
        for i in range(n):
            idx = np.concatenate(([i], nbrs[i]))
            nbhd = x[idx]
            wts = np.exp(-dist[i, idx] ** 2 / (2.0 * p.sigma**2))
            total = wts.sum()
            if total <= 0.0:
                # kernel underflow; the nearest point dominates
                wts = (dist[i, idx] == dist[i, idx].min()).astype(float)
                total = wts.sum()
            shift = wts @ nbhd / total - x[i]
            basis = _tangent_basis(nbhd, p.local_dim)
            if basis is None:
                skipped += 1
            else:
                shift = shift - basis @ (basis.T @ shift)
            new[i] = x[i] + shift
        if skipped:
            log.warning("MBMS round %d: %d neighborhoods had rank < %d, projection skipped",
                        it + 1, skipped, p.local_dim)
        x = new
    return x
