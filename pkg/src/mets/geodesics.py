"""k-nearest-neighbor graphs and squared geodesic distances.

Geodesics are approximated as shortest paths on a symmetrized kNN graph whose
edge weights are Euclidean distances. Path lengths are kept unsquared until
the final matrix is assembled.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial.distance import cdist

__all__ = [
    "NeighborGraph",
    "GeodesicField",
    "DisconnectedGraphError",
    "DuplicatePointWarning",
    "as_points",
    "knn_indices",
    "build_knn_graph",
    "shortest_path_lengths",
    "shortest_path_distances",
    "extend_distances",
]

# weight substituted for zero-length edges between duplicate points
_TINY = np.finfo(float).eps


class DisconnectedGraphError(ValueError):
    """The neighborhood graph has more than one connected component."""

    def __init__(self, component_sizes):
        self.component_sizes = sorted((int(s) for s in component_sizes), reverse=True)
        super().__init__(
            "neighborhood graph is disconnected: %d components of sizes %s; "
            "increase k" % (len(self.component_sizes), self.component_sizes)
        )


class DuplicatePointWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NeighborGraph:
    """Undirected weighted graph over ``n`` points.

    ``weights`` is a symmetric CSR matrix with strictly positive stored
    entries and no diagonal.
    """

    weights: sparse.csr_matrix

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def edges(self):
        """Sorted list of ``(i, j, w)`` with ``i < j``."""
        coo = sparse.triu(self.weights, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[t]), int(coo.col[t]), float(coo.data[t])) for t in order]


@dataclass(frozen=True)
class GeodesicField:
    """Unsquared geodesic lengths; squared views are derived on access."""

    lengths_n: np.ndarray
    lengths_x: np.ndarray | None = None

    @property
    def delta_n(self) -> np.ndarray:
        return self.lengths_n**2

    @property
    def delta_x(self) -> np.ndarray | None:
        return None if self.lengths_x is None else self.lengths_x**2


def as_points(points, name="points", min_rows=1) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("%s must be a 2-D array, got shape %s" % (name, arr.shape))
    if arr.shape[0] < min_rows or arr.shape[1] < 1:
        raise ValueError("%s needs at least %d rows and 1 column, got %s"
                         % (name, min_rows, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise ValueError("%s contains non-finite values" % name)
    return arr


def knn_indices(dist: np.ndarray, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices of the ``k`` smallest entries of each row of ``dist``.

    Ties are broken by column index (stable sort). With ``exclude_self`` the
    diagonal of a square matrix is skipped.
    """
    d = np.array(dist, dtype=float, copy=True)
    if exclude_self:
        np.fill_diagonal(d, np.inf)
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def build_knn_graph(data, k: int = 20) -> NeighborGraph:
    """Union-symmetrized kNN graph with Euclidean edge weights.

    Edge ``(i, j)`` exists when either point is among the other's ``k``
    nearest neighbors. Zero-length edges (duplicate points) are replaced by
    machine epsilon and a :class:`DuplicatePointWarning` is issued.
    """
    u = as_points(data, "data", min_rows=2)
    n = u.shape[0]
    k = int(k)
    if not 1 <= k < n:
        raise ValueError("k must satisfy 1 <= k < n (k=%d, n=%d)" % (k, n))

    dist = cdist(u, u)
    nbrs = knn_indices(dist, k, exclude_self=True)
    rows = np.repeat(np.arange(n), k)
    cols = nbrs.ravel()
    w = dist[rows, cols]
    n_dup = int(np.count_nonzero(w == 0.0))
    if n_dup:
        warnings.warn("%d zero-length kNN edges between duplicate points; "
                      "using weight %g" % (n_dup, _TINY), DuplicatePointWarning,
                      stacklevel=2)
        w = np.where(w == 0.0, _TINY, w)
    directed = sparse.coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()
    return NeighborGraph(directed.maximum(directed.T).tocsr())


def shortest_path_lengths(graph: NeighborGraph) -> np.ndarray:
    """All-pairs (unsquared) shortest path lengths via Dijkstra."""
    n_comp, labels = csgraph.connected_components(graph.weights, directed=False)
    if n_comp > 1:
        raise DisconnectedGraphError(np.bincount(labels))
    lengths = csgraph.dijkstra(graph.weights, directed=False)
    # Dijkstra sums edges in path order, so i->j and j->i may differ by an ulp.
    lengths = np.minimum(lengths, lengths.T)
    np.fill_diagonal(lengths, 0.0)
    return lengths


def shortest_path_distances(graph: NeighborGraph) -> GeodesicField:
    """Squared geodesic distance field over the training points."""
    return GeodesicField(shortest_path_lengths(graph))


def extend_distances(data, graph: NeighborGraph, delta_n, oos, k: int = 20) -> GeodesicField:
    """Squared geodesic distances from training points to out-of-sample points.

    Each out-of-sample point is linked to its ``k`` nearest training points
    only; paths then continue through the training graph. Out-of-sample
    points never link to each other.

    Parameters
    ----------
    data : (n, d) array
        Training points used to build ``graph``.
    graph : NeighborGraph
        Training neighborhood graph (only its size is checked here).
    delta_n : (n, n) array or GeodesicField
        Squared training geodesics, as from :func:`shortest_path_distances`.
        Passing the field itself avoids a square root round trip.
    oos : (N, d) array or TimeSeriesSet
        Out-of-sample points.
    k : int
        Number of training neighbors linked to each out-of-sample point.

    Returns
    -------
    GeodesicField
        ``lengths_x`` is ``(n, N)``; ``delta_x`` gives the squared values.
    """
    u = as_points(data, "data", min_rows=2)
    y = as_points(getattr(oos, "points", oos), "oos")
    n = u.shape[0]
    if y.shape[1] != u.shape[1]:
        raise ValueError("out-of-sample dimension %d != training dimension %d"
                         % (y.shape[1], u.shape[1]))
    if graph.n != n:
        raise ValueError("graph has %d nodes but data has %d rows" % (graph.n, n))
    if isinstance(delta_n, GeodesicField):
        lengths_n = delta_n.lengths_n
    else:
        lengths_n = np.sqrt(np.asarray(delta_n, dtype=float))
    if lengths_n.shape != (n, n):
        raise ValueError("delta_n must be %dx%d, got %s" % (n, n, lengths_n.shape))
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError("k must satisfy 1 <= k <= n (k=%d, n=%d)" % (k, n))

    link = cdist(y, u)                      # (N, n)
    nbrs = knn_indices(link, k)             # (N, k)
    lengths_x = np.empty((n, y.shape[0]))
    for j in range(y.shape[0]):
        t = nbrs[j]
        # (k, n): link length to t plus training geodesic from t
        lengths_x[:, j] = (link[j, t][:, None] + lengths_n[t]).min(axis=0)
    return GeodesicField(lengths_n, lengths_x)
