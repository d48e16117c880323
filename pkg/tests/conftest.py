import heapq

import numpy as np
import pytest

from mets.extension import TimeSeriesSet

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------- oracles

def floyd_warshall(weights):
    """Dense all-pairs shortest paths; ``weights`` is a dense matrix with 0 = no edge."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    d = np.where(w > 0, w, np.inf)
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def dijkstra_lists(adj, source):
    """Textbook heap Dijkstra on ``adj[u] = [(v, w), ...]``."""
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done = set()
    while heap:
        du, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj[u]:
            nd = du + w
            if nd < dist.get(v, np.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def augmented_graph_distances(train, test, train_weights, k):
    """Unsquared train->test geodesics by Dijkstra over an augmented graph.

    Each test point is added on its own as node ``n``, linked to its ``k``
    nearest training points only, so no path passes through another test point.
    """
    n = train.shape[0]
    w = np.asarray(train_weights)
    out = np.empty((n, test.shape[0]))
    for j in range(test.shape[0]):
        adj = {u: [(v, w[u, v]) for v in range(n) if w[u, v] > 0] for u in range(n)}
        adj[n] = []
        d = np.sqrt(((train - test[j]) ** 2).sum(axis=1))
        for t in np.argsort(d, kind="stable")[:k]:
            adj[n].append((int(t), d[t]))
            adj[int(t)].append((n, d[t]))
        dist = dijkstra_lists(adj, n)
        out[:, j] = [dist[i] for i in range(n)]
    return out


def laplacian_by_loops(timestamps, K, weight):
    """Literal double loop summing weighted B_ij matrices."""
    N = len(timestamps)
    a = np.zeros((N, N))
    for i in range(N):
        lo, hi = max(0, i - K // 2), min(N - 1, i + K // 2)
        for j in range(lo, hi + 1):
            if j == i:
                continue
            b = np.zeros((N, N))
            b[i, i] = b[j, j] = 1.0
            b[i, j] = b[j, i] = -1.0
            a += weight(abs(timestamps[i] - timestamps[j])) * b
    return a


# ---------------------------------------------------------------- data

def manifold_instance(rng, n, N, d=6, noise=0.0):
    """Points on a random smooth 2-D sheet in ``d`` dimensions.

    Returns training points and an ordered test sequence along a smooth
    curve on the sheet, optionally with additive ambient noise.
    """
    mix = rng.standard_normal((4, d))

    def lift(params):
        s, t = params[:, 0], params[:, 1]
        feats = np.column_stack([s, t, np.sin(1.5 * s), np.cos(1.2 * t) * 0.5])
        return feats @ mix

    train_params = rng.uniform(0.0, 3.0, size=(n, 2))
    u = np.linspace(0.0, 2 * np.pi, N, endpoint=False)
    test_params = np.column_stack([1.5 + 0.9 * np.cos(u), 1.5 + 0.9 * np.sin(2 * u)])
    test = lift(test_params) + noise * rng.standard_normal((N, d))
    return lift(train_params), TimeSeriesSet(test, np.arange(N))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
