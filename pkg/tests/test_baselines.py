import logging

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from mets.baselines import (MbmsParams, StIsomapParams, ctn_sets, mbms_denoise,
                            st_isomap_graph, st_isomap_oose)
from mets.extension import TimeSeriesSet, isomap_oose
from mets.geodesics import build_knn_graph, extend_distances, knn_indices, shortest_path_distances
from mets.isomap import isomap_embed

from conftest import floyd_warshall, manifold_instance

# six points on a line, in temporal order
SIX = np.array([[0.0], [0.5], [3.0], [3.2], [1.0], [6.0]])


def test_ctn_hand_trace():
    dist = cdist(SIX, SIX)
    nbrs = knn_indices(dist, 2, exclude_self=True)
    got = [sorted(int(j) for j in c) for c in ctn_sets(dist, nbrs, 1)]
    assert got == [[1], [0, 4], [3], [2], [0, 1], [2, 3]]


def test_st_graph_hand_trace():
    g = st_isomap_graph(SIX, np.arange(6), StIsomapParams(c_atn=1.0, c_ctn=2.0, epsilon=1, k=2))
    want = {(0, 1): 0.25, (0, 4): 0.5, (1, 4): 0.25, (2, 3): 0.1, (2, 4): 2.0,
            (3, 4): 2.2, (2, 5): 1.5, (3, 5): 1.4, (1, 2): 2.5, (4, 5): 5.0}
    got = {(i, j): w for i, j, w in g.edges()}
    assert got.keys() == want.keys()
    for key, w in want.items():
        assert got[key] == pytest.approx(w, rel=1e-12)


def test_atn_scaling():
    g = st_isomap_graph(SIX, np.arange(6), StIsomapParams(c_atn=4.0, c_ctn=1.0, epsilon=1, k=2))
    got = {(i, j): w for i, j, w in g.edges()}
    assert got[(1, 2)] == pytest.approx(2.5 / 4)
    assert got[(4, 5)] == pytest.approx(5.0 / 4)
    assert got[(0, 4)] == pytest.approx(1.0)


def test_unit_factors_reduce_to_isomap_graph():
    # consecutive points are always kNN of each other on a fine sampled curve
    t = np.linspace(0, 3, 40)
    pts = np.column_stack([t, np.sin(t)])
    st = st_isomap_graph(pts, np.arange(40), StIsomapParams(k=4))
    plain = build_knn_graph(pts, k=4)
    np.testing.assert_array_equal(st.weights.toarray(), plain.weights.toarray())


def test_weights_never_increase(rng):
    pts = rng.standard_normal((30, 3))
    plain = build_knn_graph(pts, k=5).weights.toarray()
    st = st_isomap_graph(pts, np.arange(30),
                         StIsomapParams(c_atn=2.0, c_ctn=3.0, epsilon=2, k=5)).weights.toarray()
    d = cdist(pts, pts)
    mask = st > 0
    assert np.all(st[mask] <= d[mask] + 1e-15)
    assert np.all(st[plain > 0] <= plain[plain > 0])


def test_ctn_subset_of_knn(rng):
    pts = rng.standard_normal((25, 2))
    dist = cdist(pts, pts)
    nbrs = knn_indices(dist, 4, exclude_self=True)
    for i, c in enumerate(ctn_sets(dist, nbrs, 3)):
        assert set(c.tolist()) <= set(nbrs[i].tolist())


def test_st_oose_degenerates_to_isomap():
    t = np.linspace(0, 3, 40)
    train = np.column_stack([t, np.sin(t), np.cos(2 * t)])
    test = train[::5] + 0.01
    p = StIsomapParams(k=5)
    l_st, x_st = st_isomap_oose(train, np.arange(40), TimeSeriesSet.uniform(test), p, 2)
    g = build_knn_graph(train, 5)
    field = shortest_path_distances(g)
    emb = isomap_embed(field.delta_n, 2)
    x = isomap_oose(emb, field.delta_n, extend_distances(train, g, field, test, 5).delta_x)
    np.testing.assert_allclose(l_st, emb.l_matrix, atol=1e-10)
    np.testing.assert_allclose(x_st, x, atol=1e-10)


def _monolithic_st_oose(train, test, k, eps, c_atn, c_ctn, m):
    """Independent end-to-end ST-Isomap extension with dense linear algebra."""
    n = train.shape[0]
    d = np.sqrt(((train[:, None, :] - train[None, :, :]) ** 2).sum(-1))
    w = np.zeros((n, n))
    order = np.argsort(d + np.diag(np.full(n, np.inf)), axis=1, kind="stable")[:, :k]
    for i in range(n):
        for j in order[i]:
            w[i, j] = w[j, i] = d[i, j]
    for i in range(n - 1):
        w[i, i + 1] = w[i + 1, i] = d[i, i + 1] / c_atn
    done = set()
    for i in range(n):
        window = [j for j in range(max(0, i - eps), min(n, i + eps + 1)) if j != i]
        limit = min(d[i, j] for j in window)
        for j in order[i]:
            pair = (min(i, j), max(i, j))
            if d[i, j] <= limit and pair not in done:
                done.add(pair)
                w[i, j] /= c_ctn
                w[j, i] = w[i, j]
    geo = floyd_warshall(w)
    sq = geo**2
    h = np.eye(n) - 1.0 / n
    vals, vecs = np.linalg.eigh(-0.5 * h @ sq @ h)
    top = np.argsort(vals)[::-1][:m]
    vals, vecs = vals[top], vecs[:, top]
    link = np.sqrt(((test[:, None, :] - train[None, :, :]) ** 2).sum(-1))
    dx = np.empty((n, test.shape[0]))
    for j in range(test.shape[0]):
        near = np.argsort(link[j], kind="stable")[:k]
        dx[:, j] = np.min(link[j, near][:, None] + geo[near], axis=0) ** 2
    x = 0.5 * (vecs.T / np.sqrt(vals)[:, None]) @ (sq.mean(axis=1)[:, None] - dx)
    return vecs * np.sqrt(vals), x


def test_st_oose_matches_monolithic_oracle():
    rng = np.random.default_rng(11)
    t = np.sort(rng.uniform(0, 4, 30))
    train = np.column_stack([t, np.sin(1.3 * t), 0.3 * np.cos(t)]) + 0.02 * rng.standard_normal((30, 3))
    test = np.column_stack([t[::3], np.sin(1.3 * t[::3]), 0.3 * np.cos(t[::3])]) + 0.05
    p = StIsomapParams(c_atn=1.5, c_ctn=2.0, epsilon=2, k=4)
    l_mat, x = st_isomap_oose(train, np.arange(30), test, p, 2)
    l_oracle, x_oracle = _monolithic_st_oose(train, test, 4, 2, 1.5, 2.0, 2)
    # per-dimension sign is arbitrary in the oracle
    signs = np.sign(np.sum(l_mat * l_oracle.T, axis=1))
    np.testing.assert_allclose(l_mat, signs[:, None] * l_oracle.T, atol=1e-8)
    np.testing.assert_allclose(x, signs[:, None] * x_oracle, atol=1e-8)


class TestMbms:
    def test_identical_points_fixed(self):
        pts = np.tile([1.0, 2.0, 3.0], (10, 1))
        out = mbms_denoise(pts, MbmsParams(sigma=1.0, local_dim=1, k=4))
        np.testing.assert_array_equal(out, pts)

    def test_line_is_fixed(self):
        t = np.linspace(-1, 1, 15)
        pts = np.column_stack([t, 2 * t, -t])
        out = mbms_denoise(pts, MbmsParams(sigma=0.5, local_dim=1, k=5))
        np.testing.assert_allclose(out, pts, atol=1e-10)

    def test_noisy_circle_contracts_to_manifold(self):
        rng = np.random.default_rng(5)
        t = rng.uniform(0, 2 * np.pi, 50)
        clean = np.column_stack([np.cos(t), np.sin(t)])
        pts = clean + 0.05 * rng.standard_normal((50, 2))

        def deviation(x):
            return np.mean(np.abs(np.linalg.norm(x, axis=1) - 1.0))

        # kernel width well below the sampling gap: wider kernels pull
        # points inward across the curvature faster than they remove noise
        devs = [deviation(pts)]
        x = pts
        for _ in range(3):
            x = mbms_denoise(x, MbmsParams(sigma=0.1, local_dim=1, k=4, iterations=1))
            devs.append(deviation(x))
        assert all(b < a for a, b in zip(devs, devs[1:])), devs
        # the three-iteration call is the same as three single rounds
        np.testing.assert_allclose(mbms_denoise(pts, MbmsParams(0.1, 1, 4, 3)), x)

    def test_rank_deficient_neighborhood_logs(self, caplog):
        t = np.linspace(0, 1, 8)
        pts = np.column_stack([t, t, t])
        with caplog.at_level(logging.WARNING, logger="mets.baselines"):
            out = mbms_denoise(pts, MbmsParams(sigma=1.0, local_dim=2, k=3, iterations=1))
        assert "projection skipped" in caplog.text
        assert out.shape == pts.shape

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            MbmsParams(iterations=0)
        with pytest.raises(ValueError):
            mbms_denoise(np.zeros((5, 2)), MbmsParams(local_dim=2, k=2))
        with pytest.raises(ValueError):
            StIsomapParams(c_ctn=0.5)
