import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist, pdist

from mets.geodesics import build_knn_graph, shortest_path_distances
from mets.isomap import (InsufficientSpectrumError, TrainedEmbedding, center_squared_distances,
                         isomap_embed, pseudo_inverse_transpose)

LINE = np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 1.0], [4.0, 1.0, 0.0]])


def test_center_line():
    np.testing.assert_allclose(center_squared_distances(LINE),
                               [[1, 0, -1], [0, 0, 0], [-1, 0, 1]], atol=1e-15)


def test_center_zero():
    assert np.all(center_squared_distances(np.zeros((4, 4))) == 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 30))
def test_centered_rows_sum_to_zero(seed, n):
    pts = np.random.default_rng(seed).standard_normal((n, 3))
    c = center_squared_distances(cdist(pts, pts, "sqeuclidean"))
    np.testing.assert_allclose(c.sum(axis=1), 0, atol=1e-10)
    np.testing.assert_array_equal(c, c.T)


def test_embed_line():
    emb = isomap_embed(LINE, m=1)
    np.testing.assert_allclose(emb.l_matrix, [[1.0, 0.0, -1.0]], atol=1e-12)
    np.testing.assert_allclose(emb.eigenvalues, [2.0])


def test_circle_distances_preserved():
    t = np.linspace(0, 2 * np.pi, 10, endpoint=False)
    pts = np.column_stack([np.cos(t), np.sin(t)])
    field = shortest_path_distances(build_knn_graph(pts, k=9))
    emb = isomap_embed(field.delta_n, m=2)
    np.testing.assert_allclose(pdist(emb.l_matrix.T, "sqeuclidean"),
                               pdist(pts, "sqeuclidean"), atol=1e-8)


def test_embedding_structure(rng):
    pts = rng.standard_normal((40, 4))
    field = shortest_path_distances(build_knn_graph(pts, k=8))
    emb = isomap_embed(field.delta_n, m=3)
    v = emb.eigenvectors
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(emb.l_matrix, np.sqrt(emb.eigenvalues)[:, None] * v.T)
    np.testing.assert_allclose(emb.l_matrix.sum(axis=1), 0, atol=1e-9)
    gram = emb.l_matrix @ emb.l_matrix.T
    np.testing.assert_allclose(gram, np.diag(emb.eigenvalues), atol=1e-8)
    assert np.all(np.diff(emb.eigenvalues) <= 0) and np.all(emb.eigenvalues > 0)
    # canonical sign: first clearly nonzero entry positive
    for i in range(3):
        first = v[np.flatnonzero(np.abs(v[:, i]) > 1e-12)[0], i]
        assert first > 0


def test_reconstruction_residual_is_discarded_spectrum(rng):
    pts = rng.standard_normal((15, 3))
    field = shortest_path_distances(build_knn_graph(pts, k=5))
    centered = center_squared_distances(field.delta_n)
    full = np.sort(np.linalg.eigvalsh(centered))[::-1]
    emb = isomap_embed(field.delta_n, m=2)
    resid = centered - emb.l_matrix.T @ emb.l_matrix
    np.testing.assert_allclose(np.linalg.norm(resid), np.sqrt(np.sum(full[2:] ** 2)), rtol=1e-9)


def test_too_many_dimensions():
    with pytest.raises(InsufficientSpectrumError) as err:
        isomap_embed(LINE, m=2)
    assert err.value.n_positive == 1


def test_pinv_transpose_identity(rng):
    pts = rng.standard_normal((20, 3))
    field = shortest_path_distances(build_knn_graph(pts, k=6))
    emb = isomap_embed(field.delta_n, m=2)
    lp = pseudo_inverse_transpose(emb)
    np.testing.assert_allclose(lp @ emb.l_matrix.T, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(lp, np.linalg.pinv(emb.l_matrix.T), atol=1e-10)


def test_pinv_transpose_formula():
    emb = TrainedEmbedding(np.array([[2.0, 0.0, 0.0]]), np.array([4.0]),
                           np.array([[1.0], [0.0], [0.0]]))
    np.testing.assert_allclose(pseudo_inverse_transpose(emb), [[0.5, 0.0, 0.0]])
