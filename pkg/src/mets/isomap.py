"""Classical MDS on squared geodesic distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geodesics import build_knn_graph, shortest_path_distances

__all__ = [
    "TrainedEmbedding",
    "InsufficientSpectrumError",
    "center_squared_distances",
    "isomap_embed",
    "pseudo_inverse_transpose",
    "fit_isomap",
]


class InsufficientSpectrumError(ValueError):
    def __init__(self, m, n_positive):
        self.m = m
        self.n_positive = n_positive
        super().__init__("requested m=%d dimensions but the centered distance "
                         "matrix has only %d positive eigenvalues" % (m, n_positive))


@dataclass(frozen=True)
class TrainedEmbedding:
    """Top-``m`` MDS factorization of the centered squared distances.

    ``l_matrix`` is ``(m, n)``; row ``i`` equals ``sqrt(eigenvalues[i]) *
    eigenvectors[:, i]``. Eigenvalues are sorted in decreasing order.
    """

    l_matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def m(self) -> int:
        return self.l_matrix.shape[0]

    @property
    def n(self) -> int:
        return self.l_matrix.shape[1]


def center_squared_distances(delta_n) -> np.ndarray:
    """Double centering ``-1/2 H D H`` with ``H = I - 11^T/n``."""
    d = np.asarray(delta_n, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("delta_n must be square, got shape %s" % (d.shape,))
    # H D H without forming H
    c = d - d.mean(axis=0, keepdims=True)
    c = c - c.mean(axis=1, keepdims=True)
    c = -0.5 * c
    return 0.5 * (c + c.T)


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    # first entry that is clearly nonzero gets a positive sign
    tol = 1e-12 * np.abs(vecs).max(axis=0)
    out = vecs.copy()
    for i in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, i]) > tol[i])
        if nz.size and vecs[nz[0], i] < 0:
            out[:, i] = -out[:, i]
    return out


def isomap_embed(delta_n, m: int = 2) -> TrainedEmbedding:
    """Embed training points from their squared geodesic distances.

    Parameters
    ----------
    delta_n : (n, n) array
        Squared geodesic distances.
    m : int
        Target dimension; must not exceed the number of strictly positive
        eigenvalues of the centered matrix.

    Returns
    -------
    TrainedEmbedding

    Raises
    ------
    InsufficientSpectrumError
        If fewer than ``m`` eigenvalues are positive. Negative eigenvalues
        are never clamped into the embedding.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be positive, got %d" % m)
    centered = center_squared_distances(delta_n)
    evals, evecs = np.linalg.eigh(centered)
    order = np.argsort(evals, kind="stable")[::-1]
    evals, evecs = evals[order], evecs[:, order]

    scale = max(np.abs(evals).max(), np.finfo(float).tiny)
    tol = centered.shape[0] * np.finfo(float).eps * scale
    n_positive = int(np.count_nonzero(evals > tol))
    if n_positive < m:
        raise InsufficientSpectrumError(m, n_positive)

    evals = evals[:m]
    evecs = _canonical_signs(evecs[:, :m])
    l_matrix = np.sqrt(evals)[:, None] * evecs.T
    return TrainedEmbedding(l_matrix, evals, evecs)


def pseudo_inverse_transpose(emb: TrainedEmbedding) -> np.ndarray:
    """``(L^T)^+`` with rows ``v_i / sqrt(lambda_i)``."""
    return emb.eigenvectors.T / np.sqrt(emb.eigenvalues)[:, None]


def fit_isomap(data, k: int = 20, m: int = 2):
    """Graph, geodesic field and embedding for a training set in one call."""
    graph = build_knn_graph(data, k)
    field = shortest_path_distances(graph)
    return graph, field, isomap_embed(field.delta_n, m)
