"""Out-of-sample extension of Isomap embeddings for noisy time series."""

from .geodesics import (DisconnectedGraphError, GeodesicField, NeighborGraph,
                        build_knn_graph, extend_distances, shortest_path_distances)
from .isomap import (InsufficientSpectrumError, TrainedEmbedding, center_squared_distances,
                     fit_isomap, isomap_embed, pseudo_inverse_transpose)
from .extension import (ExtensionResult, SingularSystemError, TemporalWeighting,
                        TimeSeriesSet, compactness, gradient_residual, isomap_oose,
                        mets_solve, temporal_laplacian, temporal_weight)

__version__ = "0.1.0"
