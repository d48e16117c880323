# %% [markdown]
# # Isomap and plain out-of-sample extension
#
# Fit Isomap on clean blob images, then place the test sequence into the
# learned 2-D space without refitting.

# %%
import numpy as np
from scipy.spatial.distance import pdist

from mets import extend_distances, fit_isomap, isomap_oose
from mets.dataio import SyntheticSpec, generate_synthetic

data = generate_synthetic(SyntheticSpec(seed=42))
graph, field, emb = fit_isomap(data.training, k=20, m=2)
print("training images:", data.training.shape, "graph edges:", len(graph.edges()))
print("top eigenvalues:", np.round(emb.eigenvalues, 3))

# %% [markdown]
# The embedding should be an isometric copy of the blob-position grid.

# %%
corr = np.corrcoef(pdist(emb.l_matrix.T), pdist(data.training_params))[0, 1]
print("distance correlation with true parameters: %.6f" % corr)

# %% [markdown]
# Extending the clean test sequence.

# %%
dx = extend_distances(data.training, graph, field, data.test, k=20).delta_x
x = isomap_oose(emb, field.delta_n, dx)
corr = np.corrcoef(pdist(x.T), pdist(data.test_params))[0, 1]
print("test embedding", x.shape, "distance correlation: %.6f" % corr)
