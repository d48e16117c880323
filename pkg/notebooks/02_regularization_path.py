# %% [markdown]
# # Trading fit against temporal smoothness
#
# Corrupt the test sequence with Gaussian noise and sweep the
# regularization weight. Compactness should fall and the fit residual
# rise as the weight grows; the error against the clean extension dips
# before oversmoothing takes over.

# %%
import numpy as np

from mets import (TemporalWeighting, extend_distances, fit_isomap, isomap_oose, mets_solve,
                  temporal_laplacian)
from mets.corruption import NoiseSpec, corrupt_dataset
from mets.dataio import SyntheticSpec, generate_synthetic
from mets.evaluation import aligned_error

data = generate_synthetic(SyntheticSpec(seed=42))
graph, field, emb = fit_isomap(data.training, k=20, m=2)
clean = isomap_oose(emb, field.delta_n,
                    extend_distances(data.training, graph, field, data.test, 20).delta_x)
noisy = corrupt_dataset(data.test.points, (24, 24), NoiseSpec("gaussian", 0.3, seed=1))
dx = extend_distances(data.training, graph, field, noisy, 20).delta_x
a = temporal_laplacian(data.test.N, data.test.timestamps, TemporalWeighting(K=10))

# %%
print("%10s %14s %14s %10s" % ("lambda", "compactness", "fit residual", "error"))
for lam in [0.0] + list(np.logspace(-1, 5, 7)):
    r = mets_solve(emb, field.delta_n, dx, a, lam)
    print("%10.3g %14.4g %14.6g %10.4f"
          % (lam, r.compactness, r.fit_residual, aligned_error(clean, r.x_matrix)))
