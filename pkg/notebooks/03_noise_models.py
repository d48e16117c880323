# %% [markdown]
# # The three corruption models
#
# Each model is seeded, keeps pixel values in [0, 1] and leaves the
# image shape alone.

# %%
import numpy as np

from mets.corruption import (gaussian_noise, motion_blur, motion_blur_kernel, salt_pepper,
                             sample_blur_length)
from mets.dataio import SyntheticSpec, render_blobs

img = render_blobs([[0.5, 0.5]], SyntheticSpec())[0].reshape(24, 24)

# %%
for name, out in [("salt-pepper 0.4", salt_pepper(img, 0.4, 0)),
                  ("gaussian 0.3", gaussian_noise(img, 0.3, 0)),
                  ("motion-blur 20", motion_blur(img, 20.0, 0))]:
    print("%-16s changed %.2f of pixels, mean abs change %.3f, range [%.2f, %.2f]"
          % (name, np.mean(out != img), np.abs(out - img).mean(), out.min(), out.max()))

# %% [markdown]
# Blur lengths are exponential with mean beta; kernels are unit-mass lines.

# %%
lengths = sample_blur_length(20.0, np.random.default_rng(0), size=10_000)
print("mean blur length %.2f" % lengths.mean())
k = motion_blur_kernel(7.0, 45.0)
print("7 px kernel at 45 degrees, sum %.15f" % k.sum())
print(np.round(k, 3))
