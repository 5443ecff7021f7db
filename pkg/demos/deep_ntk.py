"""
Deep NTK through its layer decomposition
========================================

The NTK of a deep ReLU network is a sum over layers of Hadamard products of a
feature Gram matrix and a backpropagation Gram matrix. We check that sum
against a finite-difference Jacobian and look at how the feature and
backpropagation norms scale with the widths.
"""

import numpy as np

from ntk_spectrum import GeneralPositionError, sample_uniform_sphere
from ntk_spectrum.ntk import (
    backprop_norm_profile, backprop_scale, deep_ntk_decomposed, deep_ntk_fd,
    feature_norm_profile, init_deep,
)

data = sample_uniform_sphere(3, 4, seed=0)
for seed in range(20):
    p = init_deep([3, 8, 6], seed)
    try:
        fd = deep_ntk_fd(p, data)
        break
    except GeneralPositionError as err:
        # a pre-activation sits too close to the kink; draw new weights
        print(f"seed {seed}: {err}")
K = deep_ntk_decomposed(p, data)
rel = np.linalg.norm(K.entries - fd.entries) / np.linalg.norm(K.entries)
print(f"decomposition vs finite differences: relative error {rel:.1e}")
print(f"lambda_min = {K.eigen_report().lambda_min:.4f}")

# Normalized feature norms hover around 1, backprop norms around their scales
widths = (256, 128, 64)
# x gets its own seed: sharing one with the weights would correlate W_1 with x
x = sample_uniform_sphere(256, 1, seed=1000).points[:, 0]
for seed in range(3):
    p = init_deep(widths, seed)
    bp = backprop_norm_profile(p, x)
    scales = np.array([backprop_scale(p.widths, l) for l in (1, 2)])
    print(f"seed {seed}: features {np.round(feature_norm_profile(p, x), 3)}, "
          f"backprop {np.round(bp.sw / scales, 3)}")
