"""
Finite-width shallow NTK against its bounds
===========================================

We build the NTK Gram matrix of a one-hidden-layer ReLU network at the width
the bound asks for, split it into its hidden-layer and output-layer blocks and
place its smallest eigenvalue between the lower scale and ``delta'``. The
widths involved can reach millions of units, so the weights are streamed.
"""

import numpy as np

from ntk_spectrum import Activation, sample_uniform_sphere
from ntk_spectrum.bounds import shallow_lambda_lower, width_requirement_shallow
from ntk_spectrum.kernel_limit import limiting_kernel_matrix
from ntk_spectrum.ntk import shallow_ntk_streamed
from ntk_spectrum.sphere import operator_norm

data = sample_uniform_sphere(3, 8, seed=11)
sep = data.separation
d1 = width_requirement_shallow(data.n, data.dim, sep.delta, operator_norm(data) ** 2, 0.1)
print(f"required width {d1}")

parts = shallow_ntk_streamed(data.dim, d1, seed=5, data=data)
lam = parts.K.eigen_report().lambda_min
print(f"lambda_min(K) = {lam:.4e}")
print(f"lower scale   = {shallow_lambda_lower(data.dim, sep.delta):.4e}")
print(f"delta'        = {sep.delta_prime:.4e}")

# At this width both blocks sit close to their infinite-width limits
X = data.points
lim1 = limiting_kernel_matrix(Activation.RELU_DERIVATIVE, data).entries * (X.T @ X)
lim2 = limiting_kernel_matrix(Activation.SCALED_RELU, data).entries
print(f"max |K1 - limit| = {np.abs(parts.K1.entries - lim1).max():.2e}")
print(f"max |K2 - limit| = {np.abs(parts.K2.entries - lim2).max():.2e}")
