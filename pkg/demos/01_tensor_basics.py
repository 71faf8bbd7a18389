# Walk through the tensor primitives everything else is built on:
# unfolding, folding, mode products, Khatri-Rao columns and rank-one
# outer products.

import numpy as np

from tensortree import fold, frobenius_norm, khatri_rao, mode_product, outer, unfold

# A small 3-way tensor in row-major order. Think of mode 0 as
# "observations" and the other modes as feature axes.
t = np.arange(24.0).reshape(2, 3, 4)
print("tensor shape:", t.shape)

# Unfolding mode 0 lays each observation's slice out as a row.
m0 = unfold(t, 0)
print("mode-0 unfolding shape:", m0.shape)
print(m0)

# fold() is the exact inverse for every mode.
for mode in range(t.ndim):
    assert np.array_equal(fold(unfold(t, mode), mode, t.shape), t)
print("fold(unfold(t, mode)) == t for all modes")

# A mode product transforms one axis by a matrix; transforming mode 1
# by a 2x3 matrix shrinks that axis from 3 to 2.
w = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
print("mode product result shape:", mode_product(t, w, 1).shape)

# Khatri-Rao: column-wise Kronecker products. This is the workhorse of
# the CP least-squares updates.
a = np.array([[1.0, 2.0], [3.0, 4.0]])
b = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
print("khatri_rao shape:", khatri_rao(a, b).shape)  # (2*3, 2)

# Rank-one tensors from vectors, and the Frobenius norm.
r1 = outer([np.array([1.0, 2.0]), np.array([1.0, -1.0]), np.array([0.5, 0.5])])
print("rank-one tensor shape:", r1.shape, "norm:", frobenius_norm(r1))
