# Fit CP and Tucker decompositions with the alternating solvers and
# watch the recorded error sequences descend.

import numpy as np

from tensortree import AlsConfig, approximation_error, cp_als, tucker_als
from tensortree.tensor_ops import frobenius_norm, outer

rng = np.random.default_rng(0)

# Build a tensor with known CP rank 3, then recover it.
shape, rank = (15, 6, 5), 3
t = np.zeros(shape)
factors = [rng.normal(size=(d, rank)) for d in shape]
for r in range(rank):
    t += outer([f[:, r] for f in factors])

decomp, info = cp_als(t, rank, AlsConfig(max_iterations=100, rel_tolerance=1e-12))
print("CP converged:", info.converged, "after", len(info.errors), "iterations")
print("first errors:", [f"{e:.2e}" for e in info.errors[:5]])
print("relative error:", np.sqrt(approximation_error(t, decomp)) / frobenius_norm(t))
print("weights:", np.round(decomp.weights, 3))

# A noisy tensor is only approximately low-rank: the error floors out
# at the noise level instead of machine precision.
noisy = t + 0.05 * rng.normal(size=shape)
_, info_noisy = cp_als(noisy, rank)
print("noisy fit converged:", info_noisy.converged, "final error:", f"{info_noisy.errors[-1]:.3f}")

# Tucker via orthogonal iteration. Full ranks are lossless; truncated
# ranks compress.
x = rng.normal(size=(10, 8, 6))
full, info_full = tucker_als(x, (10, 8, 6))
small, info_small = tucker_als(x, (4, 3, 2))
print("tucker full-rank error:", f"{info_full.errors[-1]:.2e}")
print("tucker (4,3,2) error:", f"{info_small.errors[-1]:.3f}")
print("tucker factors orthonormal:",
      all(np.allclose(f.T @ f, np.eye(f.shape[1]), atol=1e-10) for f in small.factors))
