"""Dense multi-way array primitives.

Tensors are plain ``numpy.ndarray`` values in C (row-major) order, 64-bit
floats, with two to four modes.  Wherever a stacked dataset appears, mode
0 is the observation mode.  All operations are pure functions of their
inputs: nothing is mutated, results are freshly allocated, and values can
be shared freely between threads.

Unfolding convention
--------------------
``unfold(t, q)`` maps entry ``(i_0, ..., i_{D-1})`` to row ``i_q`` and the
column obtained by ravelling the remaining indices *in their original
order*, last index fastest (the natural row-major layout).  ``fold``
inverts exactly that layout, and both ALS solvers build their Khatri-Rao
systems against the same convention.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

MAX_MODES = 4


def _as_tensor(t, min_modes: int = 2) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim < min_modes or arr.ndim > MAX_MODES:
        raise ValueError(
            f"expected a tensor with {min_modes}..{MAX_MODES} modes, got shape {arr.shape}"
        )
    return arr


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    return arr


def unfold(tensor, mode: int) -> np.ndarray:
    """Matricize ``tensor`` along ``mode``.

    Parameters
    ----------
    tensor : ndarray
        Input with 2 to 4 modes.
    mode : int
        Mode whose fibers become the rows of the result.

    Returns
    -------
    ndarray
        Matrix of shape ``(tensor.shape[mode], prod(other extents))``;
        columns ravel the remaining modes in original order, last
        fastest.
    """
    t = _as_tensor(tensor)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-mode tensor")
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)


def fold(matrix, mode: int, shape: Sequence[int]) -> np.ndarray:
    """Invert :func:`unfold`: rebuild the tensor of ``shape`` from ``matrix``."""
    m = _as_matrix(matrix)
    shape = tuple(int(s) for s in shape)
    if len(shape) < 2 or len(shape) > MAX_MODES:
        raise ValueError(f"target shape must have 2..{MAX_MODES} modes, got {shape}")
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    rest = tuple(s for q, s in enumerate(shape) if q != mode)
    expected = (shape[mode], int(np.prod(rest)))
    if m.shape != expected:
        raise ValueError(f"matrix shape {m.shape} inconsistent with {shape} at mode {mode}")
    return np.moveaxis(m.reshape((shape[mode],) + rest), 0, mode)


def mode_product(tensor, matrix, mode: int) -> np.ndarray:
    """Multiply ``tensor`` by ``matrix`` along ``mode``.

    Equivalent to ``fold(matrix @ unfold(tensor, mode), mode, new_shape)``
    where the extent of ``mode`` becomes ``matrix.shape[0]``.
    """
    t = _as_tensor(tensor)
    m = _as_matrix(matrix)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-mode tensor")
    if m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix has {m.shape[1]} columns but mode {mode} has extent {t.shape[mode]}"
        )
    return np.moveaxis(np.tensordot(m, t, axes=(1, mode)), 0, mode)


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts.

    Column ``r`` of the result is ``kron(a[:, r], b[:, r])``; the first
    factor varies slowest, matching the unfolding convention above.
    """
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column mismatch: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def khatri_rao_all(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Chain :func:`khatri_rao` over ``matrices`` (earlier ones vary slowest)."""
    if not matrices:
        raise ValueError("need at least one matrix")
    if len(matrices) == 1:
        return np.asarray(matrices[0], dtype=np.float64)
    return reduce(khatri_rao, matrices)


def outer(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Rank-one tensor from 2 to 4 vectors: ``out[i, j, ...] = v0[i] * v1[j] * ...``."""
    if len(vectors) < 2 or len(vectors) > MAX_MODES:
        raise ValueError(f"need 2..{MAX_MODES} vectors, got {len(vectors)}")
    arrays = []
    for v in vectors:
        arr = np.asarray(v, dtype=np.float64).ravel()
        if arr.size == 0:
            raise ValueError("vectors must be nonempty")
        arrays.append(arr)
    out = arrays[0]
    for arr in arrays[1:]:
        out = np.multiply.outer(out, arr)
    return out


def frobenius_norm(tensor) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(tensor, dtype=np.float64).ravel()))
