"""Low-rank tensor decompositions fitted by alternating least squares.

Two factorizations are provided: a CP decomposition (weighted sum of
rank-one tensors, unit-norm factor columns) fitted by classic ALS, and a
Tucker decomposition (small dense core multiplied by orthonormal factor
matrices) fitted by orthogonal iteration (HOOI) from an HOSVD start.

Both solvers are deterministic for a fixed input and
:class:`AlsConfig`: initialization is SVD-based whenever the requested
rank fits the mode extent and seeded-uniform otherwise, every
least-squares step adds a tiny ridge so rank-deficient systems (small
sample groups) stay solvable, and the per-iteration relative
reconstruction errors are recorded so callers can verify the descent.
Non-convergence within the iteration budget is reported through the
returned flag, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import make_rng
from .tensor_ops import (
    MAX_MODES,
    _as_tensor,
    frobenius_norm,
    khatri_rao_all,
    mode_product,
    unfold,
)

RIDGE = 1e-12


@dataclass(frozen=True)
class AlsConfig:
    """Stopping and seeding policy for the alternating solvers.

    ``max_iterations`` is the hard sweep budget; the solver also stops
    early once the change in relative reconstruction error drops below
    ``rel_tolerance``.  ``seed`` keys the random fallback initialization.
    """

    max_iterations: int = 100
    rel_tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.rel_tolerance < 0:
            raise ValueError("rel_tolerance must be >= 0")


@dataclass(frozen=True)
class AlsInfo:
    """Fit diagnostics: convergence flag and per-iteration relative errors."""

    converged: bool
    errors: tuple[float, ...]


@dataclass(frozen=True)
class CPDecomposition:
    """Weighted sum of rank-one tensors.

    ``factors[q]`` has shape ``(extent(q), rank)`` with unit-norm columns;
    ``weights[r]`` carries the scale of the r-th rank-one component.
    """

    weights: np.ndarray
    factors: tuple[np.ndarray, ...]

    @property
    def rank(self) -> int:
        return int(self.weights.size)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    def to_tensor(self) -> np.ndarray:
        lead = self.factors[0] * self.weights
        rest = khatri_rao_all(self.factors[1:])
        return (lead @ rest.T).reshape(self.shape)


@dataclass(frozen=True)
class TuckerDecomposition:
    """Core tensor multiplied along each mode by an orthonormal factor.

    ``core`` has shape ``ranks``; ``factors[q]`` has shape
    ``(extent(q), ranks[q])`` with orthonormal columns.
    """

    core: np.ndarray
    factors: tuple[np.ndarray, ...]

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(self.core.shape)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    def to_tensor(self) -> np.ndarray:
        out = self.core
        for q, f in enumerate(self.factors):
            out = mode_product(out, f, q)
        return out


def _check_finite(t: np.ndarray) -> None:
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite entries")


def _leading_left_singular(m: np.ndarray, r: int) -> np.ndarray:
    """First ``r`` left singular vectors of ``m``; requires ``r <= m.shape[0]``."""
    if r <= min(m.shape):
        u, _, _ = np.linalg.svd(m, full_matrices=False)
    else:
        u, _, _ = np.linalg.svd(m, full_matrices=True)
    return u[:, :r]


def _normalize_columns(factors: list[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Pull column scales out of ``factors`` into a weight vector.

    Zero columns get weight 0 and are replaced by a unit basis vector so
    the unit-norm column invariant holds for every component.
    """
    rank = factors[0].shape[1]
    weights = np.ones(rank)
    out = []
    for f in factors:
        norms = np.linalg.norm(f, axis=0)
        g = f.copy()
        for r in range(rank):
            if norms[r] > 0:
                g[:, r] /= norms[r]
            else:
                g[:, r] = 0.0
                g[0, r] = 1.0
        weights *= norms
        out.append(g)
    return weights, out


def _zero_cp(shape: tuple[int, ...], rank: int) -> CPDecomposition:
    factors = []
    for d in shape:
        f = np.zeros((d, rank))
        f[0, :] = 1.0
        factors.append(f)
    return CPDecomposition(weights=np.zeros(rank), factors=tuple(factors))


def cp_als(tensor, rank: int, config: AlsConfig | None = None) -> tuple[CPDecomposition, AlsInfo]:
    """Fit a rank-``rank`` CP decomposition of ``tensor`` by ALS.

    Parameters
    ----------
    tensor : ndarray
        2- to 4-mode array of finite floats.
    rank : int
        Number of rank-one components, >= 1.
    config : AlsConfig, optional
        Iteration budget, tolerance and seed; defaults to ``AlsConfig()``.

    Returns
    -------
    (CPDecomposition, AlsInfo)
        The fitted decomposition and the per-iteration relative
        reconstruction errors with a convergence flag.

    Notes
    -----
    Factor matrices start from the leading left singular vectors of each
    mode unfolding when the rank fits the mode extent, and from
    seeded-uniform columns otherwise.  Each mode update solves the normal
    equations with a ``1e-12`` ridge, so the recorded error sequence is
    non-increasing up to that jitter.
    """
    t = _as_tensor(tensor)
    _check_finite(t)
    if rank < 1:
        raise ValueError("rank must be >= 1")
    cfg = config or AlsConfig()

    norm_t = frobenius_norm(t)
    if norm_t == 0.0:
        return _zero_cp(t.shape, rank), AlsInfo(converged=True, errors=(0.0,))

    rng = make_rng(cfg.seed)
    factors: list[np.ndarray] = []
    for q in range(t.ndim):
        if rank <= t.shape[q]:
            factors.append(_leading_left_singular(unfold(t, q), rank))
        else:
            factors.append(rng.uniform(size=(t.shape[q], rank)))

    unfoldings = [unfold(t, q) for q in range(t.ndim)]
    grams = [f.T @ f for f in factors]
    eye = np.eye(rank)

    errors: list[float] = []
    converged = False
    for _ in range(cfg.max_iterations):
        for q in range(t.ndim):
            others = factors[:q] + factors[q + 1 :]
            w = khatri_rao_all(others)
            v = np.ones((rank, rank))
            for p, g in enumerate(grams):
                if p != q:
                    v = v * g
            rhs = unfoldings[q] @ w
            # lstsq tolerates the singular Gram matrices that arise when
            # the rank exceeds what a small sample group supports
            factors[q] = np.linalg.lstsq(v + RIDGE * eye, rhs.T, rcond=None)[0].T
            grams[q] = factors[q].T @ factors[q]
        lead = factors[0] @ khatri_rao_all(factors[1:]).T
        err = float(np.linalg.norm(unfoldings[0] - lead) / norm_t)
        errors.append(err)
        if len(errors) >= 2 and abs(errors[-2] - errors[-1]) < cfg.rel_tolerance:
            converged = True
            break

    weights, unit_factors = _normalize_columns(factors)
    decomp = CPDecomposition(weights=weights, factors=tuple(unit_factors))
    return decomp, AlsInfo(converged=converged, errors=tuple(errors))


def _hosvd(t: np.ndarray, ranks: Sequence[int]) -> list[np.ndarray]:
    return [_leading_left_singular(unfold(t, q), r) for q, r in enumerate(ranks)]


def _tucker_core(t: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    core = t
    for q, f in enumerate(factors):
        core = mode_product(core, f.T, q)
    return core


def tucker_als(
    tensor, ranks: Sequence[int], config: AlsConfig | None = None
) -> tuple[TuckerDecomposition, AlsInfo]:
    """Fit a Tucker decomposition of ``tensor`` at per-mode ``ranks`` by HOOI.

    Parameters
    ----------
    tensor : ndarray
        2- to 4-mode array of finite floats.
    ranks : sequence of int
        One rank per mode, each in ``[1, extent(mode)]``.
    config : AlsConfig, optional
        Same stopping contract as :func:`cp_als`.

    Returns
    -------
    (TuckerDecomposition, AlsInfo)

    Notes
    -----
    Starts from the truncated HOSVD, then repeatedly re-extracts each
    factor as the leading singular subspace of the tensor contracted by
    all other factors.  Factors stay orthonormal by construction and the
    recorded error sequence is non-increasing.
    """
    t = _as_tensor(tensor)
    _check_finite(t)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != t.ndim:
        raise ValueError(f"need {t.ndim} ranks, got {len(ranks)}")
    for q, r in enumerate(ranks):
        if r < 1 or r > t.shape[q]:
            raise ValueError(f"rank {r} invalid for mode {q} with extent {t.shape[q]}")
    cfg = config or AlsConfig()

    norm_t = frobenius_norm(t)
    if norm_t == 0.0:
        factors = tuple(np.eye(t.shape[q], r) for q, r in enumerate(ranks))
        return (
            TuckerDecomposition(core=np.zeros(ranks), factors=factors),
            AlsInfo(converged=True, errors=(0.0,)),
        )

    factors = _hosvd(t, ranks)
    errors: list[float] = []
    converged = False
    for _ in range(cfg.max_iterations):
        for q in range(t.ndim):
            partial = t
            for p in range(t.ndim):
                if p != q:
                    partial = mode_product(partial, factors[p].T, p)
            factors[q] = _leading_left_singular(unfold(partial, q), ranks[q])
        core = _tucker_core(t, factors)
        recon = TuckerDecomposition(core=core, factors=tuple(factors)).to_tensor()
        err = float(frobenius_norm(t - recon) / norm_t)
        errors.append(err)
        if len(errors) >= 2 and abs(errors[-2] - errors[-1]) < cfg.rel_tolerance:
            converged = True
            break

    core = _tucker_core(t, factors)
    decomp = TuckerDecomposition(core=core, factors=tuple(factors))
    return decomp, AlsInfo(converged=converged, errors=tuple(errors))


def approximation_error(tensor, decomposition) -> float:
    """Squared Frobenius norm of ``decomposition.to_tensor() - tensor``."""
    t = _as_tensor(tensor)
    recon = decomposition.to_tensor()
    if recon.shape != t.shape:
        raise ValueError(f"shape mismatch: tensor {t.shape} vs decomposition {recon.shape}")
    diff = recon - t
    return float(np.dot(diff.ravel(), diff.ravel()))
