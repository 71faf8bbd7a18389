"""Per-region predictors for scalar responses.

Three leaf families are supported: the sample mean, and low-rank linear
regressions whose coefficient tensor is constrained to a CP or Tucker
factorization over the feature modes.  The low-rank fits alternate exact
minimum-norm least-squares updates over the factor blocks (and the core,
for Tucker), so the training loss is non-increasing sweep to sweep.  A
scalar intercept is fitted jointly with every block update.

Leaves holding fewer samples than the factorization can support fall
back to the mean model; the fallback is recorded on the fitted model
rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng
from .decomposition import (
    AlsConfig,
    CPDecomposition,
    TuckerDecomposition,
    _hosvd,
    _normalize_columns,
    _tucker_core,
)
from .tensor_ops import khatri_rao_all, mode_product


@dataclass(frozen=True)
class LeafModelSpec:
    """Which leaf family to fit and how.

    ``rank`` is an int for CP, an int or per-feature-mode tuple for
    Tucker (an int is clamped to each mode extent), and must be None for
    the mean model.
    """

    kind: str = "mean"
    rank: int | tuple[int, ...] | None = None
    als: AlsConfig = field(default_factory=AlsConfig)
    intercept: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("mean", "cp", "tucker"):
            raise ValueError(f"unknown leaf kind {self.kind!r}")
        if self.kind == "mean" and self.rank is not None:
            raise ValueError("mean leaves take no rank")
        if self.kind != "mean" and self.rank is None:
            raise ValueError(f"{self.kind} leaves need a rank")


@dataclass
class FittedLeafModel:
    """A fitted leaf: constant mean, or intercept plus coefficient tensor."""

    kind: str
    feature_shape: tuple[int, ...]
    n_samples: int
    mean: float | None = None
    intercept: float = 0.0
    coefficient: CPDecomposition | TuckerDecomposition | None = None
    fell_back: bool = False
    losses: tuple[float, ...] = ()
    _dense: np.ndarray | None = None

    def coefficient_tensor(self) -> np.ndarray | None:
        if self.coefficient is None:
            return None
        if self._dense is None:
            self._dense = self.coefficient.to_tensor()
        return self._dense


def contract(x, b):
    """Sum of the elementwise product of ``x`` and ``b``.

    ``x`` may be a single tensor with ``b``'s shape (returns a float) or
    a stack of them with one extra leading mode (returns a vector).
    """
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if x.shape == b.shape:
        return float(np.dot(x.ravel(), b.ravel()))
    if x.shape[1:] == b.shape:
        return x.reshape(x.shape[0], -1) @ b.ravel()
    raise ValueError(f"shape mismatch: {x.shape} vs {b.shape}")


def _check_xy(x: np.ndarray, y: np.ndarray) -> None:
    if x.ndim < 3 or x.ndim > 4:
        raise ValueError(f"stacked input must have 2 or 3 feature modes, got shape {x.shape}")
    if y.ndim != 1 or y.size != x.shape[0]:
        raise ValueError(f"response shape {y.shape} does not match {x.shape[0]} samples")
    if y.size == 0:
        raise ValueError("need at least one sample")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
        raise ValueError("inputs contain non-finite values")


def _resolve_tucker_ranks(rank, feature_shape: tuple[int, ...]) -> tuple[int, ...]:
    if isinstance(rank, (int, np.integer)):
        return tuple(min(int(rank), d) for d in feature_shape)
    ranks = tuple(int(r) for r in rank)
    if len(ranks) != len(feature_shape):
        raise ValueError(f"need {len(feature_shape)} ranks, got {len(ranks)}")
    for r, d in zip(ranks, feature_shape):
        if r < 1 or r > d:
            raise ValueError(f"rank {r} invalid for feature extent {d}")
    return ranks


def _parameter_count(spec: LeafModelSpec, feature_shape: tuple[int, ...]) -> int:
    if spec.kind == "cp":
        return int(spec.rank) * sum(feature_shape)
    ranks = _resolve_tucker_ranks(spec.rank, feature_shape)
    return int(np.prod(ranks)) + sum(d * r for d, r in zip(feature_shape, ranks))


def min_viable_samples(spec: LeafModelSpec, feature_shape: tuple[int, ...]) -> int:
    """Smallest sample count for which a low-rank fit is attempted.

    Below ``max(2, params / n_features + 1)`` the fit silently reverts
    to the mean model.
    """
    if spec.kind == "mean":
        return 1
    params = _parameter_count(spec, feature_shape)
    per_sample = params / float(np.prod(feature_shape))
    return int(np.ceil(max(2.0, per_sample + 1.0)))


def _least_squares(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Minimum-norm SVD solve: leaf systems are routinely rank-deficient
    # (more factor parameters than samples), where jittered normal
    # equations amplify roundoff across sweeps until they overflow.
    theta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    return theta


def _solve_block(phi: np.ndarray, y: np.ndarray, intercept: bool) -> tuple[float, np.ndarray]:
    if intercept:
        design = np.hstack([np.ones((phi.shape[0], 1)), phi])
        theta = _least_squares(design, y)
        return float(theta[0]), theta[1:]
    return 0.0, _least_squares(phi, y)


def _mode_unfold_stacked(x: np.ndarray, q: int) -> np.ndarray:
    """Per-sample mode-``q`` unfolding of the feature tensor, all samples at once."""
    n = x.shape[0]
    return np.moveaxis(x, 1 + q, 1).reshape(n, x.shape[1 + q], -1)


def _converged(losses: list[float], tol: float) -> bool:
    if len(losses) < 2:
        return False
    prev, cur = losses[-2], losses[-1]
    return abs(prev - cur) <= tol * max(prev, 1e-30)


def _fit_cp_regression(
    x: np.ndarray, y: np.ndarray, rank: int, cfg: AlsConfig, intercept: bool
) -> tuple[float, CPDecomposition, tuple[float, ...]]:
    n = x.shape[0]
    feature_shape = x.shape[1:]
    n_modes = len(feature_shape)
    rng = make_rng(cfg.seed)
    factors = [rng.standard_normal((d, rank)) for d in feature_shape]
    unfoldings = [_mode_unfold_stacked(x, q) for q in range(n_modes)]

    c = 0.0
    losses: list[float] = []
    for _ in range(cfg.max_iterations):
        for q in range(n_modes):
            others = factors[:q] + factors[q + 1 :]
            w = khatri_rao_all(others) if others else np.ones((1, rank))
            phi = (unfoldings[q] @ w).reshape(n, -1)
            c, coef = _solve_block(phi, y, intercept)
            factors[q] = coef.reshape(feature_shape[q], rank)
        lead = factors[0] @ khatri_rao_all(factors[1:]).T
        b = lead.reshape(feature_shape)
        resid = y - c - contract(x, b)
        losses.append(float(np.dot(resid, resid)))
        if _converged(losses, cfg.rel_tolerance):
            break

    weights, unit = _normalize_columns(factors)
    return c, CPDecomposition(weights=weights, factors=tuple(unit)), tuple(losses)


def _fit_tucker_regression(
    x: np.ndarray, y: np.ndarray, ranks: tuple[int, ...], cfg: AlsConfig, intercept: bool
) -> tuple[float, TuckerDecomposition, tuple[float, ...]]:
    n = x.shape[0]
    feature_shape = x.shape[1:]
    n_modes = len(feature_shape)
    rng = make_rng(cfg.seed)
    factors = [rng.standard_normal((d, r)) for d, r in zip(feature_shape, ranks)]
    core = rng.standard_normal(ranks)
    unfoldings = [_mode_unfold_stacked(x, q) for q in range(n_modes)]

    def dense() -> np.ndarray:
        b = core
        for q, f in enumerate(factors):
            b = mode_product(b, f, q)
        return b

    c = 0.0
    losses: list[float] = []
    for _ in range(cfg.max_iterations):
        for q in range(n_modes):
            h = core
            for p in range(n_modes):
                if p != q:
                    h = mode_product(h, factors[p], p)
            h_q = np.moveaxis(h, q, 0).reshape(ranks[q], -1)
            phi = (unfoldings[q] @ h_q.T).reshape(n, -1)
            c, coef = _solve_block(phi, y, intercept)
            factors[q] = coef.reshape(feature_shape[q], ranks[q])
        z = x
        for p in range(n_modes):
            z = np.moveaxis(np.tensordot(z, factors[p], axes=([p + 1], [0])), -1, p + 1)
        c, coef = _solve_block(z.reshape(n, -1), y, intercept)
        core = coef.reshape(ranks)
        resid = y - c - contract(x, dense())
        losses.append(float(np.dot(resid, resid)))
        if _converged(losses, cfg.rel_tolerance):
            break

    # Re-express the fitted coefficient with orthonormal factors; the
    # truncated HOSVD is exact here because the multilinear rank of the
    # fitted tensor cannot exceed the requested ranks.
    b = dense()
    ortho = _hosvd(b, ranks)
    decomp = TuckerDecomposition(core=_tucker_core(b, ortho), factors=tuple(ortho))
    return c, decomp, tuple(losses)


def fit_leaf(x, y, spec: LeafModelSpec) -> FittedLeafModel:
    """Fit the configured leaf model on a stacked feature tensor.

    Parameters
    ----------
    x : ndarray
        Stacked inputs, shape ``(n, d1, d2)`` or ``(n, d1, d2, d3)``.
    y : ndarray
        Responses, shape ``(n,)``.
    spec : LeafModelSpec

    Returns
    -------
    FittedLeafModel
        Mean model, or intercept plus low-rank coefficient.  When ``n``
        is below :func:`min_viable_samples` the result is a mean model
        with ``fell_back=True``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    _check_xy(x, y)
    feature_shape = x.shape[1:]
    n = x.shape[0]

    if spec.kind == "mean":
        return FittedLeafModel(
            kind="mean", feature_shape=feature_shape, n_samples=n, mean=float(y.mean())
        )

    if n < min_viable_samples(spec, feature_shape):
        return FittedLeafModel(
            kind="mean",
            feature_shape=feature_shape,
            n_samples=n,
            mean=float(y.mean()),
            fell_back=True,
        )

    if spec.kind == "cp":
        c, decomp, losses = _fit_cp_regression(x, y, int(spec.rank), spec.als, spec.intercept)
    else:
        ranks = _resolve_tucker_ranks(spec.rank, feature_shape)
        c, decomp, losses = _fit_tucker_regression(x, y, ranks, spec.als, spec.intercept)

    return FittedLeafModel(
        kind=spec.kind,
        feature_shape=feature_shape,
        n_samples=n,
        intercept=c,
        coefficient=decomp,
        losses=losses,
    )


def predict_leaf(model: FittedLeafModel, x) -> np.ndarray:
    """Evaluate a fitted leaf on stacked inputs, returning one value per row."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1:] != model.feature_shape:
        raise ValueError(
            f"feature shape {x.shape[1:]} does not match training shape {model.feature_shape}"
        )
    n = x.shape[0]
    if model.kind == "mean":
        return np.full(n, model.mean, dtype=np.float64)
    b = model.coefficient_tensor()
    return model.intercept + contract(x, b)
