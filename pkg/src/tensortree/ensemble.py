"""Boosted and bagged ensembles of tensor-input trees.

Boosting is squared-loss forward stagewise fitting: start from the
response mean, fit each tree to the current plain residuals, and add it
scaled by the learning rate.  An optional AdaBoost-like resampling mode
draws each stage's training subset from multiplicative sample weights
``w <- w * exp(|residual|)`` (renormalized every stage and capped at
1e100 so the unbounded update cannot overflow).

The random forest grows independently seeded trees on bootstrap
resamples, each using leverage-score coordinate subsampling re-seeded
per tree, and averages their predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import derive_seed, make_rng
from .splitting import SearchStrategy
from .tree import GrowConfig, PruneConfig, TensorTree, grow, prune

WEIGHT_CAP = 1e100
_EXP_CAP = math.log(WEIGHT_CAP)


@dataclass(frozen=True)
class BoostingConfig:
    n_estimators: int = 10
    learning_rate: float = 0.1
    p_resample: float = 0.0
    tree: GrowConfig = field(default_factory=GrowConfig)
    prune: PruneConfig | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.p_resample <= 1.0:
            raise ValueError("p_resample must be in [0, 1]")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 10
    bootstrap: bool = True
    tau: float = 1.0 / 3.0
    tree: GrowConfig = field(default_factory=GrowConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")


class BoostedModel:
    """Additive model ``f0 + learning_rate * sum_b tree_b``."""

    def __init__(self, base_value: float, learning_rate: float, trees: list[TensorTree],
                 train_mse: tuple[float, ...] = ()):
        self.base_value = float(base_value)
        self.learning_rate = float(learning_rate)
        self.trees = list(trees)
        self.train_mse = tuple(train_mse)

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.full(x.shape[0], self.base_value, dtype=np.float64)
        for t in self.trees:
            out += self.learning_rate * t.predict(x)
        return out


class ForestModel:
    """Arithmetic mean over independently grown trees."""

    def __init__(self, trees: list[TensorTree]):
        if not trees:
            raise ValueError("forest needs at least one tree")
        self.trees = list(trees)

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape[0], dtype=np.float64)
        for t in self.trees:
            out += t.predict(x)
        return out / len(self.trees)


def _check_data(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim < 3 or x.ndim > 4:
        raise ValueError(f"stacked input must have 2 or 3 feature modes, got shape {x.shape}")
    if y.size != x.shape[0]:
        raise ValueError("response length does not match sample count")
    if y.size == 0:
        raise ValueError("need at least one sample")
    return x, y


def fit_boosting(x, y, config: BoostingConfig) -> BoostedModel:
    """Fit a gradient-boosted stack of tensor trees on plain residuals.

    With ``p_resample > 0`` each stage trains on ``ceil(n * p_resample)``
    indices drawn (with replacement) from the running sample weights;
    weights start uniform and are updated by ``exp(|residual|)`` after
    every resampled stage.  Per-tree pruning is applied before the model
    update when a prune config is given.
    """
    x, y = _check_data(x, y)
    n = y.size
    rng = make_rng(config.seed)

    f0 = float(y.mean())
    current = np.full(n, f0, dtype=np.float64)
    weights = np.full(n, 1.0 / n, dtype=np.float64)
    trees: list[TensorTree] = []
    mse_trace: list[float] = []

    for _ in range(config.n_estimators):
        residual = y - current
        if config.p_resample > 0:
            size = int(math.ceil(n * config.p_resample))
            chosen = rng.choice(n, size=size, replace=True, p=weights)
            tree = grow(x[chosen], residual[chosen], config.tree)
            weights = weights * np.exp(np.minimum(np.abs(residual), _EXP_CAP))
            weights = np.minimum(weights, WEIGHT_CAP)
            weights = weights / weights.sum()
        else:
            tree = grow(x, residual, config.tree)
        if config.prune is not None:
            tree = prune(tree, config.prune)
        trees.append(tree)
        current = current + config.learning_rate * tree.predict(x)
        mse_trace.append(float(np.mean((y - current) ** 2)))

    return BoostedModel(f0, config.learning_rate, trees, tuple(mse_trace))


def fit_forest(x, y, config: ForestConfig) -> ForestModel:
    """Fit a random forest of tensor trees.

    Each tree sees a bootstrap resample (size ``n``, with replacement)
    when ``config.bootstrap`` is set and searches splits with a
    leverage-score strategy at fraction ``config.tau``, re-seeded per
    tree from the forest seed.
    """
    x, y = _check_data(x, y)
    n = y.size
    trees: list[TensorTree] = []
    for t_index in range(config.n_trees):
        rng = make_rng(derive_seed(config.seed, t_index))
        if config.bootstrap:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        strategy = SearchStrategy(
            kind="leverage", tau=config.tau, seed=derive_seed(config.seed, t_index, 1)
        )
        tree_cfg = replace(config.tree, strategy=strategy)
        trees.append(grow(x[rows], y[rows], tree_cfg))
    return ForestModel(trees)


def ensemble_predict(model, x) -> np.ndarray:
    """Predict with a boosted or forest model (dispatch on type)."""
    if isinstance(model, (BoostedModel, ForestModel)):
        return model.predict(x)
    raise TypeError(f"not an ensemble model: {type(model).__name__}")
