"""Tensor-on-tensor regression via ensembles of scalar tensor trees.

Two schemes map a stacked tensor response ``Y`` onto scalar boosting
problems:

* entrywise - one boosted ensemble per output entry, entries treated as
  mutually independent.  Per-entry seeds are derived from the base seed
  and the entry's flat index, so fitting is order-independent.
* low-rank - decompose the stacked ``Y`` (observation mode first) once,
  freeze the weights (CP) or core (Tucker) together with every
  non-observation factor, and fit one boosted ensemble per column of the
  observation-mode factor.  Prediction regresses a new observation's
  factor row and reconstructs through the frozen pieces.  The
  observation factor keeps whatever column convention the decomposition
  produced (unit norm for CP, orthonormal for Tucker); predicted rows
  live on the same scale because the targets do.

Per-entry and per-column fits are independent, so they may run on a
thread pool; results do not depend on the thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import derive_seed
from .decomposition import AlsConfig, CPDecomposition, cp_als, tucker_als
from .ensemble import BoostedModel, BoostingConfig, fit_boosting
from .tensor_ops import mode_product


@dataclass(frozen=True)
class OutputConfig:
    """Configuration for a tensor-output model.

    ``rank`` is the output-decomposition rank for the low-rank approach
    (int, or per-mode tuple for Tucker counting the observation mode
    first); ignored by the entrywise approach.
    """

    approach: str = "entrywise"
    decomp: str = "cp"
    rank: int | tuple[int, ...] | None = None
    boosting: BoostingConfig = field(default_factory=BoostingConfig)
    als: AlsConfig = field(default_factory=AlsConfig)

    def __post_init__(self) -> None:
        if self.approach not in ("entrywise", "lowrank"):
            raise ValueError(f"unknown approach {self.approach!r}")
        if self.decomp not in ("cp", "tucker"):
            raise ValueError(f"unknown decomposition {self.decomp!r}")
        if self.approach == "lowrank" and self.rank is None:
            raise ValueError("lowrank approach needs a rank")


class TensorOutputModel:
    """Fitted tensor-output regressor; see :func:`fit_entrywise` / :func:`fit_lowrank`."""

    def __init__(
        self,
        kind: str,
        output_shape: tuple[int, ...],
        ensembles: list[BoostedModel],
        decomp_kind: str | None = None,
        weights: np.ndarray | None = None,
        core: np.ndarray | None = None,
        output_factors: tuple[np.ndarray, ...] = (),
    ):
        self.kind = kind
        self.output_shape = tuple(output_shape)
        self.ensembles = list(ensembles)
        self.decomp_kind = decomp_kind
        self.weights = weights
        self.core = core
        self.output_factors = tuple(output_factors)

    def predict(self, x) -> np.ndarray:
        return predict_tensor(self, x)


def _check_xy(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim < 3 or x.ndim > 4:
        raise ValueError(f"stacked input must have 2 or 3 feature modes, got shape {x.shape}")
    if y.ndim < 2 or y.ndim > 3:
        raise ValueError(f"stacked output must have 1 or 2 feature modes, got shape {y.shape}")
    if y.shape[0] != x.shape[0]:
        raise ValueError(
            f"input stacks {x.shape[0]} observations but output stacks {y.shape[0]}"
        )
    return x, y


def _fit_many(jobs, n_threads: int) -> list[BoostedModel]:
    if n_threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def fit_entrywise(x, y, config: OutputConfig, n_threads: int = 1) -> TensorOutputModel:
    """One boosted ensemble per output entry, fitted independently."""
    x, y = _check_xy(x, y)
    output_shape = y.shape[1:]
    flat = y.reshape(y.shape[0], -1)
    base_seed = config.boosting.seed

    def make_job(entry: int):
        cfg = _reseed(config.boosting, derive_seed(base_seed, entry))
        target = flat[:, entry]
        return lambda: fit_boosting(x, target, cfg)

    ensembles = _fit_many([make_job(e) for e in range(flat.shape[1])], n_threads)
    return TensorOutputModel("entrywise", output_shape, ensembles)


def _reseed(cfg: BoostingConfig, seed: int) -> BoostingConfig:
    return replace(cfg, seed=seed)


def _output_ranks(config: OutputConfig, shape: tuple[int, ...]) -> tuple[int, ...]:
    r = config.rank
    if isinstance(r, (int, np.integer)):
        return tuple(min(int(r), d) for d in shape)
    ranks = tuple(int(v) for v in r)
    if len(ranks) != len(shape):
        raise ValueError(f"need {len(shape)} output ranks, got {len(ranks)}")
    return tuple(min(v, d) for v, d in zip(ranks, shape))


def fit_lowrank(x, y, config: OutputConfig, n_threads: int = 1) -> TensorOutputModel:
    """Decompose the stacked output once, then regress the observation factor.

    The non-observation factors and the CP weights (or Tucker core) are
    recorded from the decomposition and reused verbatim at prediction
    time; only the observation-mode factor is modeled as a function of
    the input.
    """
    x, y = _check_xy(x, y)
    output_shape = y.shape[1:]
    base_seed = config.boosting.seed

    if config.decomp == "cp":
        if not isinstance(config.rank, (int, np.integer)):
            raise ValueError("cp output decomposition takes an integer rank")
        decomp, _ = cp_als(y, int(config.rank), config.als)
        obs_factor = decomp.factors[0]
        frozen = decomp.factors[1:]
        weights, core = decomp.weights, None
    else:
        ranks = _output_ranks(config, y.shape)
        decomp, _ = tucker_als(y, ranks, config.als)
        obs_factor = decomp.factors[0]
        frozen = decomp.factors[1:]
        weights, core = None, decomp.core

    def make_job(col: int):
        cfg = _reseed(config.boosting, derive_seed(base_seed, col))
        target = obs_factor[:, col]
        return lambda: fit_boosting(x, target, cfg)

    ensembles = _fit_many([make_job(c) for c in range(obs_factor.shape[1])], n_threads)
    return TensorOutputModel(
        "lowrank",
        output_shape,
        ensembles,
        decomp_kind=config.decomp,
        weights=weights,
        core=core,
        output_factors=frozen,
    )


def reconstruct_from_observation_factor(model: TensorOutputModel, obs_factor: np.ndarray) -> np.ndarray:
    """Rebuild stacked outputs from observation-factor rows and the frozen pieces."""
    if model.kind != "lowrank":
        raise ValueError("only lowrank models reconstruct from a factor")
    if model.decomp_kind == "cp":
        decomp = CPDecomposition(
            weights=model.weights, factors=(obs_factor,) + model.output_factors
        )
        # Reconstruction only multiplies through, so non-unit-norm rows
        # of the predicted observation factor are fine here.
        return decomp.to_tensor()
    out = mode_product(model.core, obs_factor, 0)
    for q, f in enumerate(model.output_factors):
        out = mode_product(out, f, q + 1)
    return out


def predict_tensor(model: TensorOutputModel, x) -> np.ndarray:
    """Predict a stacked output tensor of shape ``(n,) + output_shape``."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if model.kind == "entrywise":
        columns = [ens.predict(x) for ens in model.ensembles]
        return np.column_stack(columns).reshape((n,) + model.output_shape)
    obs = np.column_stack([ens.predict(x) for ens in model.ensembles])
    return reconstruct_from_observation_factor(model, obs)
