"""Seedable linear / one-hidden-layer scorers and a deterministic trainer.

Training is a pure function of (initial scorer, dataset, config): two runs
with the same seed produce bit-identical parameters and trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import losses
from .losses import PhiSpec, ProblemShape, PsiSpec
from .rng import substream

__all__ = [
    "LinearScorer",
    "MlpScorer",
    "TrainConfig",
    "LabeledDataset",
    "LossSelector",
    "TrainingDiverged",
    "forward",
    "forward_batch",
    "init_linear",
    "init_mlp",
    "train",
    "system_accuracy",
    "scorer_to_json",
    "scorer_from_json",
]

SCHEMA_VERSION = 1


class TrainingDiverged(RuntimeError):
    """Raised when a non-finite loss appears during training."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class LinearScorer:
    weights: np.ndarray  # (output_width, input_dim)
    bias: np.ndarray     # (output_width,)
    seed: int = 0

    @property
    def output_width(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "LinearScorer":
        return LinearScorer(self.weights.copy(), self.bias.copy(), self.seed)

    def scores(self, features: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.weights.shape[1]:
            raise ValueError(f"input dim {x.shape[1]} != {self.weights.shape[1]}")
        return x @ self.weights.T + self.bias

    def params(self) -> list[np.ndarray]:
        return [self.weights, self.bias]


@dataclass
class MlpScorer:
    w1: np.ndarray  # (hidden_dim, input_dim)
    b1: np.ndarray
    w2: np.ndarray  # (output_width, hidden_dim)
    b2: np.ndarray
    seed: int = 0

    @property
    def output_width(self) -> int:
        return self.w2.shape[0]

    def copy(self) -> "MlpScorer":
        return MlpScorer(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy(), self.seed)

    def scores(self, features: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.w1.shape[1]:
            raise ValueError(f"input dim {x.shape[1]} != {self.w1.shape[1]}")
        hidden = np.maximum(0.0, x @ self.w1.T + self.b1)
        return hidden @ self.w2.T + self.b2

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


Scorer = LinearScorer | MlpScorer


def init_linear(input_dim: int, output_width: int, seed: int) -> LinearScorer:
    """Uniform(-1/sqrt(d), 1/sqrt(d)) weights, zero biases."""
    rng = substream(seed, "init-linear")
    lim = 1.0 / np.sqrt(input_dim)
    w = rng.uniform(-lim, lim, size=(output_width, input_dim))
    return LinearScorer(w, np.zeros(output_width), seed)


def init_mlp(input_dim: int, hidden_dim: int, output_width: int, seed: int) -> MlpScorer:
    if hidden_dim < 1:
        raise ValueError("hidden_dim must be >= 1")
    rng = substream(seed, "init-mlp")
    lim1 = 1.0 / np.sqrt(input_dim)
    lim2 = 1.0 / np.sqrt(hidden_dim)
    w1 = rng.uniform(-lim1, lim1, size=(hidden_dim, input_dim))
    w2 = rng.uniform(-lim2, lim2, size=(output_width, hidden_dim))
    return MlpScorer(w1, np.zeros(hidden_dim), w2, np.zeros(output_width), seed)


def forward(scorer: Scorer, features_row) -> np.ndarray:
    """Scores for a single feature row."""
    return scorer.scores(np.atleast_2d(features_row))[0]


def forward_batch(scorer: Scorer, features) -> np.ndarray:
    return scorer.scores(features)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 500
    batch_size: int | str = "full"
    seed: int = 0
    optimizer: str = "gd"          # "gd" or "momentum"
    momentum: float = 0.9
    standardize: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.optimizer not in ("gd", "momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.batch_size != "full" and int(self.batch_size) < 1:
            raise ValueError("batch_size must be positive or 'full'")


@dataclass
class LabeledDataset:
    """Features, labels in [n), and realized per-expert deferral costs."""

    features: np.ndarray   # (m, input_dim)
    labels: np.ndarray     # (m,) int, single-stage only
    costs: np.ndarray      # (m, n_e) in [0, 1]
    shape: ProblemShape
    stage: str = "single"  # "single" or "two"

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.costs = np.asarray(self.costs, dtype=float)
        m = len(self.features)
        if len(self.labels) != m or len(self.costs) != m:
            raise ValueError("inconsistent row counts")
        if self.costs.shape[1] != self.shape.n_e:
            raise ValueError("cost width != n_e")
        if np.any(self.costs < 0) or np.any(self.costs > 1):
            raise ValueError("costs must lie in [0, 1]")
        if self.stage not in ("single", "two"):
            raise ValueError(f"unknown stage {self.stage!r}")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def output_width(self) -> int:
        return self.shape.augmented_size if self.stage == "single" else self.shape.n_e


@dataclass(frozen=True)
class LossSelector:
    """Names one of the surrogate losses together with its Psi/Phi spec."""

    name: str
    psi: PsiSpec | None = None
    phi: PhiSpec | None = None

    _SINGLE = ("surrogate_single", "surrogate_mae", "baseline_verma", "baseline_mao")
    _TWO = ("two_stage_phi", "two_stage_psi")

    def __post_init__(self) -> None:
        if self.name not in self._SINGLE + self._TWO:
            raise ValueError(f"unknown loss {self.name!r}")
        if self.name in ("surrogate_single", "baseline_mao", "two_stage_psi") and self.psi is None:
            raise ValueError(f"{self.name} requires a PsiSpec")
        if self.name == "two_stage_phi" and self.phi is None:
            raise ValueError("two_stage_phi requires a PhiSpec")

    @property
    def stage(self) -> str:
        return "single" if self.name in self._SINGLE else "two"

    def loss_and_grad(self, scores, y: np.ndarray, c: np.ndarray,
                      shp: ProblemShape):
        if self.name == "surrogate_single":
            return losses.surrogate_single_with_grad_batch(scores, y, c, shp, self.psi)
        if self.name == "surrogate_mae":
            return losses.surrogate_single_with_grad_batch(scores, y, c, shp,
                                                           PsiSpec(q=1.0))
        if self.name == "baseline_verma":
            return losses.baseline_verma_with_grad_batch(scores, y, c, shp)
        if self.name == "baseline_mao":
            return losses.baseline_mao_with_grad_batch(scores, y, c, shp, self.psi)
        if self.name == "two_stage_phi":
            return losses.two_stage_surrogate_phi_with_grad_batch(scores, c, self.phi)
        return losses.two_stage_surrogate_psi_with_grad_batch(scores, c, self.psi)


def realized_deferral_loss(scorer: Scorer, dataset: LabeledDataset,
                           features: np.ndarray | None = None) -> np.ndarray:
    x = dataset.features if features is None else features
    scores = scorer.scores(x)
    if dataset.stage == "single":
        return losses.deferral_loss_batch(scores, dataset.labels, dataset.costs, dataset.shape)
    return losses.two_stage_deferral_loss_batch(scores, dataset.costs)


def system_accuracy(scorer: Scorer, dataset: LabeledDataset, stage: str | None = None) -> float:
    """Mean of one minus the realized deferral loss."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if stage is not None and stage != dataset.stage:
        raise ValueError(f"stage {stage!r} does not match dataset stage {dataset.stage!r}")
    return float(1.0 - realized_deferral_loss(scorer, dataset).mean())


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardizer":
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean, std)

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) / self.std


def _backprop(scorer: Scorer, x: np.ndarray, gout: np.ndarray) -> list[np.ndarray]:
    """Mean-over-batch parameter gradients given dL/dscores."""
    m = len(x)
    if isinstance(scorer, LinearScorer):
        return [gout.T @ x / m, gout.mean(axis=0)]
    hidden_pre = x @ scorer.w1.T + scorer.b1
    hidden = np.maximum(0.0, hidden_pre)
    gw2 = gout.T @ hidden / m
    gb2 = gout.mean(axis=0)
    ghid = (gout @ scorer.w2) * (hidden_pre > 0)
    return [ghid.T @ x / m, ghid.mean(axis=0), gw2, gb2]


def train(scorer: Scorer, dataset: LabeledDataset, selector: LossSelector,
          config: TrainConfig) -> tuple[Scorer, np.ndarray]:
    """Gradient-descent training.

    Returns the trained scorer and a (epochs, 2) trajectory of
    (mean surrogate loss, mean deferral loss), both evaluated on the full
    training set after each epoch's update.
    """
    if selector.stage != dataset.stage:
        raise ValueError(f"loss stage {selector.stage!r} != dataset stage {dataset.stage!r}")
    model = scorer.copy()
    x = dataset.features
    std = Standardizer.fit(x) if config.standardize else None
    if std is not None:
        x = std.apply(x)
    m = len(dataset)
    batch = m if config.batch_size == "full" else min(int(config.batch_size), m)
    shuffle_rng = substream(config.seed, "train-shuffle")
    velocity = [np.zeros_like(p) for p in model.params()]
    trajectory = np.empty((config.epochs, 2))

    for epoch in range(config.epochs):
        order = np.arange(m) if batch == m else shuffle_rng.permutation(m)
        for start in range(0, m, batch):
            idx = order[start:start + batch]
            xb = x[idx]
            scores = model.scores(xb)
            loss_vals, gout = selector.loss_and_grad(
                scores, dataset.labels[idx], dataset.costs[idx], dataset.shape)
            if not np.all(np.isfinite(loss_vals)):
                raise TrainingDiverged(epoch)
            grads = _backprop(model, xb, gout)
            params = model.params()
            for p, g, v in zip(params, grads, velocity):
                if config.optimizer == "momentum":
                    v *= config.momentum
                    v += g
                    p -= config.learning_rate * v
                else:
                    p -= config.learning_rate * g

        full_scores = model.scores(x)
        sur, _ = selector.loss_and_grad(full_scores, dataset.labels,
                                        dataset.costs, dataset.shape)
        if dataset.stage == "single":
            tgt = losses.deferral_loss_batch(full_scores, dataset.labels,
                                             dataset.costs, dataset.shape)
        else:
            tgt = losses.two_stage_deferral_loss_batch(full_scores, dataset.costs)
        if not np.all(np.isfinite(sur)):
            raise TrainingDiverged(epoch)
        trajectory[epoch] = (sur.mean(), tgt.mean())

    if std is not None:
        model = fold_standardizer(model, std)
    return model, trajectory


def replace_rows(dataset: LabeledDataset, idx: np.ndarray) -> LabeledDataset:
    return LabeledDataset(dataset.features[idx], dataset.labels[idx],
                          dataset.costs[idx], dataset.shape, dataset.stage)


def fold_standardizer(model: Scorer, std: Standardizer) -> Scorer:
    """Rewrite the first affine layer so the scorer acts on raw features."""
    if isinstance(model, LinearScorer):
        w = model.weights / std.std
        b = model.bias - w @ std.mean
        return LinearScorer(w, b, model.seed)
    w1 = model.w1 / std.std
    b1 = model.b1 - w1 @ std.mean
    return MlpScorer(w1, b1, model.w2.copy(), model.b2.copy(), model.seed)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def scorer_to_json(scorer: Scorer) -> str:
    if isinstance(scorer, LinearScorer):
        doc = {
            "version": SCHEMA_VERSION,
            "kind": "linear",
            "dims": list(scorer.weights.shape),
            "weights": scorer.weights.ravel().tolist(),
            "bias": scorer.bias.tolist(),
            "seed": scorer.seed,
        }
    else:
        doc = {
            "version": SCHEMA_VERSION,
            "kind": "mlp",
            "dims": [list(scorer.w1.shape), list(scorer.w2.shape)],
            "weights": [scorer.w1.ravel().tolist(), scorer.w2.ravel().tolist()],
            "bias": [scorer.b1.tolist(), scorer.b2.tolist()],
            "seed": scorer.seed,
        }
    return json.dumps(doc, sort_keys=True)


def scorer_from_json(text: str) -> Scorer:
    doc = json.loads(text)
    if doc.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported scorer schema version {doc.get('version')}")
    if doc["kind"] == "linear":
        dims = tuple(doc["dims"])
        return LinearScorer(np.array(doc["weights"]).reshape(dims),
                            np.array(doc["bias"]), doc["seed"])
    if doc["kind"] == "mlp":
        d1, d2 = (tuple(d) for d in doc["dims"])
        return MlpScorer(np.array(doc["weights"][0]).reshape(d1), np.array(doc["bias"][0]),
                         np.array(doc["weights"][1]).reshape(d2), np.array(doc["bias"][1]),
                         doc["seed"])
    raise ValueError(f"unknown scorer kind {doc['kind']!r}")
