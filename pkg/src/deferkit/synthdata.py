"""Synthetic data generators.

Gaussian-mixture feature data with costs produced by a hidden linear scorer,
so that the generated problem is realizable: the hidden scorer attains zero
deferral loss by construction. Also a random finite-support task sampler
with optional structural constraints, used by the verification suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .losses import ProblemShape, expert_brackets
from .models import LabeledDataset, LinearScorer
from .oracles import DiscreteTask, minimal_margin

__all__ = [
    "MogConfig",
    "ExpertRangeSpec",
    "gen_realizable_mog",
    "gen_class_range_experts",
    "gen_realizable_two_stage",
    "gen_random_discrete_task",
]

_MAX_RESAMPLES = 10_000


@dataclass(frozen=True)
class MogConfig:
    """Gaussian-mixture feature model: unit-covariance components with means
    drawn from N(0, mean_scale^2 I)."""

    dim: int = 16
    components: int = 8
    n: int = 4
    n_e: int = 2
    mean_scale: float = 2.0

    def __post_init__(self) -> None:
        if self.dim < 1 or self.components < 1:
            raise ValueError("dim and components must be positive")
        if self.n < 2 or self.n_e < 1:
            raise ValueError("need n >= 2 and n_e >= 1")

    @property
    def shape(self) -> ProblemShape:
        return ProblemShape(self.n, self.n_e)


def _sample_features(config: MogConfig, num_samples: int, seed: int,
                     tag: str) -> np.ndarray:
    g_means = rng.substream(seed, f"{tag}-means", 0)
    means = config.mean_scale * g_means.standard_normal((config.components, config.dim))
    g = rng.substream(seed, f"{tag}-sample", 0)
    comps = g.integers(0, config.components, size=num_samples)
    return means[comps] + g.standard_normal((num_samples, config.dim)), comps


def _draw_full_coverage_scorer(config: MogConfig, features: np.ndarray,
                               width: int, seed: int, tag: str) -> tuple[LinearScorer, np.ndarray]:
    """Random linear scorer redrawn until every output wins at least once on
    the given sample, so no action is vacuous."""
    for attempt in range(100):
        g = rng.substream(seed, f"{tag}-scorer", attempt)
        scorer = LinearScorer(weights=g.standard_normal((width, config.dim)),
                              bias=np.zeros(width), seed=seed)
        preds = np.argmax(scorer.scores(features), axis=1)
        if len(np.unique(preds)) == width:
            return scorer, preds
    raise RuntimeError("no scorer draw covered every output in 100 attempts")


def gen_realizable_mog(config: MogConfig, num_samples: int,
                       seed: int) -> tuple[LabeledDataset, LinearScorer]:
    """Single-stage realizable data: where the hidden scorer predicts a label
    it is the true label; where it defers, the chosen expert is free and the
    others cost 1. The hidden scorer therefore has zero deferral loss."""
    features, _ = _sample_features(config, num_samples, seed, "mog")
    width = config.shape.augmented_size
    scorer, preds = _draw_full_coverage_scorer(config, features, width, seed, "mog")
    g = rng.substream(seed, "mog-labels", 0)
    labels = np.where(preds < config.n, preds,
                      g.integers(0, config.n, size=num_samples))
    costs = np.ones((num_samples, config.n_e))
    deferred = preds >= config.n
    costs[deferred, preds[deferred] - config.n] = 0.0
    dataset = LabeledDataset(features=features, labels=labels.astype(int),
                             costs=costs, shape=config.shape, stage="single")
    return dataset, scorer


@dataclass(frozen=True)
class ExpertRangeSpec:
    """Per-expert competence ranges over the label set: each expert is correct
    on labels in [lo, hi) and guesses uniformly inside its own range elsewhere."""

    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        for lo, hi in self.ranges:
            if lo < 0 or hi <= lo:
                raise ValueError(f"bad range ({lo}, {hi})")


def gen_class_range_experts(config: MogConfig, spec: ExpertRangeSpec,
                            num_samples: int, seed: int) -> LabeledDataset:
    """Mixture features with labels tied to components; expert costs come
    from simulated range-limited predictions."""
    if len(spec.ranges) != config.n_e:
        raise ValueError("one range per expert required")
    for _, hi in spec.ranges:
        if hi > config.n:
            raise ValueError("range exceeds label count")
    features, comps = _sample_features(config, num_samples, seed, "range")
    labels = comps % config.n
    g = rng.substream(seed, "range-experts", 0)
    costs = np.empty((num_samples, config.n_e))
    for j, (lo, hi) in enumerate(spec.ranges):
        guesses = g.integers(lo, hi, size=num_samples)
        preds = np.where((labels >= lo) & (labels < hi), labels, guesses)
        costs[:, j] = (preds != labels).astype(float)
    return LabeledDataset(features=features, labels=labels.astype(int),
                          costs=costs, shape=config.shape, stage="single")


def gen_realizable_two_stage(config: MogConfig, num_samples: int,
                             seed: int) -> tuple[LabeledDataset, LinearScorer]:
    """Two-stage realizable data: the expert picked by a hidden linear router
    is free, all others cost 1, so the router has zero allocation loss."""
    features, _ = _sample_features(config, num_samples, seed, "two")
    scorer, preds = _draw_full_coverage_scorer(config, features, config.n_e,
                                               seed, "two")
    g = rng.substream(seed, "two-labels", 0)
    labels = g.integers(0, config.n, size=num_samples)
    costs = np.ones((num_samples, config.n_e))
    costs[np.arange(num_samples), preds] = 0.0
    dataset = LabeledDataset(features=features, labels=labels.astype(int),
                             costs=costs, shape=config.shape, stage="two")
    return dataset, scorer


def _premise_costs(g: np.random.Generator, n: int, n_e: int) -> np.ndarray:
    """Uniform costs resampled row-wise until every leave-one-expert-out sum
    reaches n_e - 2."""
    costs = np.empty((n, n_e))
    for y in range(n):
        for attempt in range(_MAX_RESAMPLES + 1):
            row = g.uniform(0.0, 1.0, size=n_e)
            if row.sum() - row.max() >= n_e - 2:
                costs[y] = row
                break
        else:
            raise RuntimeError("cost resampling cap reached for premise constraint")
    return costs


def gen_random_discrete_task(seed: int, index: int = 0, n_max: int = 4,
                             ne_max: int = 3, k_max: int = 6,
                             constraint: str = "none") -> DiscreteTask:
    """Random finite-support task.

    constraint:
      'none'             unconstrained draws
      'theorem7_premise' per-row cost resampling so every leave-one-out
                         cost sum reaches n_e - 2 (requires n_e >= 2)
      'positive_margin'  whole-task resampling until both the single-stage
                         and two-stage action margins are at least 1e-3
    """
    if constraint not in ("none", "theorem7_premise", "positive_margin"):
        raise ValueError(f"unknown constraint {constraint!r}")
    g = rng.substream(seed, f"task-{constraint}", index)
    # margins and brackets over experts need at least two of them
    ne_min = 1 if constraint == "none" else 2
    for attempt in range(_MAX_RESAMPLES + 1):
        n = int(g.integers(2, n_max + 1))
        n_e = int(g.integers(ne_min, max(ne_min, ne_max) + 1))
        k = int(g.integers(2, k_max + 1))
        mu = g.dirichlet(np.ones(k))
        conditionals = g.dirichlet(np.ones(n), size=k)
        if constraint == "theorem7_premise":
            costs = np.stack([_premise_costs(g, n, n_e) for _ in range(k)])
        else:
            costs = g.uniform(0.0, 1.0, size=(k, n, n_e))
        task = DiscreteTask(mu=mu, conditionals=conditionals, costs=costs,
                            shape=ProblemShape(n, n_e))
        if constraint != "positive_margin":
            return task
        if (minimal_margin(task, "single").min() >= 1e-3
                and minimal_margin(task, "two").min() >= 1e-3):
            return task
    raise RuntimeError("task resampling cap reached for margin constraint")
