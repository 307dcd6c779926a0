"""Exact computations on finite-support tasks.

Everything here works on a :class:`DiscreteTask`, a finite-support
distribution on which expectations, conditional regrets, Bayes actions and
minimizability gaps are computed by exact summation. The bound verifiers
check the per-point and aggregated consistency inequalities; a slack below
``-SLACK_FLOOR`` counts as a genuine violation, anything above it as
floating-point noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import losses
from .losses import PhiSpec, ProblemShape, PsiSpec

__all__ = [
    "SLACK_FLOOR",
    "DiscreteTask",
    "TabularHypothesis",
    "RegretReport",
    "NoiseProfile",
    "augmented_values",
    "expected_costs",
    "conditional_regret_def",
    "conditional_regret_tdef",
    "bayes_deferral",
    "bayes_two_stage",
    "conditional_error",
    "conditional_min_surrogate",
    "conditional_regret_surrogate",
    "numeric_min_two_stage_psi",
    "grid_min_simplex",
    "minimizability_gap",
    "empirical_excess",
    "verify_bound_single_mae",
    "verify_bound_two_stage",
    "verify_bound_two_expert_phi",
    "minimal_margin",
    "fit_tsybakov_B",
    "verify_lemma_noise",
    "verify_enhanced_bound",
]

SLACK_FLOOR = 1e-9


@dataclass
class DiscreteTask:
    """Finite-support distribution: point marginals, label conditionals and
    a per-point, per-label, per-expert cost tensor."""

    mu: np.ndarray           # (K,)
    conditionals: np.ndarray  # (K, n)
    costs: np.ndarray        # (K, n, n_e)
    shape: ProblemShape

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=float)
        self.conditionals = np.asarray(self.conditionals, dtype=float)
        self.costs = np.asarray(self.costs, dtype=float)
        if np.any(self.mu < 0) or abs(self.mu.sum() - 1.0) > 1e-12:
            raise ValueError("marginals must be nonnegative and sum to 1")
        if np.any(np.abs(self.conditionals.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("conditional rows must sum to 1")
        if np.any(self.costs < 0) or np.any(self.costs > 1):
            raise ValueError("costs must lie in [0, 1]")
        k = len(self.mu)
        if self.conditionals.shape != (k, self.shape.n):
            raise ValueError("conditionals shape mismatch")
        if self.costs.shape != (k, self.shape.n, self.shape.n_e):
            raise ValueError("cost tensor shape mismatch")

    @property
    def num_points(self) -> int:
        return len(self.mu)

    def to_json(self) -> str:
        return json.dumps({
            "version": 1,
            "n": self.shape.n,
            "n_e": self.shape.n_e,
            "mu": self.mu.tolist(),
            "conditionals": self.conditionals.tolist(),
            "costs": self.costs.tolist(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteTask":
        doc = json.loads(text)
        if doc.get("version") != 1:
            raise ValueError(f"unsupported task schema version {doc.get('version')}")
        return cls(np.array(doc["mu"]), np.array(doc["conditionals"]),
                   np.array(doc["costs"]), ProblemShape(doc["n"], doc["n_e"]))


@dataclass
class TabularHypothesis:
    """One score vector per support point; realizes the complete class."""

    scores: np.ndarray  # (K, width)

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=float)
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("invalid scores")

    def action(self, k: int) -> int:
        return int(np.argmax(self.scores[k]))

    def actions(self) -> np.ndarray:
        return np.argmax(self.scores, axis=1)


def _check_width(task: DiscreteTask, hyp: TabularHypothesis, stage: str) -> None:
    want = task.shape.augmented_size if stage == "single" else task.shape.n_e
    if hyp.scores.shape != (task.num_points, want):
        raise ValueError(f"hypothesis shape {hyp.scores.shape} != ({task.num_points}, {want})")


def augmented_values(task: DiscreteTask, k: int) -> np.ndarray:
    """Augmented action values at point k: p(y|x) for labels, then the
    expected agreement mass sum_y p(y|x)(1 - c_j(x, y)) for each expert."""
    p = task.conditionals[k]
    p_expert = (p[:, None] * (1.0 - task.costs[k])).sum(axis=0)
    return np.concatenate([p, p_expert])


def expected_costs(task: DiscreteTask, k: int) -> np.ndarray:
    return task.conditionals[k] @ task.costs[k]


def conditional_regret_def(task: DiscreteTask, hyp: TabularHypothesis, k: int) -> float:
    """Deferral-loss conditional regret: best augmented value minus the value
    of the chosen action."""
    _check_width(task, hyp, "single")
    v = augmented_values(task, k)
    return float(v.max() - v[hyp.action(k)])


def conditional_regret_tdef(task: DiscreteTask, hyp: TabularHypothesis, k: int) -> float:
    _check_width(task, hyp, "two")
    e = expected_costs(task, k)
    return float(e[hyp.action(k)] - e.min())


def _one_hot_scores(actions: np.ndarray, width: int) -> np.ndarray:
    scores = np.zeros((len(actions), width))
    scores[np.arange(len(actions)), actions] = 1.0
    return scores


def bayes_deferral(task: DiscreteTask) -> TabularHypothesis:
    """Per-point argmax over augmented values; ties to the lowest index."""
    acts = np.array([int(np.argmax(augmented_values(task, k)))
                     for k in range(task.num_points)])
    return TabularHypothesis(_one_hot_scores(acts, task.shape.augmented_size))


def bayes_two_stage(task: DiscreteTask) -> TabularHypothesis:
    acts = np.array([int(np.argmin(expected_costs(task, k)))
                     for k in range(task.num_points)])
    return TabularHypothesis(_one_hot_scores(acts, task.shape.n_e))


# ---------------------------------------------------------------------------
# conditional surrogate errors and their exact minima
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleLoss:
    """Loss selector for oracle computations.

    name: 'def' | 'tdef' | 'mae' | 'two_stage_psi' | 'two_stage_phi'
    """

    name: str
    psi: PsiSpec | None = None
    phi: PhiSpec | None = None

    def __post_init__(self) -> None:
        if self.name not in ("def", "tdef", "mae", "two_stage_psi", "two_stage_phi"):
            raise ValueError(f"unsupported loss {self.name!r}")
        if self.name == "two_stage_psi" and self.psi is None:
            raise ValueError("two_stage_psi requires a PsiSpec")
        if self.name == "two_stage_phi" and self.phi is None:
            raise ValueError("two_stage_phi requires a PhiSpec")

    @property
    def stage(self) -> str:
        return "single" if self.name in ("def", "mae") else "two"


def _mae_given_probs(probs: np.ndarray, task: DiscreteTask, k: int) -> float:
    """Expected q=1 surrogate at point k as a function of the output
    probability vector (affine in probs)."""
    n, n_e = task.shape.n, task.shape.n_e
    p = task.conditionals[k]
    c = task.costs[k]                       # (n, n_e)
    a0 = c.sum(axis=1) + 1.0 - n_e          # (n,)
    w = 1.0 - c
    val = 0.0
    for y in range(n):
        val += p[y] * (a0[y] * (1.0 - probs[y])
                       + (w[y] * (1.0 - probs[y] - probs[n:])).sum())
    return float(val)


def _qbar(task: DiscreteTask, k: int) -> np.ndarray:
    """Expected per-expert bracket coefficients for the two-stage surrogate."""
    b = losses.expert_brackets(task.costs[k], task.shape.n_e)  # (n, n_e)
    return task.conditionals[k] @ b


def _phi_cond(task: DiscreteTask, k: int, phi: PhiSpec, margin: float) -> float:
    e = expected_costs(task, k)
    return float(e[0] * phi.value(-margin) + e[1] * phi.value(margin))


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section minimum value of a unimodal f on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(fc, fd, f(lo), f(hi))


def conditional_error(task: DiscreteTask, hyp: TabularHypothesis, k: int,
                      loss: OracleLoss) -> float:
    """Expected loss at point k under the label conditional."""
    _check_width(task, hyp, loss.stage)
    s = hyp.scores[k]
    p = task.conditionals[k]
    if loss.name == "def":
        return float(1.0 - augmented_values(task, k)[hyp.action(k)])
    if loss.name == "tdef":
        return float(expected_costs(task, k)[hyp.action(k)])
    if loss.name == "mae":
        vals = losses.surrogate_mae_batch(
            np.tile(s, (task.shape.n, 1)), np.arange(task.shape.n),
            task.costs[k], task.shape)
        return float(p @ vals)
    if loss.name == "two_stage_psi":
        return float(_qbar(task, k) @ loss.psi.value(losses.softmax(s)))
    return _phi_cond(task, k, loss.phi, float(s[0] - s[1]))


def conditional_min_surrogate(task: DiscreteTask, k: int, loss: OracleLoss) -> float:
    """Infimum of the conditional surrogate error over all score vectors.

    mae: affine in the output distribution, so the minimum over the closed
    simplex is at a vertex. two_stage_psi: closed-form stationary point for
    q in [0, 1) and vertex minimum for q = 1. two_stage_phi: golden-section
    over the score margin.
    """
    if loss.name == "def":
        return float(1.0 - augmented_values(task, k).max())
    if loss.name == "tdef":
        return float(expected_costs(task, k).min())
    if loss.name == "mae":
        width = task.shape.augmented_size
        return min(_mae_given_probs(np.eye(width)[a], task, k) for a in range(width))
    if loss.name == "two_stage_psi":
        qbar = _qbar(task, k)
        q = loss.psi.q
        total = qbar.sum()
        if q == 1.0:
            return float(total - qbar.max())
        if total <= 0.0:
            return 0.0
        if q == 0.0:
            s_star = qbar / total
            pos = qbar > 0
            return float(-(qbar[pos] * np.log(s_star[pos])).sum())
        weights = qbar ** (1.0 / (1.0 - q))
        s_star = weights / weights.sum()
        return float((qbar * (1.0 - s_star ** q)).sum() / q)
    return _golden_min(lambda m: _phi_cond(task, k, loss.phi, m), -60.0, 60.0)


def conditional_regret_surrogate(task: DiscreteTask, hyp: TabularHypothesis,
                                 k: int, loss: OracleLoss) -> float:
    return conditional_error(task, hyp, k, loss) - conditional_min_surrogate(task, k, loss)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def numeric_min_two_stage_psi(qbar: np.ndarray, psi: PsiSpec,
                              iters: int = 30000) -> float:
    """Projected-gradient minimization of sum_j qbar_j Psi(S_j) over the
    simplex; independent numeric cross-check for the closed forms.

    Adaptive step: grow on measurable progress, halve on rejection, and stop
    once a run of iterations makes no relative progress. The stall cutoff
    matters because the objective is badly conditioned when the qbar entries
    are very unbalanced."""
    qbar = np.asarray(qbar, dtype=float)
    n_e = len(qbar)
    floor = 1e-14

    def value(sv: np.ndarray) -> float:
        return float(qbar @ psi.value(np.clip(sv, floor, 1.0)))

    s = np.full(n_e, 1.0 / n_e)
    best = value(s)
    step = 0.1
    stall = 0
    for _ in range(iters):
        grad = qbar * psi.deriv(np.clip(s, floor, 1.0))
        cand = _project_simplex(s - step * grad)
        fc = value(cand)
        if fc < best - 1e-11 * max(1.0, abs(best)):
            s, best, stall = cand, fc, 0
            step = min(step * 1.5, 1e2)
        elif fc <= best:
            s, best = cand, fc
            stall += 1
        else:
            step *= 0.5
            stall += 1
        if step < 1e-18 or stall > 400:
            break
    return best


def grid_min_simplex(fn, width: int, resolution: float = 0.02) -> float:
    """Dense-grid minimum of fn over the probability simplex."""
    steps = int(round(1.0 / resolution))
    best = np.inf

    def rec(prefix: list[int], remaining: int, left: int):
        nonlocal best
        if remaining == 1:
            point = np.array(prefix + [left], dtype=float) / steps
            val = fn(point)
            if val < best:
                best = val
            return
        for t in range(left + 1):
            rec(prefix + [t], remaining - 1, left - t)

    rec([], width, steps)
    return best


# ---------------------------------------------------------------------------
# gaps, excesses
# ---------------------------------------------------------------------------


def generalization_error(task: DiscreteTask, hyp: TabularHypothesis,
                         loss: OracleLoss) -> float:
    return float(sum(task.mu[k] * conditional_error(task, hyp, k, loss)
                     for k in range(task.num_points)))


def empirical_excess(task: DiscreteTask, hyp: TabularHypothesis,
                     loss: OracleLoss) -> float:
    """Excess error over the tabular-class optimum, by exact summation."""
    return float(sum(task.mu[k] * conditional_regret_surrogate(task, hyp, k, loss)
                     for k in range(task.num_points)))


def minimizability_gap(task: DiscreteTask, loss: OracleLoss,
                       hypothesis_class: str = "tabular_all",
                       candidates: list[TabularHypothesis] | None = None) -> float:
    """Best-in-class error minus the expectation of the per-point best
    conditional error. Zero for the tabular class on finite support."""
    if hypothesis_class == "tabular_all":
        # the class optimum decouples across support points, so it equals the
        # expectation of the per-point minima exactly
        return 0.0
    if hypothesis_class != "fixed_family":
        raise ValueError(f"unknown hypothesis class {hypothesis_class!r}")
    if not candidates:
        raise ValueError("fixed_family requires a nonempty candidate set")
    best_overall = min(generalization_error(task, h, loss) for h in candidates)
    pointwise = sum(task.mu[k] * min(conditional_error(task, h, k, loss)
                                     for h in candidates)
                    for k in range(task.num_points))
    return float(best_overall - pointwise)


# ---------------------------------------------------------------------------
# bound verifiers
# ---------------------------------------------------------------------------


@dataclass
class RegretReport:
    """Per-point bound check plus the aggregated excess-error statement."""

    target_regrets: np.ndarray
    surrogate_regrets: np.ndarray
    rhs: np.ndarray
    excess_target: float
    excess_surrogate: float
    aggregate_rhs: float
    label: str = ""
    premise_met: bool = True
    note: str = ""

    @property
    def slack(self) -> np.ndarray:
        return self.rhs - self.target_regrets

    @property
    def aggregate_slack(self) -> float:
        return self.aggregate_rhs - self.excess_target

    @property
    def violations(self) -> int:
        if not self.premise_met:
            return 0
        count = int(np.sum(self.slack < -SLACK_FLOOR))
        if self.aggregate_slack < -SLACK_FLOOR:
            count += 1
        return count

    @property
    def max_negative_slack(self) -> float:
        return float(min(self.slack.min(initial=0.0), self.aggregate_slack, 0.0))

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def csv_rows(self, task_id: str) -> list[tuple]:
        rows = [(task_id, k, float(self.target_regrets[k]), float(self.rhs[k]),
                 float(self.slack[k]), "ok" if self.slack[k] >= -SLACK_FLOOR else "violation")
                for k in range(len(self.target_regrets))]
        rows.append((task_id, -1, self.excess_target, self.aggregate_rhs,
                     self.aggregate_slack,
                     "ok" if self.aggregate_slack >= -SLACK_FLOOR else "violation"))
        return rows


def _per_point_regrets(task, hyp, target: OracleLoss, surrogate: OracleLoss):
    k_range = range(task.num_points)
    tgt = np.array([conditional_regret_surrogate(task, hyp, k, target) for k in k_range])
    sur = np.array([conditional_regret_surrogate(task, hyp, k, surrogate) for k in k_range])
    return tgt, np.maximum(sur, 0.0)


def verify_bound_single_mae(task: DiscreteTask, hyp: TabularHypothesis) -> RegretReport:
    """Per-point and aggregated check of the (n + n_e)-factor bound tying the
    deferral regret to the q=1 surrogate regret."""
    factor = task.shape.augmented_size
    tgt, sur = _per_point_regrets(task, hyp, OracleLoss("def"), OracleLoss("mae"))
    return RegretReport(
        target_regrets=tgt, surrogate_regrets=sur, rhs=factor * sur,
        excess_target=float(task.mu @ tgt), excess_surrogate=float(task.mu @ sur),
        aggregate_rhs=float(factor * (task.mu @ sur)), label="single_mae")


def two_stage_gamma(q: float, cbar_max: float, n_e: int):
    """Concave transform for the multiple-expert two-stage bound."""
    c_up = (n_e - 1) * cbar_max - n_e + 2
    if q == 1.0:
        return lambda t: n_e * t
    if q == 0.0:
        return lambda t: 2.0 * np.sqrt(c_up) * np.sqrt(t)
    return lambda t: 2.0 * np.sqrt(n_e ** q) * np.sqrt(c_up) * np.sqrt(t)


def check_two_stage_premise(task: DiscreteTask) -> bool:
    """Every leave-one-out cost sum must reach n_e - 2."""
    b = losses.expert_brackets(task.costs.reshape(-1, task.shape.n_e), task.shape.n_e)
    return bool(np.all(b >= -1e-12))


def verify_bound_two_stage(task: DiscreteTask, hyp: TabularHypothesis,
                           q: float) -> RegretReport:
    """Two-stage multiple-expert bound with the cost-dependent constant and
    the q-dependent square-root / linear transform."""
    if not check_two_stage_premise(task):
        raise ValueError("assumption sum of other experts' costs >= n_e - 2 fails")
    psi = PsiSpec(q=q)
    cbar_max = float(task.costs.max(axis=(0, 1)).max())
    gamma = two_stage_gamma(q, cbar_max, task.shape.n_e)
    tgt, sur = _per_point_regrets(task, hyp, OracleLoss("tdef"),
                                  OracleLoss("two_stage_psi", psi=psi))
    return RegretReport(
        target_regrets=tgt, surrogate_regrets=sur, rhs=gamma(sur),
        excess_target=float(task.mu @ tgt), excess_surrogate=float(task.mu @ sur),
        aggregate_rhs=float(gamma(task.mu @ sur)), label=f"two_stage_q{q}")


def verify_bound_two_expert_phi(task: DiscreteTask, hyp: TabularHypothesis,
                                phi: PhiSpec) -> RegretReport:
    """Two-expert bound: cost-range prefactors around the binary-classification
    square-root transform (logistic/exponential margin losses)."""
    if task.shape.n_e != 2:
        raise ValueError("two-expert bound requires n_e = 2")
    if phi.kind not in (losses.PhiKind.LOGISTIC, losses.PhiKind.EXPONENTIAL):
        raise ValueError("square-root transform applies to logistic/exponential only")
    c_lo = task.costs.min(axis=(0, 1))      # per-expert lower cost bounds
    c_hi = task.costs.max(axis=(0, 1))
    denom = float(c_lo.sum())
    scale = float(c_hi.sum())
    tgt, sur = _per_point_regrets(task, hyp, OracleLoss("tdef"),
                                  OracleLoss("two_stage_phi", phi=phi))

    def gamma(t):
        t = np.asarray(t, dtype=float)
        if denom <= 0.0:
            return np.where(t > 0, np.inf, 0.0)
        return scale * np.sqrt(2.0 * t / denom)

    return RegretReport(
        target_regrets=tgt, surrogate_regrets=sur, rhs=gamma(sur),
        excess_target=float(task.mu @ tgt), excess_surrogate=float(task.mu @ sur),
        aggregate_rhs=float(gamma(task.mu @ sur)), label=f"two_expert_{phi.kind.value}")


# ---------------------------------------------------------------------------
# margins, noise profiles, enhanced bounds
# ---------------------------------------------------------------------------


def minimal_margin(task: DiscreteTask, stage: str) -> np.ndarray:
    """Gap between the best and second-best action value at each point."""
    out = np.empty(task.num_points)
    for k in range(task.num_points):
        if stage == "single":
            v = np.sort(augmented_values(task, k))[::-1]
            out[k] = v[0] - v[1]
        elif stage == "two":
            e = np.sort(expected_costs(task, k))
            out[k] = e[1] - e[0]
        else:
            raise ValueError(f"unknown stage {stage!r}")
    return out


@dataclass
class NoiseProfile:
    """Fitted low-noise constants: Pr[margin <= t] <= B t^(alpha/(1-alpha))."""

    alpha: float
    B: float
    margins: np.ndarray
    marginals: np.ndarray
    c_const: float = field(init=False)

    def __post_init__(self) -> None:
        self.c_const = self.B ** (1.0 - self.alpha) / self.alpha ** self.alpha
        expo = self.alpha / (1.0 - self.alpha)
        for t in np.unique(self.margins):
            prob = float(self.marginals[self.margins <= t].sum())
            if prob > self.B * t ** expo + 1e-12:
                raise ValueError("noise inequality violated at a support point")


def fit_tsybakov_B(margins: np.ndarray, marginals: np.ndarray, alpha: float) -> NoiseProfile:
    """Tightest B for the given margins; the step-function supremum of
    Pr[margin <= t] / t^(alpha/(1-alpha)) is attained at support points."""
    margins = np.asarray(margins, dtype=float)
    marginals = np.asarray(marginals, dtype=float)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if np.any(margins <= 0.0):
        raise ValueError("zero margin")
    expo = alpha / (1.0 - alpha)
    b = max(float(marginals[margins <= t].sum()) / t ** expo
            for t in np.unique(margins))
    return NoiseProfile(alpha=alpha, B=b, margins=margins, marginals=marginals)


@dataclass
class ChainReport:
    lhs: float
    middle: float
    rhs: float
    label: str = ""

    @property
    def violations(self) -> int:
        count = 0
        if self.lhs > self.middle + SLACK_FLOOR:
            count += 1
        if self.middle > self.rhs + SLACK_FLOOR:
            count += 1
        return count

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _disagreement(task: DiscreteTask, hyp: TabularHypothesis, stage: str) -> np.ndarray:
    bayes = bayes_deferral(task) if stage == "single" else bayes_two_stage(task)
    return (hyp.actions() != bayes.actions()).astype(float)


def verify_lemma_noise(task: DiscreteTask, hyp: TabularHypothesis,
                       profile: NoiseProfile, stage: str) -> ChainReport:
    """Checks Pr[disagree] <= c E[margin * disagree]^alpha <= c excess^alpha."""
    disagree = _disagreement(task, hyp, stage)
    margins = minimal_margin(task, stage)
    target = OracleLoss("def" if stage == "single" else "tdef")
    lhs = float(task.mu @ disagree)
    middle = profile.c_const * float(task.mu @ (margins * disagree)) ** profile.alpha
    rhs = profile.c_const * empirical_excess(task, hyp, target) ** profile.alpha
    return ChainReport(lhs=lhs, middle=middle, rhs=rhs, label=f"noise_{stage}")


@dataclass
class EnhancedReport:
    lhs: float
    rhs: float
    premise_met: bool
    label: str = ""

    @property
    def violations(self) -> int:
        if not self.premise_met:
            return 0
        return int(self.lhs > self.rhs + SLACK_FLOOR)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def verify_enhanced_bound(task: DiscreteTask, hyp: TabularHypothesis,
                          surrogate: OracleLoss, s: float, mode: str,
                          profile: NoiseProfile | None = None) -> EnhancedReport:
    """Hypothesis-dependent-factor bound (mode='theorem_multi') and the
    noise-sharpened exponent bound (mode='theorem_mm').

    Both gate on the pointwise premise: target regret <= surrogate
    regret^(1/s) at every support point. Tabular hypotheses make the target
    minimizability gap vanish, as theorem_mm requires.
    """
    if s < 1.0:
        raise ValueError("s must be >= 1")
    stage = "single" if surrogate.stage == "single" else "two"
    target = OracleLoss("def" if stage == "single" else "tdef")
    tgt, sur = _per_point_regrets(task, hyp, target, surrogate)
    premise = bool(np.all(tgt <= sur ** (1.0 / s) + SLACK_FLOOR))
    excess_t = float(task.mu @ tgt)
    excess_s = float(task.mu @ sur)
    if not premise:
        return EnhancedReport(lhs=excess_t, rhs=np.inf, premise_met=False,
                              label=f"{mode}_premise_unmet")
    if mode == "theorem_multi":
        disagree_mass = float(task.mu @ _disagreement(task, hyp, stage))
        # conjugate exponent; s = 1 degenerates to the linear premise itself
        factor = 1.0 if s == 1.0 else disagree_mass ** (1.0 - 1.0 / s)
        rhs = factor * excess_s ** (1.0 / s)
    elif mode == "theorem_mm":
        if profile is None:
            raise ValueError("theorem_mm requires a fitted NoiseProfile")
        denom = s - profile.alpha * (s - 1.0)
        rhs = profile.c_const ** ((s - 1.0) / denom) * excess_s ** (1.0 / denom)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return EnhancedReport(lhs=excess_t, rhs=float(rhs), premise_met=True, label=mode)
