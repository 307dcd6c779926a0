import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deferkit.losses import (
    PhiKind,
    PhiSpec,
    ProblemShape,
    PsiSpec,
    baseline_mao,
    baseline_verma,
    deferral_loss,
    deferral_loss_alt,
    softmax,
    surrogate_mae,
    surrogate_single,
    two_stage_deferral_loss,
    two_stage_surrogate_phi,
    two_stage_surrogate_psi,
)


def test_softmax_uniform():
    np.testing.assert_allclose(softmax(np.zeros(3)), np.full(3, 1 / 3))


def test_softmax_no_overflow():
    s = softmax(np.array([1000.0, 0.0, 0.0]))
    assert np.all(np.isfinite(s))
    assert s[0] == pytest.approx(1.0)


def test_softmax_two_point():
    s = softmax(np.array([1.0, 2.0]))
    np.testing.assert_allclose(s, [1 / (1 + np.e), np.e / (1 + np.e)])


def test_softmax_rejects_nonfinite():
    with pytest.raises(ValueError, match="invalid scores"):
        softmax(np.array([np.nan, 0.0]))


def test_deferral_loss_correct_prediction():
    shape = ProblemShape(3, 2)
    scores = np.array([0.0, 5.0, 0.0, 0.0, 0.0])
    assert deferral_loss(scores, 1, np.array([0.4, 0.9]), shape) == 0.0


def test_deferral_loss_reads_expert_cost():
    shape = ProblemShape(3, 2)
    scores = np.array([0.0, 0.0, 0.0, 5.0, 0.0])  # argmax at expert 1
    assert deferral_loss(scores, 0, np.array([0.4, 0.9]), shape) == 0.4


def test_deferral_loss_misclassification():
    shape = ProblemShape(2, 2)
    scores = np.array([0.0, 5.0, 0.0, 0.0])
    assert deferral_loss(scores, 0, np.array([0.5, 0.5]), shape) == 1.0


def test_deferral_loss_alt_hand_example():
    # defer to expert 2 with c = (1, 0): both forms give 0
    shape = ProblemShape(2, 2)
    scores = np.array([0.0, 0.0, 0.0, 5.0])
    costs = np.array([1.0, 0.0])
    assert deferral_loss_alt(scores, 0, costs, shape) == pytest.approx(0.0)
    assert deferral_loss(scores, 0, costs, shape) == 0.0


def test_deferral_loss_alt_zero_when_correct():
    shape = ProblemShape(4, 3)
    scores = np.array([0.0, 0.0, 9.0, 0.0, 0.0, 0.0, 0.0])
    costs = np.array([0.2, 0.8, 0.5])
    assert deferral_loss_alt(scores, 2, costs, shape) == 0.0


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 10), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_deferral_loss_forms_agree(n, n_e, seed):
    g = np.random.default_rng(seed)
    shape = ProblemShape(n, n_e)
    scores = g.standard_normal(n + n_e)
    y = int(g.integers(0, n))
    costs = g.uniform(0.0, 1.0, size=n_e)
    a = deferral_loss(scores, y, costs, shape)
    b = deferral_loss_alt(scores, y, costs, shape)
    assert abs(a - b) <= 1e-12


def test_two_stage_deferral_examples():
    assert two_stage_deferral_loss(np.array([2.0, 1.0]), np.array([0.3, 0.7])) == 0.3
    # tie broken to the lowest index
    assert two_stage_deferral_loss(np.array([0.0, 0.0]), np.array([0.3, 0.7])) == 0.3
    assert two_stage_deferral_loss(np.array([-1.0, 4.0, 2.0]),
                                   np.array([1.0, 0.0, 0.5])) == 0.0


def test_two_stage_deferral_width_mismatch():
    with pytest.raises(ValueError):
        two_stage_deferral_loss(np.array([1.0, 2.0]), np.array([0.3, 0.7, 0.1]))


def test_surrogate_single_hand_values():
    shape = ProblemShape(2, 1)
    psi = PsiSpec(q=1.0)
    scores = np.zeros(3)
    val = surrogate_single(scores, 0, np.array([1.0]), shape, psi)
    assert val == pytest.approx(2 / 3)
    val = surrogate_single(scores, 0, np.array([0.0]), shape, psi)
    assert val == pytest.approx(1 / 3)


def test_surrogate_single_saturates_to_zero():
    shape = ProblemShape(2, 1)
    scores = np.array([50.0, 0.0, 0.0])
    val = surrogate_single(scores, 0, np.array([0.3]), shape, PsiSpec(q=1.0))
    assert val == pytest.approx(0.0, abs=1e-12)


def test_psi_spec_validation():
    with pytest.raises(ValueError):
        PsiSpec(q=1.5)
    with pytest.raises(ValueError):
        PsiSpec(q=-0.1)
    with pytest.raises(ValueError):
        PsiSpec(q=0.5, clamp_epsilon=1e-3)


def test_surrogate_mae_is_q1_alias():
    g = np.random.default_rng(0)
    shape = ProblemShape(3, 2)
    psi = PsiSpec(q=1.0)
    for _ in range(50):
        scores = g.standard_normal(5)
        y = int(g.integers(0, 3))
        costs = g.uniform(0, 1, size=2)
        assert surrogate_mae(scores, y, costs, shape) == \
            surrogate_single(scores, y, costs, shape, psi)


def test_scale_realizability_limit():
    # a correct prediction scaled by 1e3 drives the surrogate to ~0 for q > 0
    shape = ProblemShape(3, 2)
    base = np.array([3.0, 1.0, 0.0, -1.0, 0.5])  # argmax at label 0
    costs = np.array([1.0, 1.0])
    for q in (0.3, 0.7, 1.0):
        val = surrogate_single(1e3 * base, 0, costs, shape, PsiSpec(q=q))
        assert val <= 1e-6
    # deferral case: chosen expert free, others cost 1
    base = np.array([0.0, 1.0, 0.0, 3.0, 0.5])  # argmax at expert 1
    val = surrogate_single(1e3 * base, 1, np.array([0.0, 1.0]), shape, PsiSpec(q=1.0))
    assert val <= 1e-6


def test_decision_scale_invariance():
    g = np.random.default_rng(7)
    for _ in range(100):
        scores = g.standard_normal(5)
        for alpha in (0.5, 3.0, 1e4):
            assert np.argmax(alpha * scores) == np.argmax(scores)


def test_baseline_verma_hand_values():
    shape = ProblemShape(2, 1)
    scores = np.zeros(3)
    # all costs 1: only the -log s_y term survives
    assert baseline_verma(scores, 0, np.array([1.0]), shape) == \
        pytest.approx(-np.log(1 / 3))
    # free expert adds its own log term
    assert baseline_verma(scores, 0, np.array([0.0]), shape) == \
        pytest.approx(-2 * np.log(1 / 3))
    assert baseline_verma(np.array([50.0, 0, 0]), 0, np.array([1.0]), shape) == \
        pytest.approx(0.0, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_baseline_mao_q0_equals_verma(n, n_e, seed):
    g = np.random.default_rng(seed)
    shape = ProblemShape(n, n_e)
    scores = g.standard_normal(n + n_e)
    y = int(g.integers(0, n))
    costs = g.uniform(0, 1, size=n_e)
    a = baseline_mao(scores, y, costs, shape, PsiSpec(q=0.0))
    b = baseline_verma(scores, y, costs, shape)
    assert abs(a - b) <= 1e-12


def test_baseline_mao_q1_hand_value():
    shape = ProblemShape(2, 1)
    val = baseline_mao(np.zeros(3), 0, np.array([0.0]), shape, PsiSpec(q=1.0))
    assert val == pytest.approx(4 / 3)


def test_two_stage_phi_hand_values():
    logistic = PhiSpec(PhiKind.LOGISTIC)
    assert two_stage_surrogate_phi(np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                                   logistic) == pytest.approx(np.log(2))
    assert two_stage_surrogate_phi(np.array([3.0, -1.0]), np.array([0.0, 0.0]),
                                   logistic) == 0.0
    hinge = PhiSpec(PhiKind.HINGE)
    assert two_stage_surrogate_phi(np.array([2.0, 0.0]), np.array([1.0, 1.0]),
                                   hinge) == pytest.approx(3.0)


def test_two_stage_phi_requires_two_experts():
    with pytest.raises(ValueError):
        two_stage_surrogate_phi(np.array([1.0, 2.0, 3.0]),
                                np.array([1.0, 0.0, 0.0]),
                                PhiSpec(PhiKind.LOGISTIC))


def test_two_stage_psi_hand_values():
    # n_e=2, q=0 coincides with the margin form at equal scores
    val = two_stage_surrogate_psi(np.zeros(2), np.array([1.0, 0.0]), PsiSpec(q=0.0))
    assert val == pytest.approx(np.log(2))
    # n_e=3, all costs 1, uniform scores, q=1
    val = two_stage_surrogate_psi(np.zeros(3), np.ones(3), PsiSpec(q=1.0))
    assert val == pytest.approx(2.0)


def test_two_stage_psi_realizable_limit():
    # one free expert, the others cost 1: saturating its score kills the loss
    costs = np.array([1.0, 0.0, 1.0])
    scores = np.array([0.0, 60.0, 0.0])
    for q in (0.0, 1.0):
        assert two_stage_surrogate_psi(scores, costs, PsiSpec(q=q)) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_two_stage_psi_matches_phi_for_two_experts(seed):
    # with Phi(t) = Psi(sigmoid(t)) and Psi = -log, the two forms coincide
    g = np.random.default_rng(seed)
    scores = g.standard_normal(2)
    costs = g.uniform(0, 1, size=2)
    psi_val = two_stage_surrogate_psi(scores, costs, PsiSpec(q=0.0))
    phi_val = two_stage_surrogate_phi(scores, costs, PhiSpec(PhiKind.LOGISTIC))
    assert abs(psi_val - phi_val) <= 1e-12


def test_loss_range_invariants():
    g = np.random.default_rng(42)
    shape = ProblemShape(3, 2)
    for _ in range(200):
        scores = g.standard_normal(5)
        y = int(g.integers(0, 3))
        costs = g.uniform(0, 1, size=2)
        assert deferral_loss(scores, y, costs, shape) in {0.0, 1.0} or \
            0.0 <= deferral_loss(scores, y, costs, shape) <= 1.0
        assert surrogate_mae(scores, y, costs, shape) >= -1e-12
        assert baseline_verma(scores, y, costs, shape) >= -1e-12
