import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shuffled.models import GaussianMeansModel, ModelError, MultinomialModel
from shuffled.oracle import (
    exact_conditional_theta,
    exact_em_step,
    exact_mle,
    exact_permutation_posterior,
    exact_shuffled_loglik,
    sort_movable,
)
from shuffled.permute import GroupError, Permutation, ShuffleGroup, apply

G2 = ShuffleGroup.full(2)
W_ID = 1 / (1 + math.exp(-4))  # normalise {1, e^-4}


def brute_loglik(model, x, psi, group):
    """Direct average of densities, no log-sum-exp."""
    vals = [math.exp(model.log_density(x, apply(pi, psi))) for pi in group.enumerate()]
    return math.log(sum(vals) / len(vals))


def test_loglik_examples():
    g = GaussianMeansModel(2)
    assert exact_shuffled_loglik(g, [0, 2], [0, 2], G2) == pytest.approx(math.log((1 + math.exp(-4)) / 2))
    x, psi = [0.4, 1.0, -2.0], [1.0, 0.0, 0.5]
    gm = GaussianMeansModel(3)
    assert exact_shuffled_loglik(gm, x, psi, ShuffleGroup.trivial(3)) == pytest.approx(gm.log_density(x, psi))
    m = MultinomialModel(2, 3)
    # 1/8 at (1/2, 1/2) against the average of 4/27 and 2/27 = 1/9 at (2/3, 1/3)
    assert exact_shuffled_loglik(m, [2, 1], [0.5, 0.5], G2) == pytest.approx(math.log(1 / 8))
    assert exact_shuffled_loglik(m, [2, 1], [2 / 3, 1 / 3], G2) == pytest.approx(math.log(1 / 9))


def test_loglik_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = int(rng.integers(2, 6))
        m = GaussianMeansModel(p, 1.5)
        x, psi = rng.normal(size=p), rng.normal(size=p)
        assert exact_shuffled_loglik(m, x, psi, ShuffleGroup.full(p)) == pytest.approx(brute_loglik(m, x, psi, ShuffleGroup.full(p)), rel=1e-12)


def test_loglik_stable_far_from_data():
    m = GaussianMeansModel(3)
    val = exact_shuffled_loglik(m, [0.0, 0.0, 0.0], [100.0, 101.0, 102.0], ShuffleGroup.full(3))
    assert np.isfinite(val) and val == pytest.approx(-(100**2 + 101**2 + 102**2) / 2)


def test_cap_exceeded():
    with pytest.raises(GroupError):
        exact_shuffled_loglik(GaussianMeansModel(9), np.zeros(9), np.zeros(9), ShuffleGroup.full(9))


def test_posterior_examples():
    g = GaussianMeansModel(2)
    post = exact_permutation_posterior(g, [0, 2], [0, 2], G2)
    assert post.weight_of(Permutation((0, 1))) == pytest.approx(0.982014, abs=1e-6)
    assert post.weight_of(Permutation((1, 0))) == pytest.approx(0.017986, abs=1e-6)
    assert post.weights.sum() == pytest.approx(1, abs=1e-12)
    flat = exact_permutation_posterior(GaussianMeansModel(3), [0, 1, 5], [2, 2, 2], ShuffleGroup.full(3))
    assert np.allclose(flat.weights, 1 / 6)
    single = exact_permutation_posterior(g, [0, 2], [0, 2], ShuffleGroup.trivial(2))
    assert single.as_dict() == {(0, 1): 1.0}


def test_posterior_all_zero():
    m = MultinomialModel(2, 2)
    with pytest.raises(ModelError):
        exact_permutation_posterior(m, [1, 1], [1.0, 0.0], G2)


def test_conditional_theta_examples():
    g = GaussianMeansModel(2)
    theta = exact_conditional_theta(g, [0, 2], [0, 2], G2)
    assert theta == pytest.approx([2 * (1 - W_ID), 2 * W_ID], abs=1e-12)
    assert theta == pytest.approx([0.035972, 1.964028], abs=1e-6)
    assert np.allclose(exact_conditional_theta(GaussianMeansModel(3), [1, 2, 9], [4, 4, 4], ShuffleGroup.full(3)), 4)
    assert np.array_equal(exact_conditional_theta(g, [0, 2], [0.3, 1.0], ShuffleGroup.trivial(2)), [0.3, 1.0])


def test_em_step_examples():
    m = MultinomialModel(2, 3)
    assert exact_em_step(m, [2, 1], [2 / 3, 1 / 3], G2) == pytest.approx([5 / 9, 4 / 9], abs=1e-12)
    assert exact_em_step(m, [2, 1], [0.5, 0.5], G2) == pytest.approx([0.5, 0.5], abs=1e-12)
    g = GaussianMeansModel(3)
    assert np.allclose(exact_em_step(g, [1, 2, 3], [0, 0, 7], ShuffleGroup.trivial(3)), [1, 2, 3])


def test_mle_binomial_example():
    fit = exact_mle(MultinomialModel(2, 3), [2, 1], G2)
    assert fit.converged
    assert fit.psi_hat == pytest.approx([0.5, 0.5], abs=1e-6)
    assert fit.theta_shuffle == pytest.approx([0.5, 0.5], abs=1e-6)


def test_mle_identity_group_one_step():
    x = [0.5, -1.0, 3.0]
    fit = exact_mle(GaussianMeansModel(3), x, ShuffleGroup.trivial(3))
    assert fit.iterations == 1 and fit.converged
    assert np.array_equal(fit.psi_raw, x)


def test_mle_nonconvergence_flag():
    fit = exact_mle(GaussianMeansModel(4), [-2, -1, 1, 2], ShuffleGroup.full(4), max_iter=3)
    assert not fit.converged and fit.iterations == 3


def test_sort_movable():
    g = ShuffleGroup(4, (0, 2, 3))
    assert np.array_equal(sort_movable([5, 9, 1, 3], g), [1, 9, 3, 5])


gauss_case = st.integers(2, 5).flatmap(
    lambda p: st.lists(st.floats(-3, 3, allow_nan=False), min_size=p, max_size=p)
)


@settings(max_examples=25, deadline=None)
@given(gauss_case)
def test_em_monotone_gaussian(x):
    m = GaussianMeansModel(len(x))
    g = ShuffleGroup.full(len(x))
    psi = m.stat(x)
    prev = exact_shuffled_loglik(m, x, psi, g)
    for _ in range(30):
        psi = exact_em_step(m, x, psi, g)
        cur = exact_shuffled_loglik(m, x, psi, g)
        assert cur >= prev - 1e-12
        prev = cur


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5).flatmap(lambda p: st.lists(st.integers(0, 6), min_size=p, max_size=p)).filter(lambda v: sum(v) > 0))
def test_em_monotone_multinomial(x):
    m = MultinomialModel(len(x), sum(x))
    g = ShuffleGroup.full(len(x))
    psi = m.initial_psi(np.array(x))
    prev = exact_shuffled_loglik(m, x, psi, g)
    for _ in range(30):
        psi = exact_em_step(m, x, psi, g)
        cur = exact_shuffled_loglik(m, x, psi, g)
        assert cur >= prev - 1e-12
        prev = cur


@settings(max_examples=25, deadline=None)
@given(gauss_case, st.randoms(use_true_random=False))
def test_fixed_point_properties(x, r):
    p = len(x)
    m = GaussianMeansModel(p)
    g = ShuffleGroup.full(p)
    fit = exact_mle(m, x, g, tol=1e-12)
    x = np.asarray(x)
    # convex combinations of permutations preserve the sum
    assert fit.theta_shuffle.sum() == pytest.approx(x.sum(), abs=1e-9)
    assert fit.psi_hat.sum() == pytest.approx(x.sum(), abs=1e-9)
    assert np.ptp(fit.theta_shuffle) <= np.ptp(x) + 1e-12
    assert fit.psi_hat.min() >= x.min() - 1e-12 and fit.psi_hat.max() <= x.max() + 1e-12
    # likelihood symmetric under the group
    perm = Permutation(tuple(r.sample(range(p), p)))
    assert exact_shuffled_loglik(m, x, apply(perm, fit.psi_raw), g) == pytest.approx(fit.loglik, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(gauss_case, gauss_case)
def test_conditional_theta_within_range(x, psi):
    p = min(len(x), len(psi))
    x, psi = np.asarray(x[:p]), np.asarray(psi[:p])
    theta = exact_conditional_theta(GaussianMeansModel(p), x, psi, ShuffleGroup.full(p))
    assert np.all(theta >= psi.min() - 1e-12) and np.all(theta <= psi.max() + 1e-12)


def test_relabeling_invariance():
    rng = np.random.default_rng(11)
    m = GaussianMeansModel(5)
    g = ShuffleGroup.full(5)
    x = rng.normal(size=5) * 2
    base = exact_mle(m, x, g, tol=1e-12)
    for _ in range(3):
        pi = g.sample(rng)
        fit = exact_mle(m, apply(pi, x), g, tol=1e-12)
        assert fit.psi_hat == pytest.approx(base.psi_hat, abs=1e-8)
        assert apply(pi, base.theta_shuffle) == pytest.approx(fit.theta_shuffle, abs=1e-8)


def test_identity_group_mle_equals_usual_mle():
    x = np.array([3, 0, 5, 2])
    m = MultinomialModel(4, 10)
    fit = exact_mle(m, x, ShuffleGroup.trivial(4))
    assert np.allclose(fit.psi_raw, x / 10)
    assert np.allclose(fit.theta_shuffle, x / 10)


def test_subset_group_fixes_complement():
    x = np.array([0.0, 3.0, 1.0, 10.0])
    fit = exact_mle(GaussianMeansModel(4), x, ShuffleGroup.fixing(4, [3]))
    assert fit.psi_raw[3] == pytest.approx(10.0, abs=1e-12)
    assert fit.theta_shuffle[3] == pytest.approx(10.0, abs=1e-12)
