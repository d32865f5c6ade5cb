import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from recurmix.errors import DimensionMismatchError, DomainError, NotComputableError
from recurmix.rng import stream
from recurmix.targets import (Cauchy, Cycle, HalfSpace, MultiNormal, ScaleProblem, SubsetPair,
                              TwoMode, cycle_closed_form, cycle_renewal_form,
                              independence_expected_M, make_target, subset_halfspace, subset_pair,
                              subset_probability)


# -- densities ----------------------------------------------------------------

@pytest.mark.parametrize("target", [TwoMode(2.0), TwoMode(6.0, phi_variance=0.5), Cauchy(),
                                    Cauchy(1.5, 0.3), MultiNormal(1, 2.0)])
def test_one_dimensional_density_integrates_to_one(target):
    total, _ = integrate.quad(lambda x: math.exp(target.log_density([x])), -np.inf, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("region", ["ordered", "cross"])
@pytest.mark.parametrize("sigma1", [1.0, 0.25])
def test_scale_problem_density_integrates_to_one(region, sigma1):
    target = ScaleProblem(sigma1, region)
    f = lambda x2, x1: math.exp(target.log_density([x1, x2]))  # noqa: E731
    pts = np.linspace(-10, 10, 9)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.dblquad(f, a, b, -10, 10, epsabs=1e-10)[0]
    assert total == pytest.approx(1.0, abs=1e-5)


def test_multinormal_density_matches_scipy():
    target = MultiNormal(3, 0.2, phi_variance=0.5)
    x = np.array([0.1, -0.3, 0.7])
    ref = stats.multivariate_normal(np.zeros(3), np.diag(target.component_sd ** 2)).logpdf(x)
    assert target.log_density(x) == pytest.approx(ref, rel=1e-12)


def test_cauchy_density_matches_scipy():
    assert Cauchy(1.0, 2.0).log_density([0.3]) == pytest.approx(stats.cauchy(1.0, 2.0).logpdf(0.3), rel=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        MultiNormal(3).log_density([0.0, 0.0])


@pytest.mark.parametrize("bad", [dict(d=0), dict(d=2, sigma1=0.0), dict(d=2, sigma1=-1.0), dict(d=1.5)])
def test_multinormal_rejects_bad_parameters(bad):
    with pytest.raises(DomainError):
        MultiNormal(**bad)


def test_make_target_dispatch():
    assert make_target("two_mode", a=4.0) == TwoMode(4.0)
    assert make_target("cycle", n=3) == Cycle(3)
    with pytest.raises(DomainError):
        make_target("banana")


# -- direct samplers ------------------------------------------------------------

@pytest.mark.parametrize("target", [MultiNormal(2, 0.3), TwoMode(3.0), ScaleProblem(0.25),
                                    ScaleProblem(0.25, "cross")])
def test_direct_sampler_hits_subset_probability(target):
    X = target.sample(stream(5, 1), 200_000)
    assert X.shape == (200_000, target.dimension)
    sp = subset_pair(0, -0.4, 0.4, target)
    in_A, in_B = sp.membership(X)
    for frac, p in ((in_A.mean(), sp.pi_A), (in_B.mean(), sp.pi_B)):
        assert abs(frac - p) < 5 * math.sqrt(p * (1 - p) / X.shape[0])


def test_scale_problem_sampler_matches_marginal_distribution():
    target = ScaleProblem(0.25)
    x = target.sample(stream(2), 20_000)[:, 0]
    cdf = np.vectorize(lambda t: integrate.quad(target.marginal_pdf, -12, t, points=[0.0])[0])
    assert stats.kstest(x, cdf).pvalue > 1e-3


# -- subset probabilities ----------------------------------------------------------

def test_multinormal_subset_probability_matches_normal_cdf():
    target = MultiNormal(3, 0.2, phi_variance=0.5)
    assert subset_probability(target, subset_halfspace(1, "below", -1.0)) == pytest.approx(
        stats.norm.cdf(-1.0 / math.sqrt(0.5)), rel=1e-12)
    assert subset_probability(target, subset_halfspace(0, "above", 0.1)) == pytest.approx(
        stats.norm.sf(0.1 / (0.2 * math.sqrt(0.5))), rel=1e-12)
    box = subset_probability(target, subset_halfspace("all", "below", 0.0))
    assert box == pytest.approx(0.125, rel=1e-12)


@pytest.mark.parametrize("a,expected", [(1.0, 0.079), (1.5, 0.016), (2.0, 0.0024)])
def test_half_variance_kernel_gives_published_subset_probabilities(a, expected):
    # published multi-normal table probabilities for thresholds 1, 1.5 and 2
    p = subset_probability(MultiNormal(10, phi_variance=0.5), subset_halfspace(1, "below", -a))
    assert p == pytest.approx(expected, rel=0.06)


@pytest.mark.parametrize("target", [TwoMode(2.0), TwoMode(5.0, 0.5), Cauchy(0.5, 2.0)])
@pytest.mark.parametrize("t", [-1.0, 0.3, 2.5])
def test_one_dimensional_subset_probability_matches_quadrature(target, t):
    f = lambda x: math.exp(target.log_density([x]))  # noqa: E731
    below = integrate.quad(f, -np.inf, t, limit=200)[0]
    assert subset_probability(target, subset_halfspace(0, "below", t)) == pytest.approx(below, abs=1e-9)
    assert subset_probability(target, subset_halfspace(0, "above", t)) == pytest.approx(1 - below, abs=1e-9)


@pytest.mark.parametrize("region", ["ordered", "cross"])
@pytest.mark.parametrize("sigma1,t", [(1.0, -0.4), (0.25, -0.4), (0.25, 0.4), (0.05, -0.4)])
def test_scale_problem_subset_probability_matches_double_quadrature(region, sigma1, t):
    target = ScaleProblem(sigma1, region)
    f = lambda x2, x1: math.exp(target.log_density([x1, x2]))  # noqa: E731
    edges = [-12.0, -1.0, -0.1, 0.0, 0.1, 1.0, 12.0]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        lo, hi = a, min(b, t)
        if hi > lo:
            total += integrate.dblquad(f, lo, hi, -12, 12, epsabs=1e-12)[0]
    assert subset_probability(target, subset_halfspace(0, "below", t)) == pytest.approx(total, abs=2e-6)


def test_scale_problem_box_not_computable():
    with pytest.raises(NotComputableError):
        subset_probability(ScaleProblem(0.5), subset_halfspace("all", "below", 0.0))


def test_subset_pair_drops_degenerate_probabilities():
    sp = subset_pair(0, -0.4, 0.4, ScaleProblem(0.01))
    assert sp.pi_A is None and sp.independence_M is None


# -- subsets --------------------------------------------------------------------

def test_halfspace_membership_is_strict():
    A = subset_halfspace(0, "below", 1.0)
    assert A([0.999]) and not A([1.0])
    box = subset_halfspace("all", "above", 0.0)
    assert box([1.0, 2.0]) and not box([1.0, -2.0])


def test_subset_pair_rejects_overlap():
    with pytest.raises(DomainError):
        subset_pair(0, 1.0, 0.5)
    with pytest.raises(DomainError):
        SubsetPair(subset_halfspace(0, "below", 0.0), subset_halfspace(1, "above", 0.0))


def test_halfspace_validation():
    with pytest.raises(DomainError):
        HalfSpace(0, "sideways", 0.0)
    with pytest.raises(DomainError):
        HalfSpace(-1, "below", 0.0)
    with pytest.raises(DomainError):
        HalfSpace(0, "below", math.inf)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-3, 3), gap=st.floats(0, 3), comp=st.sampled_from([0, 1, "all"]),
       seed=st.integers(0, 2**32))
def test_subsets_are_disjoint(a, gap, comp, seed):
    sp = subset_pair(comp, a, a + gap)
    X = np.random.default_rng(seed).normal(scale=3, size=(500, 2))
    in_A, in_B = sp.membership(X)
    assert not np.any(in_A & in_B)


# -- closed-form oracles ---------------------------------------------------------

@settings(max_examples=80)
@given(p=st.floats(1e-4, 1 - 1e-4), q=st.floats(1e-4, 1 - 1e-4))
def test_independence_M_symmetric_and_at_least_four_for_a_partition(p, q):
    assert independence_expected_M(p, q) == independence_expected_M(q, p)
    assert independence_expected_M(p, 1 - p) >= 4 - 1e-9


@settings(max_examples=80)
@given(p=st.floats(1e-4, 0.5), q=st.floats(1e-4, 0.5), f=st.floats(1.01, 1.9))
def test_independence_M_decreases_with_probability(p, q, f):
    assert independence_expected_M(min(p * f, 0.999), q) < independence_expected_M(p, q)


def test_independence_M_rejects_bad_probabilities():
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            independence_expected_M(bad, 0.5)


def _renewal_oracle(n):
    """Expected interval length from the transition matrix: one over the B -> A flow."""
    ring = Cycle(n)
    P = ring.transition_matrix()
    pi = ring.stationary
    labels = np.arange(1, ring.n_states + 1)
    A, B = labels % 2 == 1, labels % 2 == 0
    flow = float(pi[B] @ P[np.ix_(B, A)].sum(axis=1))
    M = 1.0 / flow
    return M, M / (1 / pi[A].sum() + 1 / pi[B].sum())


@pytest.mark.parametrize("n", [1, 2, 5, 10, 25])
def test_cycle_renewal_form_matches_transition_matrix(n):
    M, H = _renewal_oracle(n)
    assert cycle_renewal_form(n) == pytest.approx((M, H), rel=1e-12)


def test_cycle_matrix_is_doubly_stochastic():
    P = Cycle(4).transition_matrix()
    assert np.allclose(P.sum(axis=0), 1) and np.allclose(P.sum(axis=1), 1)


def test_cycle_closed_form_values():
    assert cycle_closed_form(1) == pytest.approx((3.0, 2 * 9 / 27))
    assert cycle_closed_form(1) == pytest.approx(cycle_renewal_form(1))
    assert cycle_closed_form(5)[0] == pytest.approx(25 / 11)


@settings(max_examples=50)
@given(n=st.integers(1, 10_000))
def test_cycle_H_below_one(n):
    assert cycle_renewal_form(n)[1] < 1
    assert cycle_closed_form(n)[1] < 1


def test_cycle_rejects_bad_size():
    with pytest.raises(DomainError):
        Cycle(0)
    with pytest.raises(DomainError):
        cycle_closed_form(2.5)
