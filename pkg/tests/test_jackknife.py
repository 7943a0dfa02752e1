"""Pseudovalues and variance estimators.

Hand values below are exact fractions worked from the definitions on the
sample {1, 2, 3} with g(x) = x^2: leave-one-out means {2.5, 2, 1.5} give
T_loo = {6.25, 4, 2.25}, Q' = {-4.5, 0, 3.5}, v_jack = 579/36; the squared
pseudovalues {81/4, 0, 49/4} give tau^2 = 4993/72 untruncated and 3061/72
truncated at 15.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jackvar._rng import TAG_BOOTSTRAP, derive_seed, indices, normals, uniforms
from jackvar.errors import ConfigError
from jackvar.functionals import TrimmedLSpec, builtin_weight, functional_from_key
from jackvar.jackknife import (
    PseudovalueSet,
    VarianceEstimates,
    estimate_variances,
    ij_trimmed_double_sum,
    infinitesimal_jackknife,
    pseudovalue_bootstrap,
    pseudovalues,
    tau2,
    v_jack,
)
from jackvar.measures import make_empirical, quantile

SQUARE = functional_from_key("square_of_mean")
MEAN = functional_from_key("mean")
TRIMMED = TrimmedLSpec(builtin_weight("raised_cosine", 0.2))

float_lists = st.lists(st.floats(-100, 100).map(lambda v: round(v, 2)), min_size=2, max_size=25)


def test_hand_values_square_of_mean():
    ps = pseudovalues(SQUARE, [1.0, 2.0, 3.0])
    assert ps.t_full == pytest.approx(4.0, abs=1e-14)
    np.testing.assert_allclose(ps.q_prime, [-4.5, 0.0, 3.5], atol=1e-12)
    np.testing.assert_allclose(ps.q, [-0.5, 4.0, 7.5], atol=1e-12)
    assert v_jack(ps) == pytest.approx(579.0 / 36.0, abs=1e-12)
    assert infinitesimal_jackknife(SQUARE, [1.0, 2.0, 3.0]) == pytest.approx(
        32.0 / 3.0, abs=1e-12
    )


def test_q_and_q_prime_differ_by_the_full_value():
    xs = normals(17, 30)
    ps = pseudovalues(SQUARE, xs)
    np.testing.assert_allclose(ps.q - ps.q_prime, ps.t_full, atol=1e-12)
    # the constant shift leaves the variance untouched
    dev = ps.q - ps.q.mean()
    assert float(dev @ dev) / (ps.n - 1) == pytest.approx(v_jack(ps), rel=1e-12)


@given(float_lists)
@settings(max_examples=150, deadline=None)
def test_mean_pseudovalues_recover_data_and_sample_variance(values):
    ps = pseudovalues(MEAN, values)
    np.testing.assert_allclose(ps.q, values, atol=1e-9)
    want = float(np.var(values, ddof=1))
    assert v_jack(ps) == pytest.approx(want, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("f", [MEAN, SQUARE, functional_from_key("exp_of_mean"), TRIMMED])
def test_fast_path_agrees_with_generic_reevaluation(f):
    xs = np.round(normals(23, 40), 2)  # rounding plants ties
    fast = pseudovalues(f, xs, method="fast")
    slow = pseudovalues(f, xs, method="generic")
    assert fast.t_full == pytest.approx(slow.t_full, rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(fast.q_prime, slow.q_prime, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(fast.q, slow.q, rtol=1e-9, atol=1e-9)


def test_pseudovalue_input_validation():
    with pytest.raises(ConfigError, match="at least 2"):
        pseudovalues(MEAN, [1.0])
    with pytest.raises(ConfigError, match="method"):
        pseudovalues(MEAN, [1.0, 2.0], method="turbo")


def test_ij_smooth_mean_closed_form():
    xs = uniforms(31, 50) * 4.0
    mean = xs.mean()
    phi = 2.0 * mean * (xs - mean)
    assert infinitesimal_jackknife(SQUARE, xs) == pytest.approx(
        float(phi @ phi) / xs.size, rel=1e-12
    )


def test_ij_trimmed_two_routes_agree():
    xs = normals(47, 120)
    a = infinitesimal_jackknife(TRIMMED, xs)
    b = ij_trimmed_double_sum(TRIMMED, xs)
    assert a == pytest.approx(b, rel=1e-10)


def test_ij_trimmed_matches_influence_square_sum():
    xs = normals(53, 60)
    em = make_empirical(xs)
    from jackvar.functionals import influence

    phi = influence(TRIMMED, em, xs)
    assert infinitesimal_jackknife(TRIMMED, xs) == pytest.approx(
        float(phi @ phi) / xs.size, rel=1e-9
    )


def test_trimmed_loo_values_match_direct_order_statistics():
    # leave-one-out value recomputed from scratch on the reduced sample
    from jackvar.functionals import eval_functional

    xs = np.round(uniforms(61, 15) * 9.0, 1)
    ps = pseudovalues(TRIMMED, xs)
    for i in (0, 7, 14):
        reduced = np.delete(xs, i)
        t_loo = eval_functional(TRIMMED, make_empirical(reduced))
        want = (xs.size - 1) * (ps.t_full - t_loo)
        assert ps.q_prime[i] == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_tau2_hand_values_and_truncation():
    ps = pseudovalues(SQUARE, [1.0, 2.0, 3.0])
    assert tau2(ps, float("inf")) == pytest.approx(4993.0 / 72.0, abs=1e-12)
    assert tau2(ps, 15.0) == pytest.approx(3061.0 / 72.0, abs=1e-12)
    assert tau2(ps, 0.0) == 0.0
    with pytest.raises(ConfigError, match="nonnegative"):
        tau2(ps, -1.0)


def test_tau2_monotone_in_the_bound():
    ps = pseudovalues(SQUARE, normals(71, 200))
    bounds = [0.5, 2.0, 10.0, float("inf")]
    vals = [tau2(ps, b) for b in bounds]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_bootstrap_matches_inline_reference():
    ps = pseudovalues(SQUARE, normals(83, 25))
    seed = 424242
    got = pseudovalue_bootstrap(ps, float("inf"), seed, 7)
    sq = np.square(ps.q_prime)
    base = sq.sum()
    want = []
    for r in range(7):
        idx = indices(derive_seed(seed, TAG_BOOTSTRAP, r), ps.n, ps.n)
        want.append((sq[idx].sum() - base) / np.sqrt(ps.n))
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_bootstrap_rounds_are_stable_under_rep_count():
    ps = pseudovalues(TRIMMED, normals(89, 64))
    short = pseudovalue_bootstrap(ps, float("inf"), 7, 23)
    long = pseudovalue_bootstrap(ps, float("inf"), 7, 200)
    np.testing.assert_array_equal(short, long[:23])
    with pytest.raises(ConfigError):
        pseudovalue_bootstrap(ps, float("inf"), 7, 0)


def test_bootstrap_statistic_is_centered():
    # E sq(Q*) sum equals the observed sum, so the statistic has mean zero
    ps = pseudovalues(SQUARE, normals(97, 100))
    stats = pseudovalue_bootstrap(ps, float("inf"), 11, 4000)
    se = stats.std(ddof=1) / np.sqrt(stats.size)
    assert abs(stats.mean()) < 5.0 * se


def test_bootstrap_respects_truncation_bound():
    ps = pseudovalues(SQUARE, normals(101, 40))
    bound = float(np.median(np.square(ps.q_prime)))
    capped = pseudovalue_bootstrap(ps, bound, 3, 50)
    free = pseudovalue_bootstrap(ps, float("inf"), 3, 50)
    assert not np.allclose(capped, free)


def test_estimate_variances_wrapper():
    xs = normals(103, 50)
    est = estimate_variances(SQUARE, xs)
    assert est.n == 50
    assert est.v_jack == pytest.approx(v_jack(pseudovalues(SQUARE, xs)), rel=1e-12)
    assert est.ij == pytest.approx(infinitesimal_jackknife(SQUARE, xs), rel=1e-12)
    with pytest.raises(ConfigError):
        VarianceEstimates(v_jack=-1.0, ij=0.0, n=5)


def test_pseudovalue_set_n():
    ps = PseudovalueSet(q=np.zeros(4), q_prime=np.zeros(4), t_full=0.0)
    assert ps.n == 4


def test_trimmed_tail_pseudovalues_collapse_to_one_atom_per_side():
    # removing any datum strictly below the trimming window leaves the
    # same weighted order statistics, hence identical pseudovalues
    xs = normals(107, 400)
    ps = pseudovalues(TRIMMED, xs)
    em = make_empirical(xs)
    lo_cut = quantile(em, 0.15)
    lower = ps.q_prime[xs < lo_cut]
    assert lower.size > 10
    assert np.ptp(lower) == 0.0
