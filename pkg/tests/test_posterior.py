import math

import numpy as np
import pytest
from scipy.special import beta as beta_fn
from scipy.special import gamma as gamma_fn

from ntrsurv._numerics import betaln
from ntrsurv.data import Dataset, GenerativeModel, generate_dataset, risk_summary
from ntrsurv.estimators import aalen_nelson
from ntrsurv.posterior import (BetaExact, BetaMixture, continuous_part_moments, jump_moment_Ck,
                               jump_raw_moment, posterior_fixed_moments, posterior_update)
from ntrsurv.priors import (AlphaFamily, BetaProcess, DirichletInduced, GammaProcess,
                            check_conditions, prior_moments)


def one_event(y, d=1):
    # one death at t=1 with y subjects at risk
    times = [1.0] * d + [5.0] * (y - d)
    events = [1] * d + [0] * (y - d)
    return risk_summary(Dataset.from_arrays(times, events))


def test_beta_jump_law_is_beta():
    post = posterior_update(BetaProcess(1.0), one_event(10))
    law = post.fixed_jumps[0]
    assert law.closed_form == BetaExact(1.0, 10.0)
    assert law.mean == pytest.approx(1 / 11)
    xs = np.linspace(0.01, 0.99, 7)
    ratio = law.density(xs) / (1 - xs) ** 9
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-10)


def test_alpha_mixture_weights():
    post = posterior_update(AlphaFamily(1.0), one_event(5))
    form = post.fixed_jumps[0].closed_form
    assert isinstance(form, BetaMixture)
    np.testing.assert_allclose(form.weights, (6 / 7, 1 / 7), rtol=1e-12)


def test_tied_deaths_beta_shape():
    with pytest.warns(UserWarning):
        post = posterior_update(BetaProcess(2.0), one_event(6, d=2))
    assert post.fixed_jumps[0].closed_form == BetaExact(2.0, 6.0)


def test_ck_examples():
    assert jump_moment_Ck(BetaProcess(1.0), 0.0, 9, 1) == pytest.approx(1 / 110, rel=1e-12)
    for prior in (BetaProcess(3.0), AlphaFamily(0.5), GammaProcess(2.0)):
        assert jump_moment_Ck(prior, 0.0, 0, 0) == pytest.approx(1.0, rel=1e-9)


def test_ck_alpha_matches_b_alpha_combination():
    a, y = 0.5, 100
    prior = AlphaFamily(a)
    q = jump_moment_Ck(prior, 0.0, y, 1, method="quadrature")
    closed = prior.weight * (beta_fn(2, y + 1) + gamma_fn(a + 2) * gamma_fn(y + 1) / gamma_fn(y + a + 3))
    assert q == pytest.approx(closed, rel=1e-8)


@pytest.mark.parametrize("prior", [BetaProcess(1.0), BetaProcess(2.5), AlphaFamily(0.25),
                                   AlphaFamily(1.0)], ids=repr)
@pytest.mark.parametrize("y", [0, 1, 10, 1000, 100000])
def test_ck_closed_vs_quadrature(prior, y):
    for k in (0, 1, 2):
        closed = jump_moment_Ck(prior, 0.0, y, k, method="closed")
        quad = jump_moment_Ck(prior, 0.0, y, k, method="quadrature")
        assert abs(quad / closed - 1) < 1e-8


def test_ck_closed_unavailable_for_gamma():
    with pytest.raises(ValueError):
        jump_moment_Ck(GammaProcess(), 0.0, 3, 1, method="closed")


def test_raw_moments():
    law = posterior_update(BetaProcess(1.0), one_event(10)).fixed_jumps[0]
    assert jump_raw_moment(law, 0) == 1.0
    assert jump_raw_moment(law, 1) == pytest.approx(1 / 11)
    uniform = posterior_update(BetaProcess(1.0), one_event(1)).fixed_jumps[0]
    assert jump_raw_moment(uniform, 1) == pytest.approx(0.5)
    # beyond the cached range the moment is computed by quadrature
    assert jump_raw_moment(uniform, 6) == pytest.approx(1 / 7, rel=1e-9)


@pytest.mark.parametrize("prior", [BetaProcess(1.5), AlphaFamily(0.5), GammaProcess(1.0),
                                   DirichletInduced(2.0)], ids=repr)
def test_raw_moments_decrease(prior):
    post = posterior_update(prior, one_event(7))
    m = post.fixed_jumps[0].moments
    assert m[0] == pytest.approx(1.0)
    assert np.all(np.diff(m) < 0)


def test_fixed_moments_single_event():
    post = posterior_update(BetaProcess(1.0), one_event(10))
    mean, var = posterior_fixed_moments(post, 2.0)
    assert mean == pytest.approx(1 / 11)
    assert var == pytest.approx(10 / (121 * 12))
    assert posterior_fixed_moments(post, 0.5) == (0.0, 0.0)


def test_fixed_mean_alpha_closed_vs_quadrature():
    post = posterior_update(AlphaFamily(1.0), one_event(6))
    mean, _ = posterior_fixed_moments(post, 2.0)
    expect = (beta_fn(2, 6) + beta_fn(3, 6)) / (beta_fn(1, 6) + beta_fn(2, 6))
    assert mean == pytest.approx(expect, rel=1e-10)
    c = jump_moment_Ck(AlphaFamily(1.0), 1.0, 5, [0, 1], method="quadrature")
    assert mean == pytest.approx(c[1] / c[0], rel=1e-10)


def test_event_locations_match():
    d = generate_dataset(GenerativeModel(), 40, np.random.default_rng(1))
    r = risk_summary(d)
    post = posterior_update(GammaProcess(), r)
    assert [j.location for j in post.fixed_jumps] == r.event_times.tolist()


@pytest.mark.parametrize("prior", [BetaProcess(1.0), AlphaFamily(0.5), DirichletInduced(2.0),
                                   GammaProcess(1.0)], ids=repr)
def test_empty_data_posterior_is_prior(prior):
    post = posterior_update(prior)
    assert post.fixed_jumps == ()
    xs = np.array([0.01, 0.3, 0.9])
    np.testing.assert_allclose(post.continuous_density(0.5, xs), prior.levy_density(0.5, xs))
    cm = continuous_part_moments(post, 2.0)
    pm = prior_moments(prior, 2.0)
    np.testing.assert_allclose(cm, pm, rtol=1e-9)


def test_continuous_mean_constant_risk_set():
    m, t = 20, 1.5
    r = risk_summary(Dataset.from_arrays([10.0] * m, [0] * m))
    post = posterior_update(BetaProcess(1.0, 1.0), r)
    mean, _ = continuous_part_moments(post, t)
    assert mean == pytest.approx(t / (m + 1), rel=1e-12)


def test_continuous_mean_bound():
    d = generate_dataset(GenerativeModel(), 80, np.random.default_rng(4))
    r = risk_summary(d)
    prior = BetaProcess(2.0, 1.0)
    post = posterior_update(prior, r)
    t = 1.5
    mean, _ = continuous_part_moments(post, t)
    sup = check_conditions(prior, t).a1_sup
    # lambda(s) B(1, Y(s)) = 1 / Y(s), integrated piecewise
    lo, hi, ys = r.risk_intervals(t)
    bound = sup * float(np.sum((hi - lo) / ys))
    assert mean <= bound


@pytest.mark.parametrize("prior", [BetaProcess(1.0), AlphaFamily(0.25), GammaProcess(2.0)], ids=repr)
def test_shrinkage_monotone(prior):
    ys = [0, 1, 5, 20, 100]
    ratios = [jump_moment_Ck(prior, 0.0, y, 1) / jump_moment_Ck(prior, 0.0, y, 0) for y in ys]
    assert np.all(np.diff(ratios) < 0)


def test_stirling_limit():
    for a in (0.25, 0.5, 1.0):
        n = 1e6
        val = math.exp(a * math.log(n) + betaln(a, n) - math.lgamma(a))
        assert abs(val - 1) < 1e-4


def test_scaled_difference_to_aalen_nelson_bounded():
    prior = BetaProcess(1.0)
    scaled = []
    for n in (100, 1000, 10000):
        d = generate_dataset(GenerativeModel(), n, np.random.default_rng(n))
        r = risk_summary(d)
        post = posterior_update(prior, r)
        grid = r.event_times[r.event_times <= 2.0]
        mean, _ = posterior_fixed_moments(post, grid)
        scaled.append(n * np.max(np.abs(mean - aalen_nelson(r)(grid))))
    assert max(scaled) < 3 * min(scaled) + 1.0
