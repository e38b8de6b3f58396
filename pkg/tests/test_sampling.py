import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ntrsurv.data import Dataset, GenerativeModel, generate_dataset, risk_summary
from ntrsurv.exceptions import ConfigError, DataError, NumericalError
from ntrsurv.posterior import (BetaExact, BetaMixture, GENERIC, JumpLaw, continuous_part_moments,
                               posterior_fixed_moments, posterior_update)
from ntrsurv.priors import (AlphaFamily, BetaProcess, CustomPrior, DirichletInduced,
                            GammaProcess, prior_moments)
from ntrsurv.sampling import (HazardPath, SamplerConfig, credible_interval, sample_chf_path,
                              sample_chf_values, sample_continuous_part, sample_fixed_part,
                              sample_jump, sample_jumps)


def law(form, prior=None, y_plus=5, d=1, t=1.0):
    prior = BetaProcess(1.0) if prior is None else prior
    return JumpLaw(t, d, y_plus, prior, form, np.ones(5))


def dataset(n=30, seed=2):
    return generate_dataset(GenerativeModel(), n, np.random.default_rng(seed))


def test_beta_exact_mean():
    x = sample_jumps(law(BetaExact(1.0, 10.0)), np.random.default_rng(0), 10 ** 5)
    sd = np.sqrt(10 / (121 * 12))
    assert abs(x.mean() - 1 / 11) < 3 * sd / np.sqrt(10 ** 5)
    assert np.all((x > 0) & (x <= 1))


def test_beta_mixture_mean():
    form = BetaMixture((6 / 7, 1 / 7), ((1.0, 6.0), (2.0, 6.0)))
    x = sample_jumps(law(form), np.random.default_rng(1), 10 ** 5)
    expect = (6 / 7) * (1 / 7) + (1 / 7) * (2 / 8)
    assert abs(x.mean() - expect) < 3 * x.std() / np.sqrt(10 ** 5)
    assert expect == pytest.approx(0.1582, abs=1e-4)


def test_beta_exact_ks():
    # one retry keeps the 1% test from flaking
    for seed in (0, 1):
        x = sample_jumps(law(BetaExact(2.0, 7.0)), np.random.default_rng(seed), 10 ** 4)
        if stats.kstest(x, stats.beta(2.0, 7.0).cdf).pvalue > 0.01:
            return
    pytest.fail("Beta draws failed the KS test twice")


def test_generic_inversion_matches_moments():
    post = posterior_update(GammaProcess(1.0), risk_summary(dataset(20)))
    jl = post.fixed_jumps[3]
    assert jl.closed_form is GENERIC
    x = sample_jumps(jl, np.random.default_rng(3), 4 * 10 ** 4)
    assert abs(x.mean() - jl.mean) < 3 * np.sqrt(jl.variance / x.size)
    assert abs(x.var() - jl.variance) < 0.05 * jl.variance


def test_generic_grid_guard():
    jl = law(GENERIC, GammaProcess(1.0))
    with pytest.raises(ConfigError):
        sample_jump(jl, np.random.default_rng(0), inversion_grid=1)


def test_generic_non_finite_names_time():
    bad = CustomPrior(lambda t, x: np.full(np.shape(x), np.nan), lambda t: 1.0)
    jl = law(GENERIC, bad, t=1.25)
    with pytest.raises(NumericalError, match="1.25"):
        sample_jump(jl, np.random.default_rng(0))


def test_fixed_part_structure():
    rng = np.random.default_rng(0)
    empty = posterior_update(BetaProcess(), risk_summary(Dataset.from_arrays([1.0, 2.0], [0, 0])))
    path = sample_fixed_part(empty, rng)
    assert path.jumps == [] and path(5.0) == 0.0
    two = posterior_update(BetaProcess(), risk_summary(Dataset.from_arrays([1.0, 2.0], [1, 1])))
    path = sample_fixed_part(two, rng)
    assert path.times.tolist() == [1.0, 2.0]


def test_fixed_part_mean():
    post = posterior_update(AlphaFamily(0.5), risk_summary(dataset(15)))
    rng = np.random.default_rng(4)
    tau = 1.0
    draws = np.array([sample_fixed_part(post, rng)(tau) for _ in range(10 ** 4)])
    mean, var = posterior_fixed_moments(post, tau)
    assert abs(draws.mean() - mean) < 3 * np.sqrt(var / draws.size)


def test_continuous_epsilon_one_is_empty():
    post = posterior_update(BetaProcess(), risk_summary(dataset()))
    cfg = SamplerConfig(epsilon=1.0, compensate_mean=False)
    for seed in range(5):
        path = sample_continuous_part(post, 2.0, cfg, np.random.default_rng(seed))
        assert path.jumps == [] and path(2.0) == 0.0


@pytest.mark.parametrize("prior", [BetaProcess(1.0), AlphaFamily(0.5), GammaProcess(1.0)], ids=repr)
def test_continuous_mean_matches_moments(prior):
    post = posterior_update(prior, risk_summary(dataset(10)))
    tau = 1.5
    cfg = SamplerConfig(epsilon=1e-3)
    rng = np.random.default_rng(9)
    vals = np.array([sample_continuous_part(post, tau, cfg, rng)(tau) for _ in range(10 ** 4)])
    mean, var = continuous_part_moments(post, tau)
    assert abs(vals.mean() - mean) < 3 * np.sqrt(var / vals.size)


def test_continuous_mass_scales_like_one_over_n():
    cfg = SamplerConfig(epsilon=1e-7)
    means = []
    for n in (100, 1000):
        r = risk_summary(Dataset.from_arrays(np.full(n, 10.0), np.zeros(n)))
        post = posterior_update(BetaProcess(1.0), r)
        rng = np.random.default_rng(n)
        means.append(np.mean([sample_continuous_part(post, 1.0, cfg, rng)(1.0) for _ in range(4000)]))
    assert 7.0 < means[0] / means[1] < 13.0


def test_disabled_continuous_equals_fixed_draw():
    post = posterior_update(BetaProcess(), risk_summary(dataset()))
    cfg = SamplerConfig(epsilon=1.0, compensate_mean=False)
    a = sample_chf_path(post, 50.0, cfg, np.random.default_rng(7))
    b = sample_fixed_part(post, np.random.default_rng(7))
    assert a.jumps == b.jumps


def test_paths_start_at_zero_and_increase():
    post = posterior_update(AlphaFamily(0.25), risk_summary(dataset(25)))
    cfg = SamplerConfig()
    rng = np.random.default_rng(1)
    grid = np.linspace(0, 2.0, 100)
    for _ in range(1000):
        path = sample_chf_path(post, 2.0, cfg, rng)
        vals = path(grid)
        assert path(0.0) == 0.0
        assert np.all(np.diff(vals) >= 0)


def test_values_agree_with_paths_in_distribution():
    post = posterior_update(BetaProcess(), risk_summary(dataset(40)))
    cfg = SamplerConfig(draws=4000, epsilon=1e-4)
    v = sample_chf_values(post, [1.0], cfg, np.random.default_rng(0))[:, 0]
    mean, var = posterior_fixed_moments(post, 1.0)
    cm, cv = continuous_part_moments(post, 1.0)
    assert abs(v.mean() - mean - cm) < 3 * np.sqrt((var + cv) / v.size)


def test_reproducible():
    post = posterior_update(GammaProcess(), risk_summary(dataset()))
    cfg = SamplerConfig(draws=50)
    a = sample_chf_values(post, [0.5, 1.0], cfg, np.random.default_rng(3))
    b = sample_chf_values(post, [0.5, 1.0], cfg, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("prior", [BetaProcess(1.0), AlphaFamily(1.0), DirichletInduced(2.0)], ids=repr)
def test_data_free_paths_match_prior_moments(prior):
    post = posterior_update(prior)
    v = sample_chf_values(post, [1.0], SamplerConfig(draws=10 ** 4), np.random.default_rng(2))[:, 0]
    mean, var = prior_moments(prior, 1.0)
    assert abs(v.mean() - mean) < 3 * np.sqrt(var / v.size)


def test_config_validation():
    with pytest.raises(ConfigError):
        SamplerConfig(epsilon=0.0)
    with pytest.raises(ConfigError):
        SamplerConfig(draws=0)
    with pytest.raises(ConfigError):
        SamplerConfig(inversion_grid=1)


def test_credible_interval():
    assert credible_interval([3.0] * 10, 0.9) == (3.0, 3.0)
    lo, hi = credible_interval(np.arange(1, 101), 0.9)
    assert lo == pytest.approx(5.95) and hi == pytest.approx(95.05)
    z = np.random.default_rng(0).standard_normal(10 ** 5)
    lo, hi = credible_interval(z, 0.9)
    assert abs(lo + 1.645) < 0.02 and abs(hi - 1.645) < 0.02
    with pytest.raises(DataError):
        credible_interval([], 0.9)
    with pytest.raises(ConfigError):
        credible_interval([1.0], 1.0)


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(1e-6, 1.0)), max_size=30))
@settings(max_examples=60, deadline=None)
def test_hazard_path_invariants(jumps):
    times = [t for t, _ in jumps]
    sizes = [s for _, s in jumps]
    path = HazardPath(times, sizes)
    assert np.all(np.diff(path.times) >= 0)
    assert path(0.0) == pytest.approx(sum(s for t, s in jumps if t <= 0.0))
    grid = np.linspace(0, 11, 50)
    assert np.all(np.diff(path(grid)) >= 0)


def test_hazard_path_rejects_bad_sizes():
    with pytest.raises(ValueError):
        HazardPath([1.0], [1.5])
    with pytest.raises(ValueError):
        HazardPath([1.0], [0.0])
