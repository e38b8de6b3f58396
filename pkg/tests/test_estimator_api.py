import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ntrsurv import AalenNelsonEstimator, NTRSurvival
from ntrsurv.data import GenerativeModel, generate_dataset
from ntrsurv.exceptions import DataError
from ntrsurv.validation import check_random_state, check_survival_data


@pytest.fixture(scope="module")
def data():
    d = generate_dataset(GenerativeModel(), 200, np.random.default_rng(8))
    return d.times, d.events


def test_params_and_clone():
    est = NTRSurvival(prior="beta:c=2", draws=50, random_state=1)
    assert est.get_params()["prior"] == "beta:c=2"
    c = clone(est)
    assert c.get_params() == est.get_params()
    est.set_params(draws=10)
    assert est.draws == 10


def test_fit_predict(data):
    t, e = data
    est = NTRSurvival(prior="alpha:a=1", draws=500, random_state=0).fit(t, e)
    grid = np.array([0.5, 1.0, 2.0])
    mean, var = est.predict_cumulative_hazard(grid, return_var=True)
    an = AalenNelsonEstimator().fit(t, e).predict(grid)
    assert np.all(np.abs(mean - an) < 3 * np.sqrt(var))
    s = est.predict_survival(grid)
    assert np.all(np.diff(s) <= 0) and np.all((s >= 0) & (s <= 1))
    lo, hi = est.credible_interval(grid, 0.9)
    assert np.all(lo < mean) and np.all(mean < hi)
    draws = est.sample_cumulative_hazard(grid)
    assert draws.shape == (500, 3)
    paths = est.sample_paths(2.0, draws=3)
    assert len(paths) == 3


def test_reproducible_with_random_state(data):
    t, e = data
    a = NTRSurvival(draws=20, random_state=4).fit(t, e).sample_cumulative_hazard([1.0])
    b = NTRSurvival(draws=20, random_state=4).fit(t, e).sample_cumulative_hazard([1.0])
    np.testing.assert_array_equal(a, b)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        NTRSurvival().predict([1.0])


def test_kaplan_meier_estimator(data):
    t, e = data
    est = AalenNelsonEstimator().fit(t, e)
    s = est.predict_survival([0.0, 1.0, 100.0])
    assert s[0] == 1.0 and 0 < s[1] < 1


def test_validation():
    with pytest.raises(DataError):
        check_survival_data([])
    with pytest.raises(DataError):
        check_survival_data([1.0, -1.0])
    with pytest.raises(DataError):
        check_survival_data([1.0, 2.0], [1, 2])
    with pytest.raises(DataError):
        check_survival_data([1.0, 2.0], [1])
    t, e = check_survival_data([[1.0], [2.0]])
    assert t.shape == (2,) and e.all()
    assert isinstance(check_random_state(3), np.random.Generator)
    g = np.random.default_rng(0)
    assert check_random_state(g) is g
    with pytest.raises(ValueError):
        check_random_state("seed")
