import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from phibvp import BVPSolver, shipped_problem


def test_params_and_clone():
    est = BVPSolver(n=128, gamma=0.7)
    params = est.get_params()
    assert params["n"] == 128 and params["gamma"] == 0.7 and params["mode"] == "auto"
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(lambda_steps=4)
    assert est.lambda_steps == 4


def test_fit_predict_example(example_spec):
    est = BVPSolver(n=256).fit(example_spec)
    assert est.certificate_ == "DEGREE_CERTIFIED" and est.degree_ == -1
    t = np.linspace(0, 1, 37)
    assert np.allclose(est.predict(t), math.log(2) * (1 + t), atol=1e-9)
    assert np.allclose(est.predict_derivative(t), math.log(2), atol=1e-9)
    assert est.score() >= -1e-5
    assert est.bounds_.r == pytest.approx(3 ** (1 / 3))


def test_fit_from_path_and_text():
    path = shipped_problem("linear_oracle")
    a = BVPSolver(n=128).fit(path)
    b = BVPSolver(n=128).fit(path.read_text())
    t = np.array([0.0, 0.25, 0.5, 1.0])
    assert np.allclose(a.predict(t), -1 - t + t * t, atol=1e-9)
    assert np.array_equal(a.predict(t), b.predict(t))
    assert a.certificate_ == "SCHAUDER_MODE"


def test_not_fitted_and_bad_times(example_spec):
    with pytest.raises(NotFittedError):
        BVPSolver().predict([0.5])
    est = BVPSolver(n=64).fit(example_spec)
    with pytest.raises(ValueError):
        est.predict([1.5])
    with pytest.raises(ValueError):
        est.predict([[0.1, 0.2]])
    with pytest.raises(ValueError):
        est.predict([np.nan])
    assert est.predict(0.5).shape == (1,)


def test_invalid_params_raise_on_fit(example_spec):
    with pytest.raises(ValueError):
        BVPSolver(gamma=0.0).fit(example_spec)
