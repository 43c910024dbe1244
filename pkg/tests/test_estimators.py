import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from brflow.estimators import BestResponseDynamics, NashEquilibriumSolver, as_decomposition, check_profiles
from brflow.game import NormalFormGame, NotPotentialGameError, PotentialDecomposition

COORD = [[1.0, 0.0], [0.0, 2.0]]


def test_as_decomposition_accepts_several_inputs():
    d = PotentialDecomposition.identical_interest(COORD)
    assert as_decomposition(d) is d
    np.testing.assert_array_equal(as_decomposition(np.array(COORD)).potential, COORD)
    g = NormalFormGame((np.array(COORD), np.array(COORD)))
    np.testing.assert_array_equal(as_decomposition(g).potential, COORD)
    mp = np.array([[1.0, -1.0], [-1.0, 1.0]])
    with pytest.raises(NotPotentialGameError):
        as_decomposition(NormalFormGame((mp, -mp)))


def test_check_profiles():
    d = PotentialDecomposition.identical_interest(np.zeros((2, 3)))
    X = check_profiles([[0.1, 0.2, 0.3]], d)
    assert X.shape == (1, 3)
    np.testing.assert_allclose(check_profiles([[0.9, 0.1, 0.5, 0.2, 0.3]], d, simplex=True), [[0.1, 0.2, 0.3]])
    with pytest.raises(ValueError):
        check_profiles([[0.1, 0.2]], d)
    with pytest.raises(ValueError):
        check_profiles([[0.1, 0.8, 0.3]], d)


def test_solver_estimator():
    est = NashEquilibriumSolver(seed=3).fit(np.array(COORD))
    assert len(est.equilibria_) == 3 and est.is_regular_
    assert est.get_params()["seed"] == 3
    np.testing.assert_array_equal(est.predict([[0.9, 0.95], [0.0, 0.1]]), [1, 0])
    assert clone(est).get_params() == est.get_params()


def test_dynamics_estimator():
    est = BestResponseDynamics()
    with pytest.raises(NotFittedError):
        est.predict([[0.5, 0.5]])
    est.fit(np.array(COORD))
    X0 = [[0.9, 0.2], [0.1, 0.1], [1 / 3 - 0.2, 1 / 3 + 0.1]]
    labels = est.predict(X0)
    profiles = [est.equilibria_[k].profile.tolist() for k in labels]
    assert profiles[0] == [1.0, 1.0] and profiles[1] == [0.0, 0.0]
    np.testing.assert_allclose(profiles[2], [1 / 3, 1 / 3])
    np.testing.assert_allclose(est.transform(X0)[:2], [[1, 1], [0, 0]])


def test_dynamics_reports_non_equilibrium_stop():
    est = BestResponseDynamics(t_max=0.05).fit(np.array(COORD))
    assert est.predict([[0.9, 0.2]]).tolist() == [-1]
