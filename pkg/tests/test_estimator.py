import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fsewald.core import KernelKind, ParameterError, direct_sum, rms_error
from fsewald.estimator import DirectSummation, SpectralEwaldSummation
from fsewald.harness.runner import generate_system
from fsewald.spectral import total_sum


def _data(kind="stokeslet", n=300, L=1.0, seed=4):
    s = generate_system(kind, n, L, seed)
    return s, s.positions, s.strengths


def test_params_round_trip():
    est = SpectralEwaldSummation(kernel="rotlet", tol=1e-6, xi=5.0, box=2.0)
    params = est.get_params()
    assert params["kernel"] == "rotlet" and params["tol"] == 1e-6 and params["xi"] == 5.0
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(tol=1e-9)
    assert est.tol == 1e-9


@pytest.mark.parametrize("kind", list(KernelKind))
def test_fit_predict_matches_direct(kind):
    s, X, y = _data(kind.name.lower())
    fast = SpectralEwaldSummation(kernel=kind.name.lower(), tol=1e-8, box=1.0).fit_predict(X, y)
    exact = DirectSummation(kernel=kind.name.lower(), box=1.0).fit_predict(X, y)
    assert rms_error(fast, exact) <= 1e-8


def test_fit_returns_self_and_sets_attributes():
    _, X, y = _data()
    est = SpectralEwaldSummation(tol=1e-6, box=1.0)
    assert est.fit(X, y) is est
    assert est.config_.L == 1.0
    assert est.system_.n == 300
    assert est.n_features_in_ == 3
    assert est.budget_.predicted_total_rms > 0


def test_predict_equals_library_call():
    s, X, y = _data()
    est = SpectralEwaldSummation(tol=1e-6, box=1.0, deterministic=True).fit(X, y)
    np.testing.assert_array_equal(est.predict(), total_sum(s, est.config_))


def test_explicit_parameters_ignore_tol():
    _, X, y = _data()
    est = SpectralEwaldSummation(tol=1e-2, xi=6.0, rc=0.4, M=20, P=12, box=1.0).fit(X, y)
    cfg = est.config_
    assert (cfg.xi, cfg.rc, cfg.M, cfg.P) == (6.0, 0.4, 20, 12)


def test_partial_override_keeps_selected_rest():
    _, X, y = _data()
    base = SpectralEwaldSummation(tol=1e-6, xi=6.0, box=1.0).fit(X, y).config_
    over = SpectralEwaldSummation(tol=1e-6, xi=6.0, M=base.M + 4, box=1.0).fit(X, y).config_
    assert over.M == base.M + 4
    assert over.rc == base.rc and over.P == base.P


def test_predict_at_targets():
    s, X, y = _data()
    T = np.random.default_rng(1).uniform(0.1, 0.9, size=(40, 3))
    fast = SpectralEwaldSummation(tol=1e-8, box=1.0).fit(X, y).predict(T)
    assert fast.shape == (40, 3)
    assert rms_error(fast, direct_sum(s, targets=T)) <= 1e-8


def test_default_box_is_largest_coordinate():
    _, X, y = _data(L=2.0)
    est = DirectSummation().fit(X, y)
    assert est.system_.box == X.max()


def test_stresslet_accepts_matrices():
    s, X, y = _data("stresslet", n=50)
    a = DirectSummation(kernel="stresslet", box=1.0).fit_predict(X, y.reshape(50, 3, 3))
    b = DirectSummation(kernel="stresslet", box=1.0).fit_predict(X, y)
    np.testing.assert_array_equal(a, b)


def test_unfitted_predict_raises():
    with pytest.raises(NotFittedError):
        SpectralEwaldSummation().predict()
    with pytest.raises(NotFittedError):
        DirectSummation().predict()


@pytest.mark.parametrize("X, y", [
    (np.ones((4, 2)), np.ones((4, 3))),
    (np.ones((4, 3)), np.ones((5, 3))),
    (-np.ones((4, 3)), np.ones((4, 3))),
])
def test_invalid_input(X, y):
    with pytest.raises(ParameterError):
        DirectSummation().fit(X, y)


def test_wrong_strength_arity():
    with pytest.raises(ParameterError):
        DirectSummation(kernel="stresslet").fit(np.ones((4, 3)), np.ones((4, 3)))


def test_direct_matches_library():
    s, X, y = _data("rotlet", n=80)
    np.testing.assert_array_equal(DirectSummation(kernel="rotlet", box=1.0).fit_predict(X, y), direct_sum(s))
