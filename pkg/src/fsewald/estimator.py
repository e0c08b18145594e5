"""Estimator-style front end: ``fit`` on sources, ``predict`` potentials at targets."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import KernelKind, ParameterError, SourceSystem, direct_sum
from .estimates import error_budget, select_parameters, suggest_xi
from .greens import SQRT3
from .spectral import GreenCache, make_config, total_sum

__all__ = ["SpectralEwaldSummation", "DirectSummation"]


def _fit_system(est, X, y) -> SourceSystem:
    kind = KernelKind.coerce(est.kernel)
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    y = np.asarray(y, dtype=np.float64)
    if kind is KernelKind.STRESSLET and y.ndim == 3:
        y = y.reshape(y.shape[0], 9)
    y = check_array(y, dtype=np.float64)
    if X.shape[1] != 3:
        raise ParameterError(f"positions must have 3 columns, got {X.shape[1]}")
    if y.shape[0] != X.shape[0]:
        raise ParameterError("positions and strengths differ in length")
    box = est.box
    if box is None:
        box = float(X.max()) if X.max() > 0 else 1.0
    if X.min() < 0:
        raise ParameterError("positions must be non-negative (sources live in [0, box]^3)")
    return SourceSystem(X, y, box, kind)


def _targets(X):
    if X is None:
        return None
    return check_array(X, dtype=np.float64)


class SpectralEwaldSummation(BaseEstimator):
    """Fast free-space Stokes potential sums.

    Parameters
    ----------
    kernel : {"stokeslet", "stresslet", "rotlet"}
    tol : float
        Target relative RMS error, used when any of ``rc``, ``M``, ``P`` is unset.
    xi : float, optional
        Splitting parameter; chosen from the source density when omitted.
    rc, M, P : optional explicit parameters. Given all three, ``tol`` is ignored.
    box : float, optional
        Side of the source cube; defaults to the largest coordinate.
    sf : float
        Oversampling factor of the Green's function precomputation.
    deterministic : bool
        Single-chunk gridding for bitwise-reproducible results.

    Attributes
    ----------
    system_ : SourceSystem
    config_ : EwaldConfig
    budget_ : ErrorBudget (predicted errors)
    """

    def __init__(self, kernel="stokeslet", tol=1e-8, xi=None, rc=None, M=None, P=None,
                 box=None, sf=1.0 + SQRT3, deterministic=False):
        self.kernel = kernel
        self.tol = tol
        self.xi = xi
        self.rc = rc
        self.M = M
        self.P = P
        self.box = box
        self.sf = sf
        self.deterministic = deterministic

    def fit(self, X, y):
        """Store sources ``X`` (N, 3) with strengths ``y`` and choose the method parameters."""
        system = _fit_system(self, X, y)
        xi = self.xi if self.xi is not None else suggest_xi(system.n, system.box, self.tol)
        if self.rc is not None and self.M is not None and self.P is not None:
            cfg = make_config(system.box, xi, self.rc, self.M, self.P, sf=self.sf,
                              deterministic=self.deterministic,
                              direct_recommended=self.rc >= SQRT3 * system.box)
        else:
            cfg = select_parameters(system.kind, system.n, system.box, system.q, xi, self.tol,
                                    P=self.P, sf=self.sf, deterministic=self.deterministic)
            if self.rc is not None or self.M is not None:
                cfg = make_config(system.box, xi, self.rc or cfg.rc, self.M or cfg.M, cfg.P,
                                  sf=self.sf, deterministic=self.deterministic)
        self.system_ = system
        self.config_ = cfg
        self.budget_ = error_budget(system.kind, system.q, cfg)
        self._cache = GreenCache(maxsize=1)
        self.n_features_in_ = 3
        return self

    def predict(self, X=None):
        """Potential at targets ``X`` (defaults to the sources, with self-interaction removed)."""
        check_is_fitted(self, "config_")
        green = self._cache.get(self.system_.kind, self.config_)
        return total_sum(self.system_, self.config_, targets=_targets(X), green=green)

    def fit_predict(self, X, y):
        return self.fit(X, y).predict()


class DirectSummation(BaseEstimator):
    """Exact O(N M) pair summation with the same interface."""

    def __init__(self, kernel="stokeslet", box=None):
        self.kernel = kernel
        self.box = box

    def fit(self, X, y):
        self.system_ = _fit_system(self, X, y)
        self.n_features_in_ = 3
        return self

    def predict(self, X=None):
        check_is_fitted(self, "system_")
        return direct_sum(self.system_, targets=_targets(X))

    def fit_predict(self, X, y):
        return self.fit(X, y).predict()
