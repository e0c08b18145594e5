"""Truncation-error estimates and automatic parameter selection.

All estimates are statistical RMS predictions for uniformly random sources
(absolute errors, in the units of the potential).
"""
from dataclasses import dataclass
import functools
import math

import numpy as np
from scipy import integrate
from scipy.stats import qmc

from .core import KernelKind, ParameterError
from .greens import SQRT3
from .spectral import EwaldConfig, make_config

__all__ = [
    "ErrorBudget",
    "fourier_error_estimate",
    "real_error_estimate",
    "gridding_error_estimate",
    "reference_rms",
    "support_for_tol",
    "select_parameters",
    "suggest_xi",
    "error_budget",
]

MAX_GRID = 1024

# Aliasing model: prefactor and power of xi per kernel, fitted (with margin)
# to measured P = 16 errors for N in [60, 20000], L in {1, 2}, xi in [3, 8].
_GRIDDING = {KernelKind.STOKESLET: (8.0, 0.0), KernelKind.STRESSLET: (30.0, 0.5),
             KernelKind.ROTLET: (3.0, 0.5)}


@dataclass(frozen=True)
class ErrorBudget:
    kind: KernelKind
    xi: float
    rc: float
    k_inf: float
    L: float
    R: float
    Q: float
    predicted_real_rms: float
    predicted_fourier_rms: float
    predicted_gridding_rms: float

    @property
    def predicted_total_rms(self) -> float:
        return math.hypot(self.predicted_real_rms,
                          self.predicted_fourier_rms + self.predicted_gridding_rms)


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ParameterError(f"{name} must be positive, got {v}")


def fourier_error_estimate(kind, Q: float, xi: float, k_inf: float, L: float, R: float) -> float:
    kind = KernelKind.coerce(kind)
    _positive(Q=Q, xi=xi, k_inf=k_inf, L=L, R=R)
    decay = math.exp(-k_inf ** 2 / (4.0 * xi ** 2))
    if kind is KernelKind.STOKESLET:
        return math.sqrt(Q) * R * k_inf ** 3 / (xi ** 2 * math.pi * L) * decay
    if kind is KernelKind.STRESSLET:
        return math.sqrt(7.0 * Q / 6.0) * R * k_inf ** 4 / (xi ** 2 * math.pi * L) * decay
    return math.sqrt(8.0 * xi ** 2 * Q / (3.0 * math.pi * L ** 3 * k_inf)) * decay


def real_error_estimate(kind, Q: float, xi: float, rc: float, L: float) -> float:
    kind = KernelKind.coerce(kind)
    _positive(Q=Q, xi=xi, rc=rc, L=L)
    decay = math.exp(-(xi * rc) ** 2)
    if kind is KernelKind.STOKESLET:
        return math.sqrt(4.0 * Q * rc / L ** 3) * decay
    if kind is KernelKind.STRESSLET:
        return math.sqrt(112.0 * Q * xi ** 4 * rc ** 3 / (9.0 * L ** 3)) * decay
    return math.sqrt(8.0 * Q / (3.0 * L ** 3 * rc)) * decay


def gridding_error_estimate(kind, Q: float, cfg: EwaldConfig) -> float:
    """RMS aliasing error of the Gaussian gridding, significant on coarse grids.

    The alias of wavenumber ``k`` sits at ``2 k_inf - k``. After both window
    factors and the Ewald damping it is worst at ``k = eta k_inf``, where the
    exponent is ``-eta (2 - eta) k_inf^2 / (4 xi^2)``; for ``eta >= 1`` the
    worst case is ``k_inf`` itself. The prefactor is empirical.
    """
    kind = KernelKind.coerce(kind)
    c, s = _GRIDDING[kind]
    eta = min(cfg.eta, 1.0)
    g = eta * (2.0 - eta) * cfg.k_inf ** 2 / (4.0 * cfg.xi ** 2)
    return c * math.sqrt(Q / cfg.L ** 3) * cfg.xi ** s * math.exp(-g)


def error_budget(kind, Q: float, cfg: EwaldConfig) -> ErrorBudget:
    kind = KernelKind.coerce(kind)
    return ErrorBudget(kind=kind, xi=cfg.xi, rc=cfg.rc, k_inf=cfg.k_inf, L=cfg.L, R=cfg.R, Q=Q,
                       predicted_real_rms=real_error_estimate(kind, Q, cfg.xi, cfg.rc, cfg.L),
                       predicted_fourier_rms=fourier_error_estimate(kind, Q, cfg.xi, cfg.k_inf,
                                                                    cfg.L, cfg.R),
                       predicted_gridding_rms=gridding_error_estimate(kind, Q, cfg))


# --- reference magnitude ------------------------------------------------------
#
# For random sources the potential at a point is dominated by an incoherent sum
# of pair contributions, so E|u|^2 ~ (N - 1) (Q/N) a E[r^-p] / L^p with r the
# distance between two uniform points of the unit cube, cut below the typical
# nearest-neighbour distance. (a, p) follow from averaging |G f|^2 over
# directions and strength components.

_MOMENTS = {KernelKind.STOKESLET: (2.0, 2), KernelKind.ROTLET: (2.0 / 3.0, 4),
            KernelKind.STRESSLET: (4.0, 4)}


def _pair_density(r):
    """Distance density of two uniform points in the unit cube, valid for r <= 1."""
    return r * r * (4.0 * math.pi - 6.0 * math.pi * r + 8.0 * r * r - r ** 3)


@functools.lru_cache(maxsize=None)
def _far_moment(p: int) -> float:
    """E[r^-p ; r > 1] by quasi-Monte Carlo (the closed-form density is piecewise)."""
    pts = qmc.Sobol(d=6, scramble=True, seed=12345).random_base2(18)
    r = np.linalg.norm(pts[:, :3] - pts[:, 3:], axis=1)
    return float(np.mean(np.where(r > 1.0, r, np.inf) ** -p))


def _inverse_moment(p: int, r0: float) -> float:
    near = integrate.quad(lambda r: r ** -p * _pair_density(r), min(r0, 1.0), 1.0)[0]
    return near + _far_moment(p)


def reference_rms(kind, n: int, L: float, Q: float) -> float:
    """Heuristic RMS magnitude of the potential of ``n`` random sources in a cube of side ``L``."""
    kind = KernelKind.coerce(kind)
    if n < 2:
        return math.sqrt(Q)
    a, p = _MOMENTS[kind]
    r0 = 0.554 * n ** (-1.0 / 3.0)
    return math.sqrt((Q / n) * (n - 1) * a * _inverse_moment(p, r0) / L ** p)


# --- selection ----------------------------------------------------------------

def support_for_tol(tol: float) -> int:
    """Gaussian support P for a relative tolerance: 16 down to about 1e-8, 24 to about 1e-12, else 32."""
    if tol >= 10 ** -8.5:
        return 16
    if tol >= 10 ** -12.5:
        return 24
    return 32


def _real_peak(kind: KernelKind, xi: float) -> float:
    if kind is KernelKind.STOKESLET:
        return 0.5 / xi
    if kind is KernelKind.STRESSLET:
        return 0.5 * SQRT3 / xi
    return 1e-6 / xi


def _select_rc(kind, Q, xi, L, target) -> tuple:
    f = lambda rc: real_error_estimate(kind, Q, xi, rc, L)
    lo = _real_peak(kind, xi)
    rc_max = SQRT3 * L
    if f(lo) <= target:
        return lo, False
    hi = 2.0 * lo
    while f(hi) > target:
        if hi >= rc_max:
            return rc_max, True
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return min(hi, rc_max), hi > rc_max


def _fourier_peak(kind: KernelKind, xi: float) -> float:
    if kind is KernelKind.STOKESLET:
        return math.sqrt(6.0) * xi
    if kind is KernelKind.STRESSLET:
        return math.sqrt(8.0) * xi
    return 0.0


def select_parameters(kind, n: int, L: float, Q: float, xi: float, tol: float, *,
                      ref_rms: float | None = None, P: int | None = None,
                      sf: float = 1.0 + SQRT3, deterministic: bool = False) -> EwaldConfig:
    """Pick ``rc``, ``M`` and ``P`` so that the predicted relative RMS error is at most ``tol``.

    ``tol`` is split evenly between the real- and Fourier-space budgets and
    converted to an absolute level with ``ref_rms`` (default:
    :func:`reference_rms`). ``rc`` is the smallest radius on the decaying
    branch of the real-space estimate that meets its budget; ``M`` is the
    smallest grid on which truncation plus gridding error meet the Fourier
    budget. When ``rc`` would exceed the
    box diagonal it is clamped and ``direct_recommended`` is set.
    """
    kind = KernelKind.coerce(kind)
    _positive(n=n, L=L, Q=Q, xi=xi, tol=tol)
    ref = reference_rms(kind, int(n), L, Q) if ref_rms is None else float(ref_rms)
    _positive(ref_rms=ref)
    target = 0.5 * tol * ref
    P = support_for_tol(tol) if P is None else int(P)
    P += P % 2
    rc, direct = _select_rc(kind, Q, xi, L, target)
    k_min = _fourier_peak(kind, xi)
    cfg = None
    for M in range(1, MAX_GRID + 1):
        if math.pi * M / L < k_min:
            continue
        cfg = make_config(L, xi, rc, M, P, sf=sf, direct_recommended=direct,
                          deterministic=deterministic)
        err = fourier_error_estimate(kind, Q, xi, cfg.k_inf, L, cfg.R)
        if err + gridding_error_estimate(kind, Q, cfg) <= target:
            return cfg
    if cfg is not None and gridding_error_estimate(kind, Q, cfg) > target:
        raise ParameterError(f"support P={P} cannot reach tolerance {tol} on any grid; increase P")
    raise ParameterError(f"tolerance {tol} needs a grid finer than {MAX_GRID} intervals")


def suggest_xi(n: int, L: float, tol: float, neighbours: float = 1000.0) -> float:
    """Splitting parameter giving roughly ``neighbours`` sources inside the cut-off sphere.

    Uses ``rc ~ sqrt(ln(1/tol)) / xi``; the real-space work per target is
    then fixed while the grid grows with the density.
    """
    _positive(n=n, L=L, tol=tol, neighbours=neighbours)
    density = n / L ** 3
    rc = (3.0 * neighbours / (4.0 * math.pi * density)) ** (1.0 / 3.0)
    rc = min(rc, 0.5 * L)
    return math.sqrt(math.log(1.0 / min(tol, 0.5))) / rc
