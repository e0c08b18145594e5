"""Fourier-space part of the free-space Ewald sum, evaluated with FFTs.

Pipeline: spread the sources onto a uniform grid with truncated Gaussians,
FFT (zero-padded to twice the size), scale by the kernel's k-space tensor
using the precomputed mollified Green's function, inverse FFT, and integrate
back to the targets with the same truncated Gaussians (trapezoidal rule).
"""
from dataclasses import dataclass, replace
import math
import time

import numba
import numpy as np
import scipy.fft
from numba import njit, prange

from .core import (KernelKind, ParameterError, SourceSystem, _as_points,
                   self_interaction)
from .greens import SQRT3, GreenKind, MollifiedGreen, precompute_mollified_green
from .realspace import real_space_sum

__all__ = [
    "EwaldConfig",
    "make_config",
    "green_kind_for",
    "spread",
    "spread_naive",
    "kspace_scale",
    "quadrature",
    "fourier_sum",
    "total_sum",
    "GreenCache",
]

# Shape constant of the Gaussians: m = C sqrt(pi P).
SHAPE_C = 0.976


@dataclass(frozen=True)
class EwaldConfig:
    """Method parameters and everything derived from them.

    The grid of ``M`` intervals across ``[0, L]`` is extended by ``n_ext``
    cells (``delta_l = n_ext * h``) to ``M_ext`` nodes covering
    ``[-delta_l/2, L + delta_l/2]``.
    """

    L: float
    xi: float
    rc: float
    M: int
    P: int
    h: float
    d: float
    m: float
    eta: float
    delta_l: float
    n_ext: int
    L_ext: float
    M_ext: int
    k_inf: float
    R: float
    sf: float = 1.0 + SQRT3
    extension: str = "remainder"
    fast_sizes: bool = True
    direct_recommended: bool = False
    deterministic: bool = False

    @property
    def origin(self) -> float:
        return -0.5 * self.delta_l

    @property
    def conv_size(self) -> int:
        return 2 * self.M_ext

    @property
    def alpha(self) -> float:
        """Exponent ``2 xi^2 / eta`` of the gridding Gaussian."""
        return 2.0 * self.xi ** 2 / self.eta

    @property
    def gauss_prefactor(self) -> float:
        return (2.0 * self.xi ** 2 / (math.pi * self.eta)) ** 1.5

    def with_rc(self, rc: float) -> "EwaldConfig":
        return replace(self, rc=float(rc))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def required_extension(d: float, m: float, xi: float, eta: float, mode: str = "remainder") -> float:
    """Minimum domain extension so both the gridding and the remainder Gaussians are supported."""
    if mode == "support" or eta >= 1.0:
        return d
    if mode != "remainder":
        raise ParameterError(f"unknown extension mode {mode!r}")
    return max(d, math.sqrt(2.0 * (1.0 - eta)) * m / xi)


def make_config(L: float, xi: float, rc: float, M: int, P: int, *, sf: float = 1.0 + SQRT3,
                extension: str = "remainder", fast_sizes: bool = True,
                deterministic: bool = False, direct_recommended: bool = False) -> EwaldConfig:
    """Derive the full parameter set from ``(L, xi, rc, M, P)``.

    ``extension="support"`` only covers the gridding Gaussians (``delta_l = d``).
    With ``fast_sizes`` the extension is rounded further up until the
    convolution length ``2 M_ext`` has only small prime factors.
    """
    if not (L > 0 and xi > 0 and rc > 0):
        raise ParameterError("L, xi and rc must be positive")
    M, P = int(M), int(P)
    if M < 1 or P < 2 or P % 2:
        raise ParameterError("need M >= 1 and an even P >= 2")
    h = L / M
    d = h * P
    m = SHAPE_C * math.sqrt(math.pi * P)
    eta = (xi * d / m) ** 2
    need = required_extension(d, m, xi, eta, extension)
    n_ext = max(int(math.ceil(need / h - 1e-10)), P)
    if fast_sizes:
        while scipy.fft.next_fast_len(2 * (M + n_ext), real=True) != 2 * (M + n_ext):
            n_ext += 1
    M_ext = M + n_ext
    if P > M_ext:
        raise ParameterError(f"Gaussian support P={P} exceeds the grid ({M_ext})")
    L_ext = M_ext * h
    if sf < 1.0 + SQRT3 - 1e-12:
        raise ParameterError("oversampling factor must be at least 1 + sqrt(3)")
    return EwaldConfig(L=float(L), xi=float(xi), rc=float(rc), M=M, P=P, h=h, d=d, m=m, eta=eta,
                       delta_l=n_ext * h, n_ext=n_ext, L_ext=L_ext, M_ext=M_ext,
                       k_inf=math.pi / h, R=SQRT3 * L_ext, sf=float(sf), extension=extension,
                       fast_sizes=bool(fast_sizes), direct_recommended=direct_recommended,
                       deterministic=deterministic)


def green_kind_for(kind) -> GreenKind:
    kind = KernelKind.coerce(kind)
    return GreenKind.HARMONIC if kind is KernelKind.ROTLET else GreenKind.BIHARMONIC


class GreenCache:
    """In-memory memo of mollified Green's functions.

    Entries are keyed by node count and oversampling factor only; other box
    sizes are served by exact rescaling.
    """

    def __init__(self, maxsize: int = 4):
        self.maxsize = maxsize
        self._store = {}

    def get(self, kind, cfg: EwaldConfig) -> MollifiedGreen:
        key = (int(green_kind_for(kind)), cfg.M_ext, round(cfg.sf, 14))
        g = self._store.pop(key, None)
        if g is None:
            g = precompute_mollified_green(green_kind_for(kind), cfg.L_ext, cfg.M_ext, cfg.sf)
        self._store[key] = g
        while len(self._store) > self.maxsize:
            self._store.pop(next(iter(self._store)))
        return g if g.L_ext == cfg.L_ext else g.rescaled(cfg.L_ext)

    def clear(self):
        self._store.clear()


_default_cache = GreenCache()


def _workers() -> int:
    return numba.get_num_threads()


# --- gridding ---------------------------------------------------------------

@njit(cache=True, inline="always")
def _axis_weights(x, origin, h, P, alpha, e3, w):
    """Fast Gaussian gridding along one axis: fill ``w`` and return the first node index.

    Nodes are the P nearest to ``x`` (ties toward the lower index); each
    weight is ``exp(-alpha (node - x)^2)`` built from one exponential of the
    offset and powers of a second one times a tabulated factor.
    """
    t = (x - origin) / h
    i0 = int(math.ceil(t - 0.5 * P))
    half = P // 2
    dc = (i0 + half - t) * h
    e1 = math.exp(-alpha * dc * dc)
    e2 = math.exp(-2.0 * alpha * dc * h)
    w[half] = e1 * e3[half]
    p = e1
    for q in range(1, half):
        p *= e2
        w[half + q] = p * e3[half + q]
    p = e1
    inv = 1.0 / e2
    for q in range(1, half + 1):
        p *= inv
        w[half - q] = p * e3[half - q]
    return i0


@njit(parallel=True, cache=True)
def _spread_fgg(pos, f, origin, h, P, alpha, pref, e3, n_chunks, grid):
    N = pos.shape[0]
    ncomp = f.shape[1]
    chunk = (N + n_chunks - 1) // n_chunks
    for cidx in prange(n_chunks):
        g = grid[cidx]
        wx = np.empty(P)
        wy = np.empty(P)
        wz = np.empty(P)
        for n in range(cidx * chunk, min(N, (cidx + 1) * chunk)):
            ix = _axis_weights(pos[n, 0], origin, h, P, alpha, e3, wx)
            iy = _axis_weights(pos[n, 1], origin, h, P, alpha, e3, wy)
            iz = _axis_weights(pos[n, 2], origin, h, P, alpha, e3, wz)
            for c in range(ncomp):
                fc = f[n, c] * pref
                if fc == 0.0:
                    continue
                for a in range(P):
                    va = fc * wx[a]
                    for b in range(P):
                        vab = va * wy[b]
                        for k in range(P):
                            g[c, ix + a, iy + b, iz + k] += vab * wz[k]


@njit(cache=True)
def _spread_naive(pos, f, origin, h, P, alpha, pref, grid):
    N = pos.shape[0]
    ncomp = f.shape[1]
    for n in range(N):
        i0 = np.empty(3, dtype=np.int64)
        for ax in range(3):
            i0[ax] = int(math.ceil((pos[n, ax] - origin) / h - 0.5 * P))
        for a in range(P):
            dx = origin + (i0[0] + a) * h - pos[n, 0]
            for b in range(P):
                dy = origin + (i0[1] + b) * h - pos[n, 1]
                for k in range(P):
                    dz = origin + (i0[2] + k) * h - pos[n, 2]
                    w = pref * math.exp(-alpha * (dx * dx + dy * dy + dz * dz))
                    for c in range(ncomp):
                        grid[c, i0[0] + a, i0[1] + b, i0[2] + k] += w * f[n, c]


@njit(parallel=True, cache=True)
def _quadrature(pos, w, origin, h, P, alpha, scale, e3, out):
    nt = pos.shape[0]
    ncomp = w.shape[0]
    for i in prange(nt):
        wx = np.empty(P)
        wy = np.empty(P)
        wz = np.empty(P)
        ix = _axis_weights(pos[i, 0], origin, h, P, alpha, e3, wx)
        iy = _axis_weights(pos[i, 1], origin, h, P, alpha, e3, wy)
        iz = _axis_weights(pos[i, 2], origin, h, P, alpha, e3, wz)
        for c in range(ncomp):
            s = 0.0
            for a in range(P):
                sb = 0.0
                for b in range(P):
                    sk = 0.0
                    for k in range(P):
                        sk += w[c, ix + a, iy + b, iz + k] * wz[k]
                    sb += sk * wy[b]
                s += sb * wx[a]
            out[i, c] = s * scale


def _e3_table(cfg: EwaldConfig) -> np.ndarray:
    q = np.arange(cfg.P) - cfg.P // 2
    return np.exp(-cfg.alpha * (q * cfg.h) ** 2)


def _check_inside(points, cfg: EwaldConfig):
    if points.size and (points.min() < 0.0 or points.max() > cfg.L):
        raise ParameterError(f"points must lie in [0, {cfg.L}]^3 for the Fourier-space evaluation")


def spread(system: SourceSystem, cfg: EwaldConfig, kind=None):
    """Grid the sources with truncated Gaussians; returns a :class:`~fsewald.greens.Grid`.

    Each source touches the ``P^3`` nodes nearest to it. Values are
    ``sum_n f_n (2 xi^2/(pi eta))^{3/2} exp(-2 xi^2 |x - x_n|^2 / eta)``.
    """
    from .greens import Grid

    kind = system.kind if kind is None else KernelKind.coerce(kind)
    if kind is not system.kind:
        raise ParameterError("kernel kind does not match the source system")
    if abs(system.box - cfg.L) > 1e-12 * cfg.L:
        raise ParameterError("configuration box does not match the system")
    _check_inside(system.positions, cfg)
    n_chunks = 1 if cfg.deterministic else max(min(numba.get_num_threads(), system.n), 1)
    M = cfg.M_ext
    buf = np.zeros((n_chunks, kind.arity, M, M, M))
    _spread_fgg(system.positions, system.strengths, cfg.origin, cfg.h, cfg.P, cfg.alpha,
                cfg.gauss_prefactor, _e3_table(cfg), n_chunks, buf)
    values = buf[0] if n_chunks == 1 else buf.sum(axis=0)
    return Grid(values, cfg.h, cfg.origin)


def spread_naive(system: SourceSystem, cfg: EwaldConfig):
    """Reference gridding with one exponential per node (slow, for checking :func:`spread`)."""
    from .greens import Grid

    _check_inside(system.positions, cfg)
    M = cfg.M_ext
    grid = np.zeros((system.kind.arity, M, M, M))
    _spread_naive(system.positions, system.strengths, cfg.origin, cfg.h, cfg.P, cfg.alpha,
                  cfg.gauss_prefactor, grid)
    return Grid(grid, cfg.h, cfg.origin)


# --- k-space scaling --------------------------------------------------------

@njit(parallel=True, cache=True)
def _scale(kind, ghat, octant, dk, xi, eta, out):
    n0 = ghat.shape[1]
    n1 = ghat.shape[2]
    n2 = ghat.shape[3]
    c4 = 1.0 / (4.0 * xi * xi)
    for ii in prange(n0):
        i = np.int64(ii)
        a = i if 2 * i <= n0 else n0 - i
        k0 = dk * (i if 2 * i < n0 else i - n0)
        for j in range(n1):
            b = j if 2 * j <= n1 else n1 - j
            k1 = dk * (j if 2 * j < n1 else j - n1)
            for l in range(n2):
                k2 = dk * l
                ksq = k0 * k0 + k1 * k1 + k2 * k2
                g = octant[a, b, l] * math.exp(-(1.0 - eta) * ksq * c4)
                if kind == 0:
                    s = -(1.0 + ksq * c4) * g
                    kg = k0 * ghat[0, i, j, l] + k1 * ghat[1, i, j, l] + k2 * ghat[2, i, j, l]
                    out[0, i, j, l] = s * (ksq * ghat[0, i, j, l] - k0 * kg)
                    out[1, i, j, l] = s * (ksq * ghat[1, i, j, l] - k1 * kg)
                    out[2, i, j, l] = s * (ksq * ghat[2, i, j, l] - k2 * kg)
                elif kind == 1:
                    s = -1j * (1.0 + ksq * c4) * g
                    # rows (F k), columns (F^T k), trace and k.F.k of the 3x3 strength transform
                    r0 = ghat[0, i, j, l] * k0 + ghat[1, i, j, l] * k1 + ghat[2, i, j, l] * k2
                    r1 = ghat[3, i, j, l] * k0 + ghat[4, i, j, l] * k1 + ghat[5, i, j, l] * k2
                    r2 = ghat[6, i, j, l] * k0 + ghat[7, i, j, l] * k1 + ghat[8, i, j, l] * k2
                    t0 = ghat[0, i, j, l] * k0 + ghat[3, i, j, l] * k1 + ghat[6, i, j, l] * k2
                    t1 = ghat[1, i, j, l] * k0 + ghat[4, i, j, l] * k1 + ghat[7, i, j, l] * k2
                    t2 = ghat[2, i, j, l] * k0 + ghat[5, i, j, l] * k1 + ghat[8, i, j, l] * k2
                    tr = ghat[0, i, j, l] + ghat[4, i, j, l] + ghat[8, i, j, l]
                    kfk = k0 * r0 + k1 * r1 + k2 * r2
                    out[0, i, j, l] = s * (ksq * (r0 + k0 * tr + t0) - 2.0 * k0 * kfk)
                    out[1, i, j, l] = s * (ksq * (r1 + k1 * tr + t1) - 2.0 * k1 * kfk)
                    out[2, i, j, l] = s * (ksq * (r2 + k2 * tr + t2) - 2.0 * k2 * kfk)
                else:
                    s = -1j * g
                    f0 = ghat[0, i, j, l]
                    f1 = ghat[1, i, j, l]
                    f2 = ghat[2, i, j, l]
                    out[0, i, j, l] = s * (f1 * k2 - f2 * k1)
                    out[1, i, j, l] = s * (f2 * k0 - f0 * k2)
                    out[2, i, j, l] = s * (f0 * k1 - f1 * k0)


def kspace_scale(ghat: np.ndarray, cfg: EwaldConfig, kind, green: MollifiedGreen,
                 out: np.ndarray | None = None) -> np.ndarray:
    """Multiply the transformed grid by ``exp(-(1-eta) k^2/(4 xi^2)) A(k)`` with ``A`` built on the mollified Green's function.

    ``ghat`` is in real-to-complex FFT layout ``(ncomp, 2M, 2M, M + 1)``.
    Stokeslet and rotlet take 3 components, the stresslet 9; 3 are returned.
    """
    kind = KernelKind.coerce(kind)
    if green.kind is not green_kind_for(kind):
        raise ParameterError(f"{kind.name.lower()} needs a {green_kind_for(kind).name.lower()} Green's function")
    n = cfg.conv_size
    if ghat.shape != (kind.arity, n, n, n // 2 + 1) or green.m_ext != cfg.M_ext:
        raise ParameterError(f"grid shape {ghat.shape} does not match kernel/config")
    if out is None:
        out = np.empty((3, n, n, n // 2 + 1), dtype=np.complex128)
    _scale(int(kind), ghat, green.octant, 2.0 * math.pi / (n * cfg.h), cfg.xi, cfg.eta, out)
    return out


def quadrature(w: np.ndarray, cfg: EwaldConfig, targets: np.ndarray) -> np.ndarray:
    """Trapezoidal integration of the grid field against the truncated Gaussian at each target."""
    out = np.empty((targets.shape[0], w.shape[0]))
    _quadrature(targets, w, cfg.origin, cfg.h, cfg.P, cfg.alpha,
                cfg.gauss_prefactor * cfg.h ** 3, _e3_table(cfg), out)
    return out


def padded_rfftn(grid: np.ndarray, n: int) -> np.ndarray:
    """``rfftn`` of ``grid`` (shape ``(ncomp, m, m, m)``) zero-padded to ``n^3``.

    Axes are transformed one at a time so lines that are entirely padding are
    never touched.
    """
    w = _workers()
    out = scipy.fft.rfft(grid, n, axis=3, workers=w)
    out = scipy.fft.fft(out, n, axis=2, overwrite_x=True, workers=w)
    return scipy.fft.fft(out, n, axis=1, overwrite_x=True, workers=w)


def cropped_irfftn(what: np.ndarray, n: int, m: int) -> np.ndarray:
    """First ``m^3`` values of ``irfftn(what, (n, n, n))``, skipping lines outside the crop."""
    w = _workers()
    out = scipy.fft.ifft(what, axis=1, overwrite_x=True, workers=w)[:, :m]
    out = scipy.fft.ifft(out, axis=2, overwrite_x=True, workers=w)[:, :, :m]
    return np.ascontiguousarray(scipy.fft.irfft(out, n, axis=3, workers=w)[..., :m])


def fourier_sum(system: SourceSystem, cfg: EwaldConfig, kind=None, targets=None,
                green: MollifiedGreen | None = None, timings: dict | None = None) -> np.ndarray:
    """Long-range part ``u^F`` at the targets (default: the sources)."""
    kind = system.kind if kind is None else KernelKind.coerce(kind)
    tgt = system.positions if targets is None else _as_points(targets, "targets")
    _check_inside(tgt, cfg)
    clock = time.perf_counter
    t0 = clock()
    if green is None:
        green = _default_cache.get(kind, cfg)
    t1 = clock()
    grid = spread(system, cfg, kind).values
    t2 = clock()
    n = cfg.conv_size
    ghat = padded_rfftn(grid, n)
    del grid
    t3 = clock()
    what = kspace_scale(ghat, cfg, kind, green,
                        out=ghat[:3] if kind.arity == 3 else None)
    del ghat
    t4 = clock()
    w = cropped_irfftn(what, n, cfg.M_ext)
    del what
    t5 = clock()
    u = quadrature(w, cfg, tgt)
    t6 = clock()
    if timings is not None:
        timings["green"] = timings.get("green", 0.0) + (t1 - t0)
        timings["spread"] = timings.get("spread", 0.0) + (t2 - t1)
        timings["fft"] = timings.get("fft", 0.0) + (t3 - t2) + (t5 - t4)
        timings["scale"] = timings.get("scale", 0.0) + (t4 - t3)
        timings["quadrature"] = timings.get("quadrature", 0.0) + (t6 - t5)
    return u


def total_sum(system: SourceSystem, cfg: EwaldConfig, kind=None, targets=None,
              green: MollifiedGreen | None = None, timings: dict | None = None) -> np.ndarray:
    """Full potential ``u^R + u^F + u^self``.

    The self term applies only when evaluating at the sources (``targets=None``).
    """
    kind = system.kind if kind is None else KernelKind.coerce(kind)
    t0 = time.perf_counter()
    ur = real_space_sum(system, kind, cfg.xi, cfg.rc, targets, ordered=cfg.deterministic)
    t1 = time.perf_counter()
    uf = fourier_sum(system, cfg, kind, targets, green, timings)
    u = ur + uf
    if targets is None:
        u += self_interaction(cfg.xi, system.strengths, kind)
    if timings is not None:
        timings["realspace"] = timings.get("realspace", 0.0) + (t1 - t0)
    return u
