"""Free-space harmonic and biharmonic solves with truncated Green's functions.

The kernels ``1/r`` and ``r`` are cut off outside a radius ``R`` that covers
every point-to-point distance of the computational cube. Their Fourier
transforms are then entire, so the solution can be computed with FFTs. The
mollified (grid-effective) Green's function is precomputed once per domain on
an oversampled grid and kept as Fourier data on the ``(2 M)^3`` convolution
grid.

Storage layout: the mollified Green's function is real and even in every
axis, so only the non-negative wavenumber octant ``(M + 1)^3`` is stored.
Index ``i`` of a length-``2M`` FFT axis maps to octant index
``min(i, 2M - i)``; wavenumbers follow the standard FFT ordering
(non-negative first). FFT sizes with small prime factors are fastest.
"""
from dataclasses import dataclass
import enum
from fractions import Fraction
import math
import struct
from pathlib import Path

import numpy as np
import scipy.fft
from numba import njit, prange

from .core import ParameterError

__all__ = [
    "GreenKind",
    "Grid",
    "MollifiedGreen",
    "hhat_R",
    "bhat_R",
    "min_oversampling",
    "oversampled_size",
    "precompute_mollified_green",
    "freespace_solve",
    "save_green",
    "load_green",
]

SQRT3 = math.sqrt(3.0)
MAGIC = b"FSEG"
FORMAT_VERSION = 1


class GreenKind(enum.IntEnum):
    HARMONIC = 0
    BIHARMONIC = 1


@dataclass
class Grid:
    """Uniform grid with ``values`` of shape (ncomp, n0, n1, n2); node ``i`` sits at ``origin + i*h``."""

    values: np.ndarray
    h: float
    origin: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 3:
            v = v[None]
        if v.ndim != 4 or min(v.shape) < 1:
            raise ParameterError(f"grid values must be (ncomp, n0, n1, n2), got {v.shape}")
        if not self.h > 0:
            raise ParameterError("grid spacing must be positive")
        self.values = v

    @property
    def ncomp(self) -> int:
        return self.values.shape[0]

    @property
    def extents(self) -> tuple:
        return self.values.shape[1:]

    def nodes(self, axis_len=None) -> np.ndarray:
        n = self.extents[0] if axis_len is None else axis_len
        return self.origin + self.h * np.arange(n)


def _real_dtype(k):
    return np.longdouble if np.asarray(k).dtype == np.longdouble else np.float64


def _pi(dtype):
    return 4 * np.arctan(np.ones((), dtype=dtype))


def hhat_R(k, R: float):
    """Fourier transform of ``1/r`` truncated at radius ``R``; equals ``2 pi R^2`` at k = 0.

    Long double input is evaluated in long double.
    """
    dtype = _real_dtype(k)
    k = np.asarray(k, dtype=dtype)
    R = dtype(R)
    u = 0.5 * R * k
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(u > 0, np.sin(u) / u, dtype(1))
    out = 2 * _pi(dtype) * R * R * s * s
    return out if out.ndim else out[()]


# Taylor coefficients of the bhat_R numerator in powers of (Rk)^2, starting at (Rk)^4.
_B_SERIES = [Fraction((-1) ** p * 2 * (2 * p - 1) * (p - 1), math.factorial(2 * p))
             for p in range(2, 10)]
_B_SWITCH = 0.5


def bhat_R(k, R: float):
    """Fourier transform of ``r`` truncated at radius ``R``; equals ``pi R^4`` at k = 0.

    Below ``R k = 0.5`` the closed form loses digits to cancellation, so a
    series in ``(R k)^2`` is summed instead. Long double input is evaluated
    in long double.
    """
    dtype = _real_dtype(k)
    k = np.asarray(k, dtype=dtype)
    R = dtype(R)
    pi4 = 4 * _pi(dtype)
    x = R * k
    out = np.empty_like(x)
    small = x < _B_SWITCH
    xs = x[small] ** 2
    series = np.zeros_like(xs)
    for c in _B_SERIES[::-1]:
        series = series * xs + dtype(c.numerator) / dtype(c.denominator)
    out[small] = pi4 * R ** 4 * series
    xl = x[~small]
    kl = k[~small]
    out[~small] = pi4 * ((2 - xl * xl) * np.cos(xl) + 2 * xl * np.sin(xl) - 2) / kl ** 4
    return out if out.ndim else out[()]


def min_oversampling(L_ext: float, R: float) -> float:
    return (L_ext + R) / L_ext


def oversampled_size(m_ext: int, sf: float) -> int:
    """Smallest even integer >= sf * m_ext."""
    n = int(math.ceil(sf * m_ext - 1e-9))
    return n + (n % 2)


@dataclass(frozen=True)
class MollifiedGreen:
    """Fourier data of the grid-effective Green's function for an ``M^3`` domain grid.

    ``octant`` holds the real transform on wavenumber indices ``0..M`` per
    axis of the ``(2M)^3`` convolution grid.
    """

    kind: GreenKind
    L_ext: float
    h: float
    R: float
    octant: np.ndarray
    sf: float = float("nan")
    k0_oversampled: float = float("nan")

    @property
    def m_ext(self) -> int:
        return self.octant.shape[0] - 1

    @property
    def conv_size(self) -> int:
        return 2 * self.m_ext

    def rescaled(self, L_ext: float) -> "MollifiedGreen":
        """The same construction for a cube of side ``L_ext`` (same ``m_ext``, ``sf`` and ``R/L_ext``).

        Every step is scale-free, so the data only pick up the homogeneity of
        the kernel times ``h^3``: ``L^2`` for the harmonic and ``L^4`` for the
        biharmonic case.
        """
        lam = float(L_ext) / self.L_ext
        p = 2 if self.kind is GreenKind.HARMONIC else 4
        return MollifiedGreen(kind=self.kind, L_ext=float(L_ext), h=self.h * lam, R=self.R * lam,
                              octant=self.octant * lam ** p, sf=self.sf,
                              k0_oversampled=self.k0_oversampled * lam ** p)

    def full(self) -> np.ndarray:
        """Expand to the full ``(2M)^3`` FFT-ordered grid."""
        n = self.conv_size
        idx = np.minimum(np.arange(n), n - np.arange(n))
        return self.octant[np.ix_(idx, idx, idx)]

    def physical(self) -> np.ndarray:
        """Effective Green's function divided by ``h^3`` on the octant of node offsets ``0..M``.

        Away from the origin it approximates the untruncated kernel.
        """
        m = self.m_ext
        g = scipy.fft.dctn(self.octant, type=1) / (2 * m) ** 3
        return g / self.h ** 3


def precompute_mollified_green(kind, L_ext: float, m_ext: int, sf: float = 1.0 + SQRT3,
                               R: float | None = None) -> MollifiedGreen:
    """Build the mollified Green's function for a cube of side ``L_ext`` with ``m_ext`` nodes per side.

    The truncated transform is sampled on an ``n_os^3`` grid (``n_os`` the
    smallest even integer >= ``sf * m_ext``) with spacing ``2 pi / (n_os h)``,
    inverse transformed, cut to node offsets ``-m_ext..m_ext-1`` and
    transformed again on the ``(2 m_ext)^3`` grid. Both transforms use
    type-1 DCTs, which are exactly the DFTs of the even extensions.
    """
    kind = GreenKind(kind)
    m_ext = int(m_ext)
    if m_ext < 1 or not L_ext > 0:
        raise ParameterError("need m_ext >= 1 and L_ext > 0")
    R = SQRT3 * L_ext if R is None else float(R)
    if R < SQRT3 * L_ext * (1 - 1e-12):
        raise ParameterError("truncation radius must cover the cube diagonal")
    if sf < min_oversampling(L_ext, R) - 1e-12:
        raise ParameterError(f"oversampling factor {sf} below the bound {min_oversampling(L_ext, R):.6f}")
    h = L_ext / m_ext
    n_os = oversampled_size(m_ext, sf)
    half = n_os // 2
    # The transforms run in long double: the biharmonic transform spans
    # (R k)^4 in magnitude and double precision round-off would otherwise set
    # an error floor near 1e-13.
    ld = np.longdouble
    k1 = 2 * _pi(ld) / (n_os * (ld(L_ext) / m_ext)) * np.arange(half + 1, dtype=ld)
    k2 = k1[None, :, None] ** 2 + k1[None, None, :] ** 2
    ghat = np.empty((half + 1,) * 3, dtype=ld)
    transform = hhat_R if kind is GreenKind.HARMONIC else bhat_R
    for i in range(half + 1):
        ghat[i] = transform(np.sqrt(k1[i] ** 2 + k2[0]), R)
    k0 = float(ghat[0, 0, 0])
    g = scipy.fft.dctn(ghat, type=1, overwrite_x=True)
    del ghat
    g = g[:m_ext + 1, :m_ext + 1, :m_ext + 1] / ld(n_os) ** 3
    octant = scipy.fft.dctn(g, type=1).astype(np.float64)
    return MollifiedGreen(kind=kind, L_ext=float(L_ext), h=h, R=R,
                          octant=np.ascontiguousarray(octant), sf=float(sf), k0_oversampled=k0)


@njit(parallel=True, cache=True)
def _apply_octant(fhat, octant, out):
    ncomp, n0, n1, n2 = fhat.shape
    for ii in prange(n0):
        i = np.int64(ii)
        a = i if 2 * i <= n0 else n0 - i
        for j in range(n1):
            b = j if 2 * j <= n1 else n1 - j
            for k in range(n2):
                g = octant[a, b, k]
                for c in range(ncomp):
                    out[c, i, j, k] = g * fhat[c, i, j, k]


def freespace_solve(green: MollifiedGreen, rhs) -> Grid:
    """Aperiodic convolution of ``rhs`` (on the ``M^3`` grid) with the Green's function.

    Returns ``int G(x - y) rhs(y) dy`` at the grid nodes, i.e. the solution of
    ``-lap(phi) = 4 pi rhs`` for the harmonic kernel and of
    ``lap^2(phi) = -8 pi rhs`` for the biharmonic one.
    """
    if not isinstance(rhs, Grid):
        rhs = Grid(np.asarray(rhs, dtype=np.float64), green.h)
    m = green.m_ext
    if rhs.extents != (m, m, m):
        raise ParameterError(f"rhs extents {rhs.extents} do not match the Green's function grid {m}")
    n = 2 * m
    fhat = scipy.fft.rfftn(rhs.values, s=(n, n, n), axes=(1, 2, 3))
    _apply_octant(fhat, green.octant, fhat)
    phi = scipy.fft.irfftn(fhat, s=(n, n, n), axes=(1, 2, 3))
    return Grid(np.ascontiguousarray(phi[:, :m, :m, :m]), rhs.h, rhs.origin)


def save_green(green: MollifiedGreen, path) -> None:
    """Write the binary cache file (magic, version, kind, L_ext, h, R, extents, payload)."""
    path = Path(path)
    header = MAGIC + struct.pack("<IB3d3Q", FORMAT_VERSION, int(green.kind),
                                 green.L_ext, green.h, green.R, *green.octant.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(green.octant, dtype="<f8").tobytes())


def load_green(path) -> MollifiedGreen:
    path = Path(path)
    with open(path, "rb") as fh:
        data = fh.read()
    head = struct.calcsize("<IB3d3Q")
    if data[:4] != MAGIC:
        raise ValueError(f"{path} is not a mollified Green's function cache file")
    if len(data) < 4 + head:
        raise ValueError(f"truncated cache header in {path}")
    version, kind, L_ext, h, R, n0, n1, n2 = struct.unpack("<IB3d3Q", data[4:4 + head])
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported cache version {version}")
    payload = np.frombuffer(data, dtype="<f8", offset=4 + head)
    if payload.size != n0 * n1 * n2:
        raise ValueError(f"truncated cache file {path}")
    return MollifiedGreen(kind=GreenKind(kind), L_ext=L_ext, h=h, R=R,
                          octant=payload.reshape(n0, n1, n2).astype(np.float64))
