"""Compiled pointwise kernels and pair loops.

Kernel codes: 0 = stokeslet, 1 = stresslet, 2 = rotlet. Stresslet strengths
are flattened row-major, ``f[3*l + m] = f_lm``.
"""
import math

import numpy as np
from numba import njit, prange

SQRT_PI = math.sqrt(math.pi)


@njit(cache=True, inline="always")
def _free(kind, rx, ry, rz, f):
    r2 = rx * rx + ry * ry + rz * rz
    r = math.sqrt(r2)
    if kind == 0:
        inv = 1.0 / r
        rdf = (rx * f[0] + ry * f[1] + rz * f[2]) / r2
        return (inv * (f[0] + rx * rdf),
                inv * (f[1] + ry * rdf),
                inv * (f[2] + rz * rdf))
    elif kind == 1:
        s = (rx * (f[0] * rx + f[1] * ry + f[2] * rz)
             + ry * (f[3] * rx + f[4] * ry + f[5] * rz)
             + rz * (f[6] * rx + f[7] * ry + f[8] * rz))
        c = -6.0 * s / (r2 * r2 * r)
        return c * rx, c * ry, c * rz
    else:
        c = 1.0 / (r2 * r)
        return (c * (f[1] * rz - f[2] * ry),
                c * (f[2] * rx - f[0] * rz),
                c * (f[0] * ry - f[1] * rx))


@njit(cache=True, inline="always")
def _real(kind, rx, ry, rz, xi, f):
    r2 = rx * rx + ry * ry + rz * rz
    r = math.sqrt(r2)
    xr = xi * r
    e = math.exp(-xr * xr)
    ec = math.erfc(xr)
    ux = rx / r
    uy = ry / r
    uz = rz / r
    if kind == 0:
        c1 = 2.0 * (xi * e / SQRT_PI + ec / (2.0 * r))
        c2 = 4.0 * xi * e / SQRT_PI
        udf = ux * f[0] + uy * f[1] + uz * f[2]
        return ((c1 - c2) * f[0] + c1 * ux * udf,
                (c1 - c2) * f[1] + c1 * uy * udf,
                (c1 - c2) * f[2] + c1 * uz * udf)
    elif kind == 1:
        a = -2.0 / r * (3.0 * ec / r + 2.0 * xi / SQRT_PI * (3.0 + 2.0 * xr * xr) * e)
        b = 4.0 * xi * xi * xi / SQRT_PI * e * r
        fr0 = f[0] * ux + f[1] * uy + f[2] * uz
        fr1 = f[3] * ux + f[4] * uy + f[5] * uz
        fr2 = f[6] * ux + f[7] * uy + f[8] * uz
        ft0 = f[0] * ux + f[3] * uy + f[6] * uz
        ft1 = f[1] * ux + f[4] * uy + f[7] * uz
        ft2 = f[2] * ux + f[5] * uy + f[8] * uz
        tr = f[0] + f[4] + f[8]
        s = ux * fr0 + uy * fr1 + uz * fr2
        return (a * s * ux + b * (fr0 + ux * tr + ft0),
                a * s * uy + b * (fr1 + uy * tr + ft1),
                a * s * uz + b * (fr2 + uz * tr + ft2))
    else:
        c = ec / r2 + 2.0 * xi / SQRT_PI * e / r
        return (c * (f[1] * uz - f[2] * uy),
                c * (f[2] * ux - f[0] * uz),
                c * (f[0] * uy - f[1] * ux))


@njit(cache=True)
def eval_free(kind, r, f):
    out = np.empty(3)
    out[0], out[1], out[2] = _free(kind, r[0], r[1], r[2], f)
    return out


@njit(cache=True)
def eval_real(kind, r, xi, f):
    out = np.empty(3)
    out[0], out[1], out[2] = _real(kind, r[0], r[1], r[2], xi, f)
    return out


@njit(parallel=True, cache=True)
def direct_loop(kind, src, f, tgt, exclude_self, out):
    """Dense pair sum. Returns the number of coincident distinct pairs."""
    nt = tgt.shape[0]
    ns = src.shape[0]
    bad = np.zeros(nt, dtype=np.int64)
    for i in prange(nt):
        sx = 0.0
        sy = 0.0
        sz = 0.0
        for n in range(ns):
            if exclude_self and n == i:
                continue
            rx = tgt[i, 0] - src[n, 0]
            ry = tgt[i, 1] - src[n, 1]
            rz = tgt[i, 2] - src[n, 2]
            if rx == 0.0 and ry == 0.0 and rz == 0.0:
                bad[i] += 1
                continue
            a, b, c = _free(kind, rx, ry, rz, f[n])
            sx += a
            sy += b
            sz += c
        out[i, 0] = sx
        out[i, 1] = sy
        out[i, 2] = sz
    return bad.sum()


@njit(parallel=True, cache=True)
def real_dense_loop(kind, src, f, tgt, xi, rc, out):
    """All-pairs truncated real-space sum; zero-distance terms skipped."""
    nt = tgt.shape[0]
    ns = src.shape[0]
    rc2 = rc * rc
    for i in prange(nt):
        sx = 0.0
        sy = 0.0
        sz = 0.0
        for n in range(ns):
            rx = tgt[i, 0] - src[n, 0]
            ry = tgt[i, 1] - src[n, 1]
            rz = tgt[i, 2] - src[n, 2]
            r2 = rx * rx + ry * ry + rz * rz
            if r2 == 0.0 or r2 > rc2:
                continue
            a, b, c = _real(kind, rx, ry, rz, xi, f[n])
            sx += a
            sy += b
            sz += c
        out[i, 0] = sx
        out[i, 1] = sy
        out[i, 2] = sz


@njit(parallel=True, cache=True)
def real_cell_loop(kind, src, f, src_s, f_s, tgt, xi, rc, cell_side, dims, start, order, ordered,
                   out):
    """Truncated real-space sum over the 27-cell neighbourhood of each target.

    With ``ordered`` the neighbours of a target are accumulated in increasing
    source index, which reproduces :func:`real_dense_loop` bit for bit.
    ``src_s`` and ``f_s`` are the sources permuted by ``order``.
    """
    nt = tgt.shape[0]
    rc2 = rc * rc
    nx, ny, nz = dims[0], dims[1], dims[2]
    for i in prange(nt):
        cx = min(max(int(math.floor(tgt[i, 0] / cell_side)), 0), nx - 1)
        cy = min(max(int(math.floor(tgt[i, 1] / cell_side)), 0), ny - 1)
        cz = min(max(int(math.floor(tgt[i, 2] / cell_side)), 0), nz - 1)
        x0 = max(cx - 1, 0)
        x1 = min(cx + 2, nx)
        y0 = max(cy - 1, 0)
        y1 = min(cy + 2, ny)
        z0 = max(cz - 1, 0)
        z1 = min(cz + 2, nz)
        sx = 0.0
        sy = 0.0
        sz = 0.0
        if ordered:
            cnt = 0
            for ax in range(x0, x1):
                for ay in range(y0, y1):
                    c = (ax * ny + ay) * nz + z0
                    cnt += start[c + z1 - z0] - start[c]
            idx = np.empty(cnt, dtype=np.int64)
            cnt = 0
            for ax in range(x0, x1):
                for ay in range(y0, y1):
                    c = (ax * ny + ay) * nz + z0
                    for p in range(start[c], start[c + z1 - z0]):
                        idx[cnt] = order[p]
                        cnt += 1
            idx.sort()
            for q in range(cnt):
                n = idx[q]
                rx = tgt[i, 0] - src[n, 0]
                ry = tgt[i, 1] - src[n, 1]
                rz = tgt[i, 2] - src[n, 2]
                r2 = rx * rx + ry * ry + rz * rz
                if r2 == 0.0 or r2 > rc2:
                    continue
                a, b, cc = _real(kind, rx, ry, rz, xi, f[n])
                sx += a
                sy += b
                sz += cc
        else:
            for ax in range(x0, x1):
                for ay in range(y0, y1):
                    # cells along z are contiguous in the bucket arrays
                    c = (ax * ny + ay) * nz + z0
                    for p in range(start[c], start[c + z1 - z0]):
                        rx = tgt[i, 0] - src_s[p, 0]
                        ry = tgt[i, 1] - src_s[p, 1]
                        rz = tgt[i, 2] - src_s[p, 2]
                        r2 = rx * rx + ry * ry + rz * rz
                        if r2 == 0.0 or r2 > rc2:
                            continue
                        a, b, cc = _real(kind, rx, ry, rz, xi, f_s[p])
                        sx += a
                        sy += b
                        sz += cc
        out[i, 0] = sx
        out[i, 1] = sy
        out[i, 2] = sz
