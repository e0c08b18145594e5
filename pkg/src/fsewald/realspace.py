"""Short-range (real-space) part of the Ewald split, evaluated with a cell list."""
from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .core import (KernelDomainError, KernelKind, ParameterError, SourceSystem,
                   _as_points, _as_strengths)

__all__ = ["CellList", "build_cell_list", "eval_real_kernel", "real_space_sum",
           "real_space_sum_dense"]


@dataclass(frozen=True)
class CellList:
    """Sources bucketed into cubic cells of side ``cell_side >= rc``.

    Points of cell ``c`` are ``order[start[c]:start[c + 1]]``; cells are
    numbered ``(ix * ny + iy) * nz + iz``.
    """

    cell_side: float
    dims: np.ndarray
    start: np.ndarray
    order: np.ndarray
    rc: float

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.dims))

    def cell_of(self, points) -> np.ndarray:
        idx = np.floor(np.asarray(points) / self.cell_side).astype(np.int64)
        return np.clip(idx, 0, self.dims - 1)

    def bucket(self, c: int) -> np.ndarray:
        return self.order[self.start[c]:self.start[c + 1]]

    def neighbours(self, point) -> np.ndarray:
        """Indices of all points in the 27-cell neighbourhood of ``point``."""
        cx, cy, cz = self.cell_of(np.asarray(point, dtype=float)[None, :])[0]
        nx, ny, nz = self.dims
        found = []
        for ax in range(max(cx - 1, 0), min(cx + 2, nx)):
            for ay in range(max(cy - 1, 0), min(cy + 2, ny)):
                for az in range(max(cz - 1, 0), min(cz + 2, nz)):
                    found.append(self.bucket((ax * ny + ay) * nz + az))
        return np.concatenate(found) if found else np.empty(0, dtype=np.int64)


def build_cell_list(system: SourceSystem, rc: float, domain_pad: float = 0.0) -> CellList:
    """Bucket the sources into cells of side at least ``rc``.

    ``domain_pad`` enlarges the bucketed region beyond ``[0, box]`` on the
    upper side. With ``rc`` at or above the padded extent a single cell
    holds every point.
    """
    if not rc > 0:
        raise ParameterError("rc must be positive")
    extent = system.box + domain_pad
    n_side = max(int(math.floor(extent / rc)), 1)
    cell_side = extent / n_side
    dims = np.array([n_side] * 3, dtype=np.int64)
    idx = np.clip(np.floor(system.positions / cell_side).astype(np.int64), 0, n_side - 1)
    flat = (idx[:, 0] * n_side + idx[:, 1]) * n_side + idx[:, 2]
    order = np.argsort(flat, kind="stable").astype(np.int64)
    counts = np.bincount(flat, minlength=n_side ** 3)
    start = np.zeros(n_side ** 3 + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return CellList(cell_side=cell_side, dims=dims, start=start, order=order, rc=float(rc))


def eval_real_kernel(kind, r, xi: float, f) -> np.ndarray:
    """Rapidly decaying part ``G^R(r, xi) . f`` of the split kernel.

    Hasimoto screening for the stokeslet and stresslet, Ewald screening for
    the rotlet.
    """
    kind = KernelKind.coerce(kind)
    if not xi > 0:
        raise ParameterError("xi must be positive")
    r = np.asarray(r, dtype=np.float64)
    if not np.any(r):
        raise KernelDomainError("real-space kernel evaluated at r = 0")
    f = _as_strengths(kind, f)[0]
    return _kernels.eval_real(int(kind), r, float(xi), f)


def _check_no_duplicates(x):
    if np.unique(x, axis=0).shape[0] != x.shape[0]:
        raise KernelDomainError("coincident distinct source points")


def real_space_sum(system: SourceSystem, kind, xi: float, rc: float, targets=None,
                   cells: CellList | None = None, ordered: bool = False) -> np.ndarray:
    """Sum ``G^R`` over all sources within the closed ball of radius ``rc``.

    Zero-distance pairs are skipped. With ``targets=None`` the sum is taken at
    the sources themselves. ``ordered`` adds the terms in source order, giving
    results bitwise equal to :func:`real_space_sum_dense`.
    """
    kind = KernelKind.coerce(kind)
    if kind is not system.kind:
        raise ParameterError("kernel kind does not match the source system")
    if not (xi > 0 and rc > 0):
        raise ParameterError("xi and rc must be positive")
    if targets is None:
        tgt = system.positions
        _check_no_duplicates(tgt)
    else:
        tgt = _as_points(targets, "targets")
    if cells is None or cells.rc < rc:
        cells = build_cell_list(system, rc)
    # visiting targets cell by cell keeps the neighbour data in cache
    c = cells.cell_of(tgt)
    n_side = cells.dims
    t_order = np.argsort((c[:, 0] * n_side[1] + c[:, 1]) * n_side[2] + c[:, 2], kind="stable")
    res = np.empty((tgt.shape[0], 3))
    _kernels.real_cell_loop(int(kind), system.positions, system.strengths,
                            system.positions[cells.order], system.strengths[cells.order],
                            np.ascontiguousarray(tgt[t_order]), float(xi), float(rc),
                            cells.cell_side, cells.dims, cells.start, cells.order,
                            bool(ordered), res)
    out = np.empty_like(res)
    out[t_order] = res
    return out


def real_space_sum_dense(system: SourceSystem, xi: float, rc: float = math.inf,
                         targets=None) -> np.ndarray:
    """All-pairs version of :func:`real_space_sum`; ``rc=inf`` gives the untruncated sum."""
    tgt = system.positions if targets is None else _as_points(targets, "targets")
    out = np.empty((tgt.shape[0], 3))
    _kernels.real_dense_loop(int(system.kind), system.positions, system.strengths, tgt,
                             float(xi), float(rc), out)
    return out
