"""Domain types, free-space Stokes kernels and the direct summation oracle.

Strengths are bare: the ``8*pi*mu`` factor that normally multiplies a point
force is left to the caller, so every routine here evaluates plain kernel
sums ``u(x) = sum_n G(x - x_n) . f_n``.
"""
from dataclasses import dataclass
import enum
import math

import numpy as np

from . import _kernels

__all__ = [
    "KernelKind",
    "SourceSystem",
    "KernelDomainError",
    "ParameterError",
    "stresslet_strengths",
    "eval_kernel",
    "direct_sum",
    "self_interaction",
    "rms_error",
]


class ParameterError(ValueError):
    """Invalid or infeasible method parameters."""


class KernelDomainError(ValueError):
    """A kernel was evaluated at zero separation."""


class KernelKind(enum.IntEnum):
    STOKESLET = 0
    STRESSLET = 1
    ROTLET = 2

    @property
    def arity(self) -> int:
        """Number of strength components per source."""
        return 9 if self is KernelKind.STRESSLET else 3

    @classmethod
    def coerce(cls, value) -> "KernelKind":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ParameterError(f"unknown kernel {value!r}") from None
        return cls(int(value))


def _as_strengths(kind: KernelKind, strengths) -> np.ndarray:
    f = np.asarray(strengths, dtype=np.float64)
    if f.ndim == 1 or (kind is KernelKind.STRESSLET and f.shape == (3, 3)):
        f = f.reshape(1, -1)
    if kind is KernelKind.STRESSLET and f.ndim == 3:
        f = f.reshape(f.shape[0], 9)
    if f.ndim != 2 or f.shape[1] != kind.arity:
        raise ParameterError(
            f"{kind.name.lower()} strengths need {kind.arity} components, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ParameterError("strengths must be finite")
    return np.ascontiguousarray(f)


def _as_points(points, name="points") -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != 3:
        raise ParameterError(f"{name} must have shape (n, 3), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"{name} must be finite")
    return np.ascontiguousarray(x)


def stresslet_strengths(q, n) -> np.ndarray:
    """Build flattened stresslet strengths ``f_lm = n_l q_m`` from vector pairs."""
    q = _as_points(q, "q")
    n = _as_points(n, "n")
    return np.einsum("il,im->ilm", n, q).reshape(-1, 9)


@dataclass(frozen=True)
class SourceSystem:
    """N point sources with strengths inside the cube ``[0, box]^3``.

    ``strengths`` has shape (N, 3) for stokeslets and rotlets and (N, 9) for
    stresslets (row-major ``f_lm``).
    """

    positions: np.ndarray
    strengths: np.ndarray
    box: float
    kind: KernelKind = KernelKind.STOKESLET

    def __post_init__(self):
        kind = KernelKind.coerce(self.kind)
        x = _as_points(self.positions, "positions")
        f = _as_strengths(kind, self.strengths)
        if x.shape[0] != f.shape[0] or x.shape[0] < 1:
            raise ParameterError("positions and strengths must have the same length N >= 1")
        if not self.box > 0:
            raise ParameterError("box side must be positive")
        if x.min() < 0.0 or x.max() > self.box:
            raise ParameterError(f"positions must lie in [0, {self.box}]^3")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "strengths", f)
        object.__setattr__(self, "box", float(self.box))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def q(self) -> float:
        """Sum of squared strength components."""
        return float(np.sum(self.strengths ** 2))

    def scaled(self, c: float) -> "SourceSystem":
        return SourceSystem(self.positions, c * self.strengths, self.box, self.kind)


def eval_kernel(kind, r, f) -> np.ndarray:
    """Evaluate ``G(r) . f`` for a single separation vector."""
    kind = KernelKind.coerce(kind)
    r = np.asarray(r, dtype=np.float64)
    if not np.any(r):
        raise KernelDomainError("kernel evaluated at r = 0")
    f = _as_strengths(kind, f)[0]
    return _kernels.eval_free(int(kind), r, f)


def direct_sum(system: SourceSystem, kind=None, targets=None, exclude_self=None) -> np.ndarray:
    """Exact O(N * n_targets) summation; the reference every fast result is checked against.

    With ``targets=None`` the sum is evaluated at the sources and the n = m
    term is skipped.
    """
    kind = system.kind if kind is None else KernelKind.coerce(kind)
    if kind is not system.kind:
        raise ParameterError("kernel kind does not match the source system")
    if targets is None:
        tgt = system.positions
        exclude_self = True if exclude_self is None else exclude_self
    else:
        tgt = _as_points(targets, "targets")
        exclude_self = bool(exclude_self)
        if exclude_self and (tgt.shape != system.positions.shape
                             or not np.array_equal(tgt, system.positions)):
            raise ParameterError("exclude_self requires targets identical to the sources")
    out = np.empty((tgt.shape[0], 3))
    bad = _kernels.direct_loop(int(kind), system.positions, system.strengths,
                               tgt, bool(exclude_self), out)
    if bad:
        raise KernelDomainError(f"{bad} coincident source/target pairs")
    return out


def self_interaction(xi: float, f, kind) -> np.ndarray:
    """Correction removing each source's own smeared contribution from the Fourier part.

    Only the stokeslet has a nonzero limit, ``-(4 xi / sqrt(pi)) f``.
    """
    kind = KernelKind.coerce(kind)
    if not xi > 0:
        raise ParameterError("xi must be positive")
    single = np.ndim(f) == 1 or np.shape(f) == (3, 3)
    f = _as_strengths(kind, f)
    if kind is KernelKind.STOKESLET:
        out = -4.0 * xi / math.sqrt(math.pi) * f
    else:
        out = np.zeros((f.shape[0], 3))
    return out[0] if single else out


def rms_error(u, u_ref, relative: bool = True) -> float:
    """Root-mean-square of ``|u - u_ref|`` over points, optionally divided by RMS ``|u_ref|``."""
    u = np.asarray(u, dtype=np.float64)
    u_ref = np.asarray(u_ref, dtype=np.float64)
    if u.shape != u_ref.shape:
        raise ParameterError(f"shape mismatch {u.shape} vs {u_ref.shape}")
    err = math.sqrt(np.mean(np.sum((u - u_ref) ** 2, axis=-1)))
    if not relative:
        return err
    ref = math.sqrt(np.mean(np.sum(u_ref ** 2, axis=-1)))
    if ref == 0.0:
        raise ZeroDivisionError("relative error against an all-zero reference")
    return err / ref
