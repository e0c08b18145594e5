"""Benchmark runs: random systems, timed fast sums, oracle errors, tabular reports.

Random systems use numpy's PCG64 bit generator seeded with the run seed:
positions first (uniform on [0, L)^3, shape (N, 3)), then strengths (uniform
on [-1, 1) per component). The stream is platform independent.
"""
from dataclasses import asdict, dataclass, field, replace
import csv
import io
import json
import logging
import math
import time
from pathlib import Path

import numba
import numpy as np

from ..core import KernelKind, ParameterError, SourceSystem, direct_sum, rms_error
from ..estimates import error_budget, reference_rms, select_parameters, suggest_xi
from ..greens import (GreenKind, SQRT3, load_green, oversampled_size,
                      precompute_mollified_green, save_green)
from ..spectral import EwaldConfig, green_kind_for, make_config, total_sum

__all__ = [
    "SCHEMA_VERSION",
    "COLUMNS",
    "RunSpec",
    "RunReport",
    "generate_system",
    "build_config",
    "obtain_green",
    "run",
    "sweep_xi",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SWEEP_AXES = ("none", "P", "M", "rc", "N", "xi")
STAGES = ("spread", "fft", "scale", "quadrature", "realspace")

COLUMNS = (
    "schema_version", "kernel", "n", "box", "seed", "xi", "rc", "M", "P", "M_ext", "conv_size",
    "n_os", "sf", "tol", "rel_error", "abs_error", "error_source", "predicted_rel_error",
    "predicted_real_rms", "predicted_fourier_rms", "predicted_gridding_rms", "t_precompute", "t_spread", "t_fft", "t_scale",
    "t_quadrature", "t_realspace", "t_total", "t_total_with_precompute", "green_cached",
    "direct_recommended", "deterministic", "threads", "repeats",
)


@dataclass(frozen=True)
class RunSpec:
    """One experiment: a random system, how to parametrise the method, and what to sweep.

    Give either ``tol`` or all of ``rc``, ``M``, ``P`` (``xi`` is then required).
    ``box`` and ``density`` are alternatives; with ``density`` the box side is
    ``(n / density)^(1/3)``.
    """

    kernel: str = "stokeslet"
    n: int = 1000
    box: float | None = None
    density: float | None = None
    seed: int = 0
    xi: float | None = None
    tol: float | None = None
    rc: float | None = None
    M: int | None = None
    P: int | None = None
    axis: str = "none"
    values: tuple = ()
    sf: float = 1.0 + SQRT3
    oracle_cap: int = 50_000
    repeats: int = 3
    deterministic: bool = False
    cache_dir: str | None = None
    fast_sizes: bool = True

    def __post_init__(self):
        KernelKind.coerce(self.kernel)
        if self.n < 1:
            raise ParameterError("n must be at least 1")
        if (self.box is None) == (self.density is None):
            raise ParameterError("give exactly one of box and density")
        if self.box is not None and not self.box > 0:
            raise ParameterError("box must be positive")
        if self.density is not None and not self.density > 0:
            raise ParameterError("density must be positive")
        explicit = [v is not None for v in (self.rc, self.M, self.P)]
        if self.tol is not None and all(explicit):
            raise ParameterError("give either tol or explicit (rc, M, P), not both")
        if self.tol is None and not all(explicit):
            raise ParameterError("without tol, rc, M and P are all required")
        if self.tol is None and self.xi is None:
            raise ParameterError("explicit parameters need xi")
        if self.tol is not None and not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.axis not in SWEEP_AXES:
            raise ParameterError(f"sweep axis must be one of {SWEEP_AXES}")
        vals = tuple(float(v) for v in self.values)
        if self.axis != "none":
            if not vals or not all(math.isfinite(v) for v in vals):
                raise ParameterError("sweep values must be finite and non-empty")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ParameterError("sweep values must be sorted")
        object.__setattr__(self, "values", vals)
        if self.repeats < 1 or self.oracle_cap < 0:
            raise ParameterError("repeats must be >= 1 and oracle_cap >= 0")

    def box_for(self, n: int) -> float:
        return float(self.box) if self.box is not None else (n / self.density) ** (1.0 / 3.0)


@dataclass
class RunReport:
    spec: RunSpec
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in self.records:
            w.writerow({k: rec.get(k) for k in COLUMNS})
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {"schema_version": SCHEMA_VERSION, "spec": asdict(self.spec),
                   "records": self.records, "summary": self.summary}
        return json.dumps(payload, indent=2, default=_jsonable)

    def write(self, path, fmt: str | None = None) -> Path:
        path = Path(path)
        fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
        if fmt not in ("csv", "json"):
            raise ParameterError(f"unknown format {fmt!r}")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv() if fmt == "csv" else self.to_json())
        return path


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def generate_system(kind, n: int, L: float, seed: int) -> SourceSystem:
    """Uniform random sources, fully determined by ``seed`` (PCG64)."""
    kind = KernelKind.coerce(kind)
    if n < 1 or not L > 0:
        raise ParameterError("need n >= 1 and L > 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    pos = rng.uniform(0.0, L, size=(n, 3))
    strengths = rng.uniform(-1.0, 1.0, size=(n, kind.arity))
    return SourceSystem(pos, strengths, L, kind)


def build_config(spec: RunSpec, system: SourceSystem, **override) -> EwaldConfig:
    """Method parameters for ``system``; ``override`` replaces xi, rc, M or P.

    With ``spec.tol`` the parameters are tuned for the spec's own ``P`` and
    the override is applied afterwards, so a sweep varies one parameter only.
    """
    xi = override.get("xi", spec.xi)
    if xi is None:
        xi = suggest_xi(system.n, system.box, spec.tol)
    if spec.tol is not None:
        base = select_parameters(system.kind, system.n, system.box, system.q, xi, spec.tol,
                                 P=spec.P, sf=spec.sf,
                                 deterministic=spec.deterministic)
        rc = base.rc if spec.rc is None else spec.rc
        M = base.M if spec.M is None else spec.M
        P = base.P
        direct = base.direct_recommended
    else:
        rc, M, P = spec.rc, spec.M, spec.P
        direct = False
    rc = float(override.get("rc", rc))
    M = int(override.get("M", M))
    P = int(override.get("P", P))
    return make_config(system.box, xi, rc, M, P, sf=spec.sf, fast_sizes=spec.fast_sizes,
                       deterministic=spec.deterministic,
                       direct_recommended=direct or rc >= SQRT3 * system.box)


def _cache_path(cache_dir, kind: GreenKind, cfg: EwaldConfig) -> Path:
    return Path(cache_dir) / (f"{kind.name.lower()}_m{cfg.M_ext}_l{cfg.L_ext:.15e}"
                              f"_sf{cfg.sf:.12g}.fseg")


def obtain_green(kind, cfg: EwaldConfig, cache_dir=None) -> tuple:
    """Return ``(green, seconds, from_cache)``; reads and writes the disk cache when given."""
    gk = green_kind_for(kind)
    t0 = time.perf_counter()
    if cache_dir is not None:
        path = _cache_path(cache_dir, gk, cfg)
        g = None
        if path.exists():
            try:
                g = load_green(path)
            except ValueError as exc:
                log.warning("ignoring unreadable cache file %s: %s", path, exc)
        if g is not None:
            if (g.kind is gk and g.m_ext == cfg.M_ext and math.isclose(g.L_ext, cfg.L_ext)
                    and math.isclose(g.R, cfg.R)):
                return g, time.perf_counter() - t0, True
    g = precompute_mollified_green(gk, cfg.L_ext, cfg.M_ext, cfg.sf)
    elapsed = time.perf_counter() - t0
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        save_green(g, _cache_path(cache_dir, gk, cfg))
    return g, elapsed, False


def _timed(system, cfg, green, repeats: int) -> tuple:
    """Warm-up, then ``repeats`` timed runs; returns (u, median-run stage times, median total)."""
    u = total_sum(system, cfg, green=green)
    runs = []
    for _ in range(repeats):
        stages = {}
        t0 = time.perf_counter()
        u = total_sum(system, cfg, green=green, timings=stages)
        runs.append((time.perf_counter() - t0, stages))
    runs.sort(key=lambda r: r[0])
    total, stages = runs[len(runs) // 2]
    return u, stages, total


def _record(spec, system, cfg, green_time, cached, u, stages, total, oracle) -> dict:
    ref = reference_rms(system.kind, system.n, system.box, system.q)
    budget = error_budget(system.kind, system.q, cfg)
    rec = {
        "schema_version": SCHEMA_VERSION, "kernel": system.kind.name.lower(), "n": system.n,
        "box": system.box, "seed": spec.seed, "xi": cfg.xi, "rc": cfg.rc, "M": cfg.M, "P": cfg.P,
        "M_ext": cfg.M_ext, "conv_size": cfg.conv_size, "n_os": oversampled_size(cfg.M_ext, cfg.sf),
        "sf": cfg.sf, "tol": spec.tol,
        "predicted_rel_error": budget.predicted_total_rms / ref,
        "predicted_real_rms": budget.predicted_real_rms,
        "predicted_fourier_rms": budget.predicted_fourier_rms,
        "predicted_gridding_rms": budget.predicted_gridding_rms,
        "t_precompute": green_time, "t_total": total, "t_total_with_precompute": total + green_time,
        "green_cached": cached, "direct_recommended": cfg.direct_recommended,
        "deterministic": cfg.deterministic, "threads": numba.get_num_threads(),
        "repeats": spec.repeats,
    }
    for s in STAGES:
        rec["t_" + s] = stages.get(s, 0.0)
    if oracle is not None:
        rec["abs_error"] = rms_error(u, oracle, relative=False)
        rec["rel_error"] = rms_error(u, oracle)
        rec["error_source"] = "oracle"
    else:
        rec["abs_error"] = budget.predicted_total_rms
        rec["rel_error"] = rec["predicted_rel_error"]
        rec["error_source"] = "predicted"
    return rec


def _one(spec, system, cfg, oracle) -> dict:
    green, gt, cached = obtain_green(system.kind, cfg, spec.cache_dir)
    u, stages, total = _timed(system, cfg, green, spec.repeats)
    return _record(spec, system, cfg, gt, cached, u, stages, total, oracle)


def _oracle(spec, system):
    return direct_sum(system) if system.n <= spec.oracle_cap else None


def run(spec: RunSpec) -> RunReport:
    """Execute the spec (one point, or one per sweep value) and collect records."""
    if spec.axis == "xi":
        return sweep_xi(spec, spec.values)
    report = RunReport(spec)
    if spec.axis == "N":
        for v in spec.values:
            n = int(round(v))
            system = generate_system(spec.kernel, n, spec.box_for(n), spec.seed)
            report.records.append(_one(spec, system, build_config(spec, system),
                                       _oracle(spec, system)))
    else:
        system = generate_system(spec.kernel, spec.n, spec.box_for(spec.n), spec.seed)
        oracle = _oracle(spec, system)
        values = spec.values if spec.axis != "none" else (None,)
        for v in values:
            over = {} if v is None else {spec.axis: v}
            report.records.append(_one(spec, system, build_config(spec, system, **over), oracle))
    _summarise(report)
    return report


def _summarise(report: RunReport):
    recs = report.records
    if not recs:
        return
    best = min(recs, key=lambda r: r["t_total"])
    report.summary = {"n_records": len(recs), "min_time": best["t_total"],
                      "max_rel_error": max(r["rel_error"] for r in recs)}
    if report.spec.axis == "N" and len(recs) >= 2:
        n = np.array([r["n"] for r in recs], dtype=float)
        t = np.array([r["t_total"] for r in recs])
        report.summary["loglog_slope"] = float(np.polyfit(np.log(n), np.log(t), 1)[0])


def sweep_xi(spec: RunSpec, xi_values) -> RunReport:
    """Rerun at each xi with ``xi * rc`` and ``M / xi`` held at their values for ``xi_values[0]``.

    The baseline ``(rc, M)`` comes from ``spec`` (tuned for ``xi_values[0]``
    when ``spec.tol`` is set). ``summary["best_xi"]`` is the fastest.
    """
    xi_values = [float(x) for x in xi_values]
    if not xi_values or any(not x > 0 for x in xi_values):
        raise ParameterError("xi values must be positive")
    spec = replace(spec, axis="xi", values=tuple(xi_values))
    system = generate_system(spec.kernel, spec.n, spec.box_for(spec.n), spec.seed)
    base = build_config(spec, system, xi=xi_values[0])
    oracle = _oracle(spec, system)
    report = RunReport(spec)
    for xi in xi_values:
        scale = xi / xi_values[0]
        cfg = make_config(system.box, xi, base.rc / scale, max(int(round(base.M * scale)), 1),
                          base.P, sf=spec.sf, fast_sizes=spec.fast_sizes,
                          deterministic=spec.deterministic)
        report.records.append(_one(spec, system, cfg, oracle))
    _summarise(report)
    report.summary["best_xi"] = min(report.records, key=lambda r: r["t_total"])["xi"]
    return report
