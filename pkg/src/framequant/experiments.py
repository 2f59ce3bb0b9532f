"""Scenario runners: parameter sweeps with log-log exponent fits."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import frames, integrals, pcm, seqtools
from .reports import csv_text, dumps_json

__all__ = [
    "LogLogFit",
    "SweepResult",
    "fit_loglog",
    "snap_eps_zero",
    "harmonic_plateau_sweep",
    "path_error_scaling",
    "circle_average_checks",
    "offset_coefficient_sweep",
    "sphere_limit_scaling",
    "funtf_limit_crosscheck",
    "partial_sum_envelope_ratios",
]

PLATEAU_X = (math.pi, math.e)
PLATEAU_DELTA = 1 / 16


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    residual_rms: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual_rms": self.residual_rms}


def fit_loglog(rows: Iterable[Sequence[float]]) -> LogLogFit:
    """Least squares line through ``(log param, log value)`` for positive rows."""
    pts = [(float(p), float(v)) for p, v in rows if p > 0 and v > 0]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 positive rows for a log-log fit, got {len(pts)}")
    lx = np.log([p for p, _ in pts])
    ly = np.log([v for _, v in pts])
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return LogLogFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


@dataclass
class SweepResult:
    rows: list[tuple[float, float]]
    fit: LogLogFit | None = None
    metadata: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.rows = sorted((float(p), float(v)) for p, v in self.rows)

    @property
    def verdicts(self) -> dict[str, bool]:
        return self.extras.get("verdicts", {})

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "rows": [list(r) for r in self.rows],
            "fit": self.fit.to_dict() if self.fit else None,
            "metadata": self.metadata,
            "extras": self.extras,
        }

    def to_csv(self) -> str:
        return csv_text(("param", "value"), self.rows)

    def to_json(self) -> str:
        return dumps_json(self.to_dict())


def _pmap(fn: Callable, items: Sequence, threads: int = 1) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def snap_eps_zero(r: float, delta: float) -> float:
    """Nearest step ``delta'`` to ``delta`` with ``r/delta' + 1/2`` integral."""
    m = max(1, round(r / delta + 0.5))
    return r / (m - 0.5)


# --------------------------------------------------------------------------
# error of harmonic frames against N
# --------------------------------------------------------------------------


def harmonic_plateau_sweep(
    x0: Sequence[float] = PLATEAU_X,
    delta: float = PLATEAU_DELTA,
    n_values: Sequence[int] = range(10, 2001),
    threads: int = 1,
) -> SweepResult:
    """Error of the harmonic frame expansion of ``x0`` against the frame size.

    The plateau is summarized over the top quartile of ``N``; it "settles"
    when the coefficient of variation there is below 0.2, and is compared
    with the equidistributed limit from :func:`integrals.sphere_limit_error`.
    """
    n_values = sorted(int(n) for n in n_values)
    if len(n_values) < 3:
        raise ValueError("need at least 3 frame sizes")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (2,):
        raise ValueError("x0 must lie in R^2")
    errs = _pmap(lambda n: pcm.error(frames.harmonic_frame(2, n), x0, delta), n_values, threads)
    rows = list(zip(n_values, errs))
    ns = np.array(n_values, dtype=float)
    e = np.array(errs)
    top = e[ns >= np.quantile(ns, 0.75)]
    head = e[: max(1, len(e) // 20)]
    mean = float(top.mean())
    cv = float(top.std() / mean) if mean > 0 else math.inf
    limit = integrals.sphere_limit_error(x0, delta)
    rel = abs(mean - limit) / limit
    return SweepResult(
        rows,
        None,
        metadata={
            "scenario": "harmonic_plateau",
            "param_name": "N",
            "value_name": "E_delta(x0, harmonic N)",
            "config": {"x0": x0.tolist(), "delta": delta, "n_min": n_values[0], "n_max": n_values[-1],
                       "count": len(n_values)},
        },
        extras={
            "plateau_mean": mean,
            "plateau_cv": cv,
            "sphere_limit": limit,
            "plateau_rel_dev": rel,
            "head_mean": float(head.mean()),
            "verdicts": {
                "decreases_initially": bool(head.mean() > 2 * mean),
                "plateau_positive": mean > 0,
                "plateau_settles": cv < 0.2,
                "plateau_matches_limit": rel < 0.05,
            },
        },
    )


# --------------------------------------------------------------------------
# upper bound exponents for uniform frame paths
# --------------------------------------------------------------------------


def path_error_scaling(
    x: Sequence[float],
    path: frames.FramePath,
    deltas: Sequence[float],
    regime: str = "large_N",
    c: float | None = None,
    snap_eps: bool = True,
    small_c_values: Sequence[float] = (1 / 64, 1 / 16, 1 / 4, 1.0),
    threads: int = 1,
) -> SweepResult:
    """Error of frame-path samples as ``delta`` shrinks.

    ``large_N`` samples ``N = ceil(c/delta^2)`` points (``c >= 4``, default
    4) and fits the exponent of ``E`` in ``delta``.  ``small_N`` uses
    ``c <= 1`` and reports ``E / sqrt(delta/N)`` over a grid of ``c`` values.
    With ``snap_eps`` each ``delta`` moves to the nearest step making
    ``|x|/delta + 1/2`` integral, which removes the oscillating factor in
    ``eps`` from the fit.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if x.shape != (path.dim,):
        raise ValueError("x dimension does not match the path")
    ds = [snap_eps_zero(r, dl) if snap_eps else float(dl) for dl in deltas]

    def size(cc: float, dl: float) -> int:
        return max(path.dim + 1, math.ceil(cc / dl**2))

    if regime == "large_N":
        c = 4.0 if c is None else c
        if c < 4:
            raise ValueError("large_N regime needs c >= 4")
        ns = [size(c, dl) for dl in ds]
        errs = _pmap(lambda job: pcm.error(frames.frame_path_sample(path, job[1]), x, job[0]),
                     list(zip(ds, ns)), threads)
        rows = list(zip(ds, errs))
        fit = fit_loglog(rows)
        limits = [integrals.sphere_limit_error(x, dl) for dl in ds] if path.dim >= 2 else []
        extras = {
            "N": ns,
            "sphere_limits": limits,
            "verdicts": {"slope_in_window": 1.35 <= fit.slope <= 1.65},
        }
    elif regime == "small_N":
        c = 1.0 if c is None else c
        if c > 1:
            raise ValueError("small_N regime needs c <= 1")
        cs = sorted(set(float(v) for v in small_c_values) | {float(c)})
        jobs = [(dl, cc, size(cc, dl)) for dl in ds for cc in cs]
        errs = _pmap(lambda job: pcm.error(frames.frame_path_sample(path, job[2]), x, job[0]), jobs, threads)
        ratios = [e / math.sqrt(dl / n) for (dl, _, n), e in zip(jobs, errs)]
        rows = [(dl, e) for (dl, cc, _), e in zip(jobs, errs) if cc == c]
        fit = fit_loglog(rows) if len(rows) >= 3 else None
        per_delta = [max(rt for (dl2, _, _), rt in zip(jobs, ratios) if dl2 == dl) for dl in ds]
        half = len(per_delta) // 2
        # "bounded": the finer half of the grid does not exceed the coarser half by more than 2x
        coarse, fine = max(per_delta[: max(half, 1)]), max(per_delta[half:])
        extras = {
            "grid": [{"delta": dl, "c": cc, "N": n, "error": e, "ratio": rt}
                     for (dl, cc, n), e, rt in zip(jobs, errs, ratios)],
            "envelope_ratio": max(ratios),
            "envelope_by_delta": per_delta,
            "verdicts": {"envelope_bounded": fine <= 2 * coarse},
        }
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return SweepResult(
        rows,
        fit,
        metadata={
            "scenario": f"path_scaling_{regime}",
            "param_name": "delta",
            "value_name": "E_delta(x, F_N)",
            "config": {"x": x.tolist(), "path": path.kind, "dim": path.dim, "deltas": list(map(float, deltas)),
                       "snapped_deltas": ds, "regime": regime, "c": c, "snap_eps": snap_eps},
        },
        extras=extras,
    )


# --------------------------------------------------------------------------
# average error over circles in R^2
# --------------------------------------------------------------------------


def circle_average_checks(
    deltas: Sequence[float],
    r_policy: str = "eps_zero",
    n: int = 512,
    m_values: Sequence[int] = range(1, 21),
    n_values: Sequence[int] = tuple(2**k for k in range(4, 12)),
    threads: int = 1,
) -> SweepResult:
    """``eps_zero``: average error of the harmonic frame at ``r = delta (m - 1/2)``
    against ``32/(3 pi^(5/2)) delta^(3/2)/sqrt(r)``.  ``magic_ratio``: decay
    of the average error in ``N`` at ``r = r*(delta)``."""
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("need at least one delta")
    if r_policy == "eps_zero":
        frame = frames.harmonic_frame(2, n)
        jobs = [(dl, dl * (m - 0.5)) for dl in deltas for m in m_values]
        vals = _pmap(lambda job: integrals.avg_error_direct(frame, integrals.RadialSpec(job[1], job[0])),
                     jobs, threads)
        bounds = [integrals.AVG_BOUND_CONST * dl**1.5 / math.sqrt(r) for dl, r in jobs]
        violations = [dict(delta=dl, r=r, value=v, bound=b)
                      for (dl, r), v, b in zip(jobs, vals, bounds) if v < b]
        rows = [(r, v) for (_, r), v in zip(jobs, vals)]
        fit = None
        extras = {
            "points": [{"delta": dl, "r": r, "avg_error": v, "bound": b}
                       for (dl, r), v, b in zip(jobs, vals, bounds)],
            "violations": violations,
            "verdicts": {"bound_holds_everywhere": not violations},
        }
        value_name, param_name = "avg error", "r"
    elif r_policy == "magic_ratio":
        n_values = sorted(int(v) for v in n_values)
        slopes = []
        rows = []
        for i, dl in enumerate(deltas):
            spec = integrals.RadialSpec(integrals.find_rstar(dl), dl)
            vals = _pmap(lambda nn: integrals.avg_error_direct(frames.harmonic_frame(2, nn), spec), n_values, threads)
            these = list(zip(n_values, vals))
            slopes.append(fit_loglog(these).slope)
            if i == 0:
                rows = these
        fit = fit_loglog(rows)
        extras = {
            "slopes": slopes,
            "verdicts": {"rate_one_over_N": all(-1.15 <= s <= -0.85 for s in slopes)},
        }
        value_name, param_name = "avg error at r*", "N"
    else:
        raise ValueError(f"unknown r_policy {r_policy!r}")
    return SweepResult(
        rows,
        fit,
        metadata={
            "scenario": f"circle_average_{r_policy}",
            "param_name": param_name,
            "value_name": value_name,
            "config": {"deltas": deltas, "r_policy": r_policy, "N": n, "m_values": list(m_values),
                       "n_values": list(n_values)},
        },
        extras=extras,
    )


def offset_coefficient_sweep(eps_values: Sequence[float] = tuple(np.linspace(0, 0.5, 11)), R_base: float = 200.5) -> SweepResult:
    """Exploratory: the ``eps != 0`` leading coefficient (a lower estimate)
    next to the measured ``I sqrt(R) / delta`` at ``R = R_base + eps``.
    There is no pass/fail gate since no threshold on ``R`` is known."""
    rows = []
    measured = []
    for e in eps_values:
        rows.append((float(e), integrals.nonint_coefficient(float(e))))
        spec = integrals.RadialSpec.from_ratio(R_base + float(e))
        measured.append(integrals.delta_integral_2d(spec, "breakpoint_sum") * math.sqrt(spec.R))
    return SweepResult(
        rows,
        None,
        metadata={"scenario": "offset_coefficient_sweep", "param_name": "eps", "value_name": "leading coefficient",
                  "config": {"eps_values": list(map(float, eps_values)), "R_base": R_base}},
        extras={
            "measured_normalized_integral": measured,
            "margin_over_coefficient": [m - v for m, (_, v) in zip(measured, rows)],
            "verdicts": {},
        },
    )


# --------------------------------------------------------------------------
# high-dimensional limits
# --------------------------------------------------------------------------


def sphere_limit_scaling(
    d: int,
    x_direction: Sequence[float] | None = None,
    deltas: Sequence[float] = tuple(1 / (m - 0.5) for m in (4, 6, 8, 12, 16, 24, 32, 48, 64)),
    r: float = 1.0,
    snap_eps: bool = True,
) -> SweepResult:
    """Limit error ``d || int Delta(<x,z>) z dnu ||`` against ``delta`` for
    ``x = r * x_direction``; the fitted exponent should be ``(d+1)/2``."""
    if not 2 <= d <= 5:
        raise ValueError("d must lie in 2..5")
    u = np.ones(d) if x_direction is None else np.asarray(x_direction, dtype=float)
    if u.shape != (d,):
        raise ValueError("x_direction must have d coordinates")
    x = r * u / np.linalg.norm(u)
    ds = [snap_eps_zero(r, dl) if snap_eps else float(dl) for dl in deltas]
    rows = [(dl, integrals.sphere_limit_error(x, dl)) for dl in ds]
    fit = fit_loglog(rows)
    target = (d + 1) / 2
    return SweepResult(
        rows,
        fit,
        metadata={
            "scenario": f"sphere_limit_d{d}",
            "param_name": "delta",
            "value_name": "limit error",
            "config": {"d": d, "x": x.tolist(), "r": r, "deltas": list(map(float, deltas)), "snapped_deltas": ds},
        },
        extras={
            "target_slope": target,
            "verdicts": {"slope_in_window": abs(fit.slope - target) <= 0.2},
        },
    )


def funtf_limit_crosscheck(
    n: int = 4096,
    seed: int = 0,
    x: Sequence[float] = tuple(np.array([1.0, 2.0, 3.0]) / math.sqrt(14.0)),
    delta: float = 0.4,
) -> dict:
    """PCM error of an equidistributed FUNTF of ``R^3`` against the sphere limit."""
    x = np.asarray(x, dtype=float)
    frame = frames.funtf_equidistributed(x.size, n, seed)
    err = pcm.error(frame, x, delta)
    limit = integrals.sphere_limit_error(x, delta)
    rel = abs(err - limit) / limit
    return {
        "N": n,
        "seed": seed,
        "delta": delta,
        "x": x.tolist(),
        "frame_residual": frame.report.residual,
        "frame_error": err,
        "sphere_limit": limit,
        "rel_dev": rel,
        "passed": bool(frame.tight and rel <= 0.10),
    }


# --------------------------------------------------------------------------
# partial sums along a frame path
# --------------------------------------------------------------------------


def partial_sum_envelope_ratios(
    x: Sequence[float],
    path: frames.FramePath,
    n_values: Sequence[int],
    deltas: Sequence[float],
) -> list[dict]:
    """``max_j |u_j|`` over the envelope ``sqrt(N) log N delta + sqrt(N delta) + N delta^(3/2)``."""
    x = np.asarray(x, dtype=float)
    out = []
    for n in n_values:
        frame = frames.frame_path_sample(path, int(n))
        c = pcm.analyze(frame, x)
        for dl in deltas:
            u = seqtools.partial_sums(pcm.quantization_residual(c, dl))
            peak = float(np.max(np.abs(u)))
            env = seqtools.partial_sum_envelope(int(n), dl)
            out.append({"N": int(n), "delta": float(dl), "max_u": peak, "envelope": env, "ratio": peak / env})
    return out
