"""Sequence diagnostics: partial sums, torus discrepancy and related bounds,
and the path-length variation of a frame."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "TorusPointSet",
    "DiscrepancyReport",
    "VariationResult",
    "KoksmaResult",
    "to_torus",
    "partial_sums",
    "error_via_abel",
    "frame_variation",
    "discrepancy",
    "koksma_check",
    "erdos_turan_bound",
    "partial_sum_envelope",
    "EXACT_VARIATION_MAX_N",
]

EXACT_VARIATION_MAX_N = 12
ET_C0 = 1.0
ET_C1 = 3.0


def partial_sums(residuals: Sequence[float]) -> np.ndarray:
    """``u_0 = 0`` and ``u_j = u_{j-1} + y_j`` with Neumaier compensation."""
    y = np.asarray(residuals, dtype=float).ravel()
    out = np.empty(y.size + 1)
    out[0] = 0.0
    s = 0.0
    comp = 0.0
    for i, v in enumerate(y.tolist(), start=1):
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i] = s + comp
    return out


def error_via_abel(frame, x, delta: float) -> float:
    """Reconstruction error through summation by parts::

        (d/N) || sum_{j<N} u_j (e_j - e_{j+1}) + u_N e_N ||
    """
    from .pcm import NonTightFrameError, analyze, quantization_residual

    if not frame.tight:
        raise NonTightFrameError("the d/N reconstruction rule needs a tight frame")
    c = analyze(frame, x)
    u = partial_sums(quantization_residual(c, delta))
    e = frame.vectors
    total = u[1:-1] @ (e[:-1] - e[1:]) + u[-1] * e[-1]
    return float(frame.dim / frame.n * np.linalg.norm(total))


def partial_sum_envelope(n: int, delta: float) -> float:
    """``sqrt(N) log(N) delta + sqrt(N delta) + N delta^(3/2)``."""
    return math.sqrt(n) * math.log(n) * delta + math.sqrt(n * delta) + n * delta ** 1.5


# --------------------------------------------------------------------------
# frame variation sigma(F)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VariationResult:
    sigma: float
    order: tuple[int, ...]
    exact: bool


def _path_length(dist: np.ndarray, order: Sequence[int]) -> float:
    o = np.asarray(order)
    return float(np.sum(dist[o[:-1], o[1:]]))


def _held_karp(dist: np.ndarray) -> tuple[float, list[int]]:
    n = dist.shape[0]
    full = (1 << n) - 1
    dp = np.full((1 << n, n), np.inf)
    parent = np.full((1 << n, n), -1, dtype=np.int64)
    for j in range(n):
        dp[1 << j, j] = 0.0
    bits = 1 << np.arange(n)
    for mask in range(1, full + 1):
        row = dp[mask]
        if not np.isfinite(row).any():
            continue
        # cand[j, k]: extend a path ending at j by the edge j -> k
        cand = row[:, None] + dist
        best_j = np.argmin(cand, axis=0)
        best = cand[best_j, np.arange(n)]
        for k in range(n):
            if mask & bits[k] or not np.isfinite(best[k]):
                continue
            nxt = mask | int(bits[k])
            if best[k] < dp[nxt, k]:
                dp[nxt, k] = best[k]
                parent[nxt, k] = best_j[k]
    end = int(np.argmin(dp[full]))
    length = float(dp[full, end])
    order = [end]
    mask = full
    while parent[mask, order[-1]] >= 0:
        prev = int(parent[mask, order[-1]])
        mask ^= 1 << order[-1]
        order.append(prev)
    return length, order[::-1]


def _nearest_neighbor(dist: np.ndarray, start: int) -> list[int]:
    n = dist.shape[0]
    seen = np.zeros(n, dtype=bool)
    order = [start]
    seen[start] = True
    for _ in range(n - 1):
        d = np.where(seen, np.inf, dist[order[-1]])
        nxt = int(np.argmin(d))
        order.append(nxt)
        seen[nxt] = True
    return order


def _two_opt(dist: np.ndarray, order: list[int], max_passes: int = 50) -> list[int]:
    """2-opt for an open path, including reversals of a prefix or suffix."""
    p = np.array(order)
    n = p.size
    for _ in range(max_passes):
        improved = False
        for i in range(n - 1):
            j = np.arange(i + 1, n)
            left = dist[p[i - 1], p[i]] if i > 0 else 0.0
            right = np.where(j < n - 1, dist[p[j], p[np.minimum(j + 1, n - 1)]], 0.0)
            new_left = dist[p[i - 1], p[j]] if i > 0 else np.zeros(j.size)
            new_right = np.where(j < n - 1, dist[p[i], p[np.minimum(j + 1, n - 1)]], 0.0)
            gain = (left + right) - (new_left + new_right)
            k = int(np.argmax(gain))
            if gain[k] > 1e-12:
                jj = int(j[k])
                p[i : jj + 1] = p[i : jj + 1][::-1]
                improved = True
        if not improved:
            break
    return p.tolist()


def frame_variation(frame, mode: str = "heuristic") -> VariationResult:
    """Shortest Hamiltonian path through the frame vectors.

    ``exact`` runs Held-Karp and is limited to ``N <= 12``; ``heuristic``
    returns an upper bound from nearest-neighbor and insertion-order starts
    polished by 2-opt.
    """
    vecs = frame.vectors if hasattr(frame, "vectors") else np.asarray(frame, dtype=float)
    n = vecs.shape[0]
    dist = np.linalg.norm(vecs[:, None, :] - vecs[None, :, :], axis=-1)
    if n == 1:
        return VariationResult(0.0, (0,), True)
    if mode == "exact":
        if n > EXACT_VARIATION_MAX_N:
            raise ValueError(
                f"exact frame variation is limited to N <= {EXACT_VARIATION_MAX_N}; "
                "use mode='heuristic'"
            )
        length, order = _held_karp(dist)
        return VariationResult(length, tuple(order), True)
    if mode != "heuristic":
        raise ValueError(f"unknown mode {mode!r}")
    best_len, best_order = math.inf, None
    for start in (list(range(n)), _nearest_neighbor(dist, 0)):
        order = _two_opt(dist, start)
        length = _path_length(dist, order)
        if length < best_len:
            best_len, best_order = length, order
    return VariationResult(best_len, tuple(best_order), False)


# --------------------------------------------------------------------------
# discrepancy on the torus
# --------------------------------------------------------------------------


def to_torus(points) -> np.ndarray:
    """Reduce reals modulo 1 into the window ``[-1/2, 1/2)``."""
    p = np.mod(np.asarray(points, dtype=float), 1.0)
    # p - 1 is exact for p in [1/2, 1]
    return np.where(p >= 0.5, p - 1.0, p)


@dataclass(frozen=True, eq=False)
class TorusPointSet:
    points: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", to_torus(np.atleast_1d(self.points)))

    def __len__(self) -> int:
        return self.points.size


def _as_points(points) -> np.ndarray:
    if isinstance(points, TorusPointSet):
        return points.points
    return to_torus(np.atleast_1d(points))


@dataclass(frozen=True)
class DiscrepancyReport:
    disc: float
    argmax_arc: tuple[float, float]
    et_bounds: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "disc": self.disc,
            "arc": {"start": self.argmax_arc[0], "length": self.argmax_arc[1]},
            "et": {str(k): v for k, v in sorted(self.et_bounds.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def discrepancy(points, ks: Iterable[int] = ()) -> DiscrepancyReport:
    """Exact arc discrepancy ``sup_I |#(u in I)/N - |I||`` on the torus.

    After sorting, the supremum is reached (possibly as a limit) on arcs
    whose ends sit at data points: closed arcs maximize the excess count,
    open arcs the deficit.  All ``O(N^2)`` such arcs are scanned.  Ties are
    broken toward the smallest start, then the shortest length.
    """
    p = np.sort(_as_points(points))
    n = p.size
    if n == 0:
        raise ValueError("need at least one point")
    ext = np.concatenate([p, p + 1.0])
    idx = np.arange(n)
    best = -math.inf
    arc = (0.0, 0.0)

    def consider(vals: np.ndarray, lengths: np.ndarray) -> None:
        nonlocal best, arc
        top = float(vals.max())
        if top < best:
            return
        hit = np.flatnonzero(vals == top)
        cands = sorted((float(p[i]), float(lengths[i])) for i in hit)
        if top > best or cands[0] < arc:
            best, arc = top, cands[0]

    for m in range(n):
        lengths = ext[idx + m] - p
        consider((m + 1) / n - lengths, lengths)  # closed arc [p_i, p_{i+m}]
    for m in range(1, n + 1):
        lengths = ext[idx + m] - p
        consider(lengths - (m - 1) / n, lengths)  # open arc (p_i, p_{i+m})

    bounds = {int(k): erdos_turan_bound(p, int(k)) for k in ks}
    return DiscrepancyReport(disc=min(best, 1.0), argmax_arc=arc, et_bounds=bounds)


def erdos_turan_bound(points, k: int) -> float:
    """``1/(K+1) + 3 sum_{k<=K} (1/k) |N^{-1} sum_j exp(2 pi i k u_j)|``."""
    if k < 1:
        raise ValueError("K must be a positive integer")
    u = _as_points(points)
    freqs = np.arange(1, k + 1)
    sums = np.abs(np.exp(2j * np.pi * np.outer(freqs, u)).mean(axis=1))
    return float(ET_C0 / (k + 1) + ET_C1 * np.sum(sums / freqs))


@dataclass(frozen=True)
class KoksmaResult:
    lhs: float
    rhs: float
    holds: bool


def koksma_check(
    points,
    f: Callable[[np.ndarray], np.ndarray],
    var_f: float,
    *,
    integral: float | None = None,
    breakpoints: Sequence[float] = (),
) -> KoksmaResult:
    """Check ``|mean f(u_j) - int f| <= Var(f) Disc(u)``.

    ``integral`` over ``[-1/2, 1/2)`` may be given; otherwise it is computed
    by adaptive quadrature split at ``breakpoints``.
    """
    u = _as_points(points)
    if integral is None:
        pts = [b for b in sorted(breakpoints) if -0.5 < b < 0.5]
        integral, _ = integrate.quad(
            lambda t: float(np.asarray(f(np.array([t])))[0]),
            -0.5,
            0.5,
            points=pts or None,
            limit=max(200, 4 * len(pts)),
            epsabs=1e-13,
        )
    lhs = abs(float(np.mean(f(u))) - integral)
    rhs = var_f * discrepancy(u).disc
    return KoksmaResult(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-12)
