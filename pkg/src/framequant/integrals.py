"""Integrals of the quantization residual against ``cos(theta)``.

The central quantity is::

    I(r, delta) = int_{-pi}^{pi} Delta_delta(r cos t) cos t dt

together with its weighted high-dimensional form on ``[0, pi]`` with the
extra factor ``sin(t)^(d-2)``.  ``Delta_delta(r cos t)`` jumps wherever
``R cos t + 1/2`` is an integer (``R = r/delta``), so every quadrature here
is split at those angles and is exact up to rounding on each piece.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .frames import Frame
from .pcm import quantization_residual, quantize

__all__ = [
    "METHODS_2D",
    "METHODS_HIGHD",
    "RadialSpec",
    "FourierCoefficient",
    "HalfIntegerIdentity",
    "LowerBoundCheck",
    "MAGIC_RATIO",
    "INTEGRAL_BOUND_CONST",
    "AVG_BOUND_CONST",
    "delta_integral_2d",
    "delta_integral_highd",
    "verify_half_integer_identity",
    "lower_bound_check",
    "nonint_coefficient",
    "find_rstar",
    "hr_fourier",
    "hr_fourier_many",
    "avg_error_direct",
    "avg_error_fourier",
    "sphere_limit_error",
    "highd_constant",
    "cos2_weight",
    "sphere_weight",
]

log = logging.getLogger(__name__)

METHODS_2D = ("quadrature", "closed_sum", "breakpoint_sum", "analytic_small")
METHODS_HIGHD = ("quadrature", "breakpoint_sum")

MAGIC_RATIO = math.sqrt(8 - 2 * math.sqrt(16 - math.pi**2)) / math.pi
INTEGRAL_BOUND_CONST = 16 * math.sqrt(2) / (3 * math.pi**2)
AVG_BOUND_CONST = 32 / (3 * math.pi**2.5)

_GL_NODES = 16


@lru_cache(maxsize=None)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class RadialSpec:
    """Signal radius ``r`` and step ``delta``.

    ``eps = R + 1/2 - floor(R + 1/2)`` is snapped to 0 when ``R + 1/2`` is
    an integer up to a few ulps, so ratios like ``0.5/0.2`` count as
    half-integers.
    """

    r: float
    delta: float

    def __post_init__(self) -> None:
        if not (self.r > 0 and self.delta > 0):
            raise ValueError("r and delta must be positive")

    @classmethod
    def from_ratio(cls, ratio: float, delta: float = 1.0) -> "RadialSpec":
        return cls(ratio * delta, delta)

    @property
    def R(self) -> float:
        return self.r / self.delta

    @property
    def _shift(self) -> float:
        return self.R + 0.5

    @property
    def eps_zero(self) -> bool:
        s = self._shift
        return abs(s - round(s)) <= 64 * np.finfo(float).eps * max(1.0, s)

    @property
    def eps(self) -> float:
        if self.eps_zero:
            return 0.0
        s = self._shift
        return s - math.floor(s)

    @property
    def R_eff(self) -> float:
        """``R`` snapped to ``top_level - 1/2`` when ``eps == 0``.

        Within an ulp of a half-integer the top jump is tangent and ``I``
        moves like ``sqrt(R - R_0)``, so the routes agree on the snapped ratio.
        """
        return self.top_level - 0.5 if self.eps_zero else self.R

    @property
    def top_level(self) -> int:
        """``R + 1/2`` as an integer; only meaningful when ``eps == 0``."""
        return int(round(self._shift))


def cos2_weight(d: int) -> float:
    """``int_0^pi cos^2 t sin^(d-2) t dt``."""
    return math.sqrt(math.pi) * math.gamma((d - 1) / 2) / (2 * math.gamma(d / 2 + 1))


def sphere_weight(d: int) -> float:
    """``int_0^pi sin^(d-2) t dt``."""
    return math.sqrt(math.pi) * math.gamma((d - 1) / 2) / math.gamma(d / 2)


def _breakpoints(R: float) -> np.ndarray:
    """Angles in ``(0, pi)`` with ``R cos t + 1/2`` integral, ascending."""
    top = math.ceil(R) + 1
    half = np.arange(-top, top + 1) + 0.5
    c = half / R
    c = c[(c > -1) & (c < 1)]
    return np.sort(np.arccos(c))


def _segments(R: float) -> np.ndarray:
    return np.concatenate([[0.0], _breakpoints(R), [math.pi]])


def _floor_levels(R: float, edges: np.ndarray) -> np.ndarray:
    mid = 0.5 * (edges[:-1] + edges[1:])
    return np.floor(R * np.cos(mid) + 0.5)


def _quad_half(spec: RadialSpec, d: int, nodes: int = _GL_NODES) -> float:
    """``int_0^pi Delta(r cos t) cos t sin^(d-2) t dt`` by piecewise Gauss-Legendre."""
    x, w = _gauss(nodes)
    R = spec.R_eff
    edges = _segments(R)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    c = np.cos(t)
    f = quantization_residual(R * spec.delta * c, spec.delta) * c
    if d > 2:
        f = f * np.sin(t) ** (d - 2)
    return float(np.sum(0.5 * (b - a)[:, 0] * (f @ w)))


def _floor_integral_general(R: float, d: int) -> float:
    """``int_0^pi floor(R cos t + 1/2) cos t sin^(d-2) t dt`` exactly, any ``R``."""
    edges = _segments(R)
    levels = _floor_levels(R, edges)
    s = np.sin(edges) ** (d - 1)
    s[-1] = 0.0
    s[0] = 0.0
    return math.fsum(levels * (s[1:] - s[:-1])) / (d - 1)


def _half_integer_floor_sum(spec: RadialSpec) -> float:
    """``int_0^pi floor(R cos t + 1/2) cos t dt`` for half-integral ``R``."""
    R = spec.R_eff
    j = np.arange(spec.top_level - 1)
    return math.fsum(2 * np.sqrt(R * R - (j + 0.5) ** 2)) / R


def _half_integer_weighted_sum(spec: RadialSpec, d: int) -> float:
    """Half-integral ``R``: ``1/(d-1) sum_{j=-R+3/2}^{R-1/2} (1 - ((j-1/2)/R)^2)^((d-1)/2)``."""
    R = spec.R_eff
    m = spec.top_level
    # j - 1/2 runs over the integers -R+1 .. R-1 shifted by 1/2: i + 1/2 with i in [-m+1, m-2]
    i = np.arange(-m + 1, m - 1) + 0.5
    vals = np.clip(1 - (i / R) ** 2, 0.0, None) ** ((d - 1) / 2)
    return math.fsum(vals) / (d - 1)


def delta_integral_2d(spec: RadialSpec, method: str = "quadrature", *, strict: bool = False) -> float:
    """``I(r, delta)`` over ``[-pi, pi]``.

    ``quadrature``
        piecewise Gauss-Legendre of the residual itself.
    ``closed_sum``
        ``delta (pi R - 2 S)`` with ``S = sum_j 2 sqrt(R^2 - (j+1/2)^2) / R``
        when ``R + 1/2`` is integral; otherwise (unless ``strict``) the
        segment-exact breakpoint sum, which agrees with it on half-integers.
    ``breakpoint_sum``
        the segment-exact floor integral for any ``R``.
    ``analytic_small``
        ``pi r - 4 delta sqrt(1 - delta^2/(4 r^2))``, valid for
        ``r <= delta <= 2r``.
    """
    R, delta = spec.R, spec.delta
    if method == "quadrature":
        return 2.0 * _quad_half(spec, 2)
    if method == "closed_sum":
        if spec.eps_zero:
            return delta * (math.pi * spec.R_eff - 2.0 * _half_integer_floor_sum(spec))
        if strict:
            raise ValueError(f"closed sum needs R + 1/2 integral, got eps={spec.eps:.6g}")
        log.info("closed_sum: eps=%g, using the generalized breakpoint sum", spec.eps)
        method = "breakpoint_sum"
    if method == "breakpoint_sum":
        R = spec.R_eff
        return delta * (math.pi * R - 2.0 * _floor_integral_general(R, 2))
    if method == "analytic_small":
        r = spec.r
        slack = 1e-12 * delta
        if not (r - slack <= delta <= 2 * r + slack):
            raise ValueError(f"analytic_small needs r <= delta <= 2r, got r={r}, delta={delta}")
        return math.pi * r - 4 * delta * math.sqrt(max(0.0, 1 - delta * delta / (4 * r * r)))
    raise ValueError(f"unknown method {method!r}")


def delta_integral_highd(
    spec: RadialSpec, d: int, method: str = "quadrature", *, strict: bool = False
) -> float:
    """``int_0^pi Delta_delta(r cos t) cos t sin^(d-2) t dt``.

    ``breakpoint_sum`` evaluates ``delta (R W_d - F_d)`` where ``W_d`` is
    the weight of ``cos^2 sin^(d-2)`` and ``F_d`` the floor integral, taken
    from the telescoped half-integer sum when ``eps = 0`` and from the
    segment-exact sum otherwise (or an error when ``strict``).
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if method == "quadrature":
        return _quad_half(spec, d)
    if method != "breakpoint_sum":
        raise ValueError(f"unknown method {method!r}")
    if spec.eps_zero:
        floor_part = _half_integer_weighted_sum(spec, d)
    elif strict:
        raise ValueError("breakpoint_sum needs R + 1/2 integral")
    else:
        floor_part = _floor_integral_general(spec.R, d)
    return spec.delta * (spec.R_eff * cos2_weight(d) - floor_part)


def highd_constant(spec: RadialSpec, d: int) -> float:
    """``|integral| r^((d-1)/2) / delta^((d+1)/2)``."""
    val = delta_integral_highd(spec, d, "breakpoint_sum")
    return abs(val) * spec.r ** ((d - 1) / 2) / spec.delta ** ((d + 1) / 2)


# --------------------------------------------------------------------------
# the identity and lower bound at half-integral R
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HalfIntegerIdentity:
    lhs: float
    rhs: float
    residual: float


def verify_half_integer_identity(spec: RadialSpec) -> HalfIntegerIdentity:
    """Compare the floor integral with ``R sum sin(psi_j) + sqrt(1 - 1/(4R^2))/2``.

    ``psi_j = arccos((j+1/2)/R) - arccos((j+3/2)/R)`` for ``j = 0..R-3/2``.
    """
    if not spec.eps_zero:
        raise ValueError("identity holds for R + 1/2 integral only")
    R = spec.R_eff
    if spec.top_level < 2:
        raise ValueError("identity needs R >= 3/2 (the psi-sum is empty at R = 1/2)")
    lhs = _half_integer_floor_sum(spec)
    j = np.arange(spec.top_level - 1)
    psi = np.arccos(np.clip((j + 0.5) / R, -1, 1)) - np.arccos(np.clip((j + 1.5) / R, -1, 1))
    rhs = R * math.fsum(np.sin(psi)) + 0.5 * math.sqrt(1 - 1 / (4 * R * R))
    return HalfIntegerIdentity(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs))


@dataclass(frozen=True)
class LowerBoundCheck:
    integral: float
    bound: float
    holds: bool
    mode: str  # "certified" at eps = 0, otherwise "report"
    eps: float


def lower_bound_check(spec: RadialSpec, method: str = "closed_sum") -> LowerBoundCheck:
    """``I(r, delta) >= (16 sqrt2 / (3 pi^2)) delta^(3/2) / sqrt(r)``.

    The inequality is guaranteed only for ``eps = 0``; other specs are
    evaluated in report mode.
    """
    val = delta_integral_2d(spec, method)
    bound = INTEGRAL_BOUND_CONST * spec.delta**1.5 / math.sqrt(spec.r)
    return LowerBoundCheck(
        integral=val,
        bound=bound,
        holds=val >= bound - 1e-12,
        mode="certified" if spec.eps_zero else "report",
        eps=spec.eps,
    )


def nonint_coefficient(eps: float) -> float:
    """Leading ``1/sqrt(R)`` coefficient of the lower estimate for ``eps != 0``."""
    a = math.sqrt(2 + 2 * eps) - math.sqrt(2 * eps)
    return a**3 / 3 + 2 * math.sqrt(2) / 3 * eps**1.5 - 2 * (1 - eps) * math.sqrt(2 * eps)


# --------------------------------------------------------------------------
# magic ratio
# --------------------------------------------------------------------------


def find_rstar(delta: float, tol: float = 1e-14) -> float:
    """Root ``r`` in ``[delta/2, delta]`` of ``I(r, delta) = 0`` by bisection.

    Uses the closed form valid on that branch.  The branch is not monotone
    (``I`` dips and then rises again), so the bracket is trusted only after
    a sampled scan shows a single sign change.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")

    def f(r: float) -> float:
        return delta_integral_2d(RadialSpec(r, delta), "analytic_small")

    lo, hi = 0.5 * delta, delta
    grid = np.linspace(lo, hi, 513)
    signs = np.sign([f(r) for r in grid])
    if np.count_nonzero(np.diff(signs)) != 1 or signs[0] <= 0 or signs[-1] >= 0:
        raise RuntimeError("no unique sign change on the analytic branch")
    f_lo = f(lo)
    while hi - lo > tol * delta:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = f(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# Fourier coefficients of H_R(t) = Delta_1(R cos t) (cos t, -sin t)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierCoefficient:
    k: int
    value: np.ndarray  # complex, shape (2,)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.value))


def _circle_segments(R: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = _breakpoints(R)
    edges = np.unique(np.concatenate([[0.0, 2 * math.pi], a, 2 * math.pi - a]))
    return edges[:-1], edges[1:], _floor_levels(R, edges)


def hr_fourier_many(R: float, ks, chunk: int = 4096) -> np.ndarray:
    """``int_0^{2pi} H_R(t) e^{-ikt} dt`` for each ``k``, shape ``(len(ks), 2)``.

    On each segment between jumps ``H_R`` is a trigonometric polynomial of
    degree 2, so every coefficient is a finite sum of exact exponential
    integrals.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    a, b, m = _circle_segments(R)
    out = np.empty((ks.size, 2), dtype=complex)
    for s in range(0, ks.size, chunk):
        k = ks[s : s + chunk, None]

        def seg(p: int) -> np.ndarray:
            w = p - k
            safe = np.where(w == 0, 1.0, w)
            val = (np.exp(1j * w * b) - np.exp(1j * w * a)) / (1j * safe)
            return np.where(w == 0, b - a, val)

        e0, e1, em1, e2, em2 = seg(0), seg(1), seg(-1), seg(2), seg(-2)
        c1 = R * (2 * e0 + e2 + em2) / 4 - m * (e1 + em1) / 2
        c2 = -R * (e2 - em2) / 4j + m * (e1 - em1) / 2j
        out[s : s + chunk, 0] = c1.sum(axis=1)
        out[s : s + chunk, 1] = c2.sum(axis=1)
    return out


def _hr_fourier_grid(R: float, k: int, samples: int, nodes: int = 6) -> np.ndarray:
    """Uniform grid of ``samples`` cells, Gauss-Legendre inside each cell and
    cells holding a jump split at the jump.  ``H_R`` is evaluated through the
    quantizer, independently of the closed-form segment levels."""
    x, w = _gauss(nodes)
    grid = np.linspace(0.0, 2 * math.pi, samples + 1)
    jumps = _breakpoints(R)
    jumps = np.concatenate([jumps, 2 * math.pi - jumps])
    edges = np.unique(np.concatenate([grid, jumps]))
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    res = quantization_residual(R * np.cos(t), 1.0)
    phase = np.exp(-1j * k * t)
    h = 0.5 * (b - a)[:, 0]
    c1 = np.sum(h * ((res * np.cos(t) * phase) @ w))
    c2 = np.sum(h * ((-res * np.sin(t) * phase) @ w))
    return np.array([c1, c2])


def hr_fourier(R: float, k: int, samples: int | None = None, method: str = "exact") -> FourierCoefficient:
    """One coefficient ``hat H_R(k)`` (no ``1/2pi`` factor).

    ``exact`` sums closed-form segment integrals; ``grid`` integrates
    numerically on at least ``max(2^14, 64 |k|)`` uniform cells, refined at
    the jumps.
    """
    if method == "exact":
        return FourierCoefficient(int(k), hr_fourier_many(R, [k])[0])
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")
    if samples is None:
        samples = max(1 << 14, 64 * abs(int(k)))
    if samples < 1 << 10 or samples & (samples - 1):
        raise ValueError("samples must be a power of two >= 1024")
    return FourierCoefficient(int(k), _hr_fourier_grid(R, int(k), samples))


# --------------------------------------------------------------------------
# average error over the circle of radius r
# --------------------------------------------------------------------------


def avg_error_direct(frame: Frame, spec: RadialSpec, nodes: int = 8, chunk: int = 2048) -> float:
    """``(int_0^{2pi} E_delta(x_psi, F)^2 dpsi)^(1/2)`` with ``x_psi = r (cos psi, sin psi)``.

    ``E(x_psi)^2`` is smooth between the angles where some coefficient
    ``r cos(theta_j - psi)`` crosses an alphabet midpoint, so the circle is
    cut at all of them and each piece gets ``nodes``-point Gauss-Legendre.
    """
    if frame.dim != 2:
        raise ValueError("average error is defined for frames of R^2")
    if not frame.tight:
        raise ValueError("average error uses the tight d/N reconstruction")
    x, w = _gauss(nodes)
    theta = frame.angles()
    offs = _breakpoints(spec.R)
    offs = np.concatenate([offs, -offs])
    cuts = np.mod((theta[:, None] + offs[None, :]).ravel(), 2 * math.pi)
    edges = np.unique(np.concatenate([[0.0, 2 * math.pi], cuts]))
    vecs = frame.vectors
    scale = frame.dim / frame.n
    total = 0.0
    for s in range(0, edges.size - 1, chunk):
        a = edges[s : s + chunk + 1][:-1, None]
        b = edges[s : s + chunk + 1][1:, None]
        psi = (0.5 * (a + b) + 0.5 * (b - a) * x[None, :]).ravel()
        xs = spec.r * np.stack([np.cos(psi), np.sin(psi)], axis=1)
        q = quantize(xs @ vecs.T, spec.delta)
        diff = xs - scale * (q @ vecs)
        e2 = np.sum(diff * diff, axis=1).reshape(-1, nodes)
        total += float(np.sum(0.5 * (b - a)[:, 0] * (e2 @ w)))
    return math.sqrt(total)


def avg_error_fourier(n: int, spec: RadialSpec, kmax: int = 20_000, extrapolate: bool = True) -> float:
    """Average error of the harmonic frame with ``N`` vectors via Parseval::

        sqrt(2) delta / sqrt(pi) * (sum_{|l| <= kmax} ||hat H_R(l N)||^2)^(1/2)

    Truncation leaves a tail of order ``1/kmax``; with ``extrapolate`` the
    sums at ``kmax/2`` and ``kmax`` are combined to cancel it.
    """
    if n < 1:
        raise ValueError("N must be positive")
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    ls = np.arange(0, kmax + 1)
    coef = hr_fourier_many(spec.R, ls * n)
    sq = np.sum(np.abs(coef) ** 2, axis=1)
    # |hat H(-k)| = |hat H(k)| since H_R is real
    weights = np.where(ls == 0, 1.0, 2.0)
    terms = weights * sq
    full = math.fsum(terms)
    if extrapolate and kmax >= 16:
        half = math.fsum(terms[: kmax // 2 + 1])
        full = full + (full - half) * (kmax // 2) / (kmax - kmax // 2)
    return math.sqrt(2.0) * spec.delta / math.sqrt(math.pi) * math.sqrt(max(full, 0.0))


# --------------------------------------------------------------------------
# limit of E over asymptotically equidistributed frames
# --------------------------------------------------------------------------


def sphere_limit_error(x, delta: float, method: str = "breakpoint_sum") -> float:
    """``d || int_{S^{d-1}} Delta_delta(<x, z>) z dnu(z) ||`` for normalized ``nu``.

    Only the component along ``x`` survives, leaving
    ``d |int_0^pi Delta(|x| cos t) cos t sin^(d-2) t dt| / int_0^pi sin^(d-2) t dt``.
    """
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    r = float(np.linalg.norm(x))
    if r == 0:
        raise ValueError("x must be non-zero")
    if d < 2:
        raise ValueError("x must have dimension >= 2")
    val = delta_integral_highd(RadialSpec(r, delta), d, method)
    return d * abs(val) / sphere_weight(d)
