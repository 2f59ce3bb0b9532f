"""Finite unit-norm tight frames of R^d.

A frame is stored as an ``(N, d)`` array whose rows are the frame vectors
``e_1, ..., e_N`` in insertion order.  The synthesis matrix ``F`` of the
usual notation is the transpose of that array, so ``F F^T = V^T V``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_TIGHT_TOL",
    "Frame",
    "FramePath",
    "DualFrame",
    "TightnessReport",
    "SingularFrameError",
    "Probe",
    "harmonic_frame",
    "frame_path_sample",
    "verify_tight",
    "canonical_dual",
    "frame_potential",
    "funtf_equidistributed",
    "equidistribution_metric",
    "monomial_probes",
    "sphere_moment",
]

DEFAULT_TIGHT_TOL = 1e-10
_NORM_TOL = 1e-12
_FORMAT_TAG = "framequant-frame v1"


class SingularFrameError(ValueError):
    """The frame operator ``S = F F^T`` is not invertible."""


@dataclass(frozen=True)
class TightnessReport:
    residual: float
    lambda_estimate: float
    passed: bool
    tol: float


def _rounding_floor(n: int) -> float:
    # Gram entries are sums of n products; their rounding error grows like n*eps.
    return 64.0 * float(np.finfo(float).eps) * n


@dataclass(frozen=True, eq=False)
class Frame:
    """An ordered set of ``N`` unit vectors in ``R^d``.

    Tightness is certified at construction: ``tight`` is true when every
    vector has unit norm and ``max |F F^T - (N/d) I| <= tight_tol`` (the
    tolerance is never allowed below the rounding floor of an ``N``-term
    Gram sum).  Rank deficient inputs are accepted and simply certified
    non-tight; :attr:`rank` reports the frame property.
    """

    vectors: np.ndarray
    tight_tol: float = DEFAULT_TIGHT_TOL
    report: TightnessReport = field(init=False, repr=False)

    def __post_init__(self) -> None:
        vecs = np.array(self.vectors, dtype=float, copy=True)
        if vecs.ndim != 2 or vecs.shape[0] == 0 or vecs.shape[1] == 0:
            raise ValueError("frame vectors must form a non-empty (N, d) array")
        if not np.all(np.isfinite(vecs)):
            raise ValueError("frame vectors must be finite")
        norms = np.linalg.norm(vecs, axis=1)
        if np.max(np.abs(norms - 1.0)) > max(self.tight_tol, _NORM_TOL):
            raise ValueError("frame vectors must have unit norm")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        tol = max(self.tight_tol, _rounding_floor(vecs.shape[0]))
        object.__setattr__(self, "report", verify_tight(self, tol))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def tight(self) -> bool:
        return self.report.passed

    @property
    def frame_bound(self) -> float:
        """The tight frame constant ``N/d``."""
        return self.n / self.dim

    @property
    def frame_operator(self) -> np.ndarray:
        return self.vectors.T @ self.vectors

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.vectors))

    @property
    def is_frame(self) -> bool:
        return self.n >= self.dim and self.rank == self.dim

    def angles(self) -> np.ndarray:
        """Polar angles of the vectors in ``[0, 2pi)``; only for ``d = 2``."""
        if self.dim != 2:
            raise ValueError("angles are defined for frames of R^2 only")
        return np.mod(np.arctan2(self.vectors[:, 1], self.vectors[:, 0]), 2 * np.pi)

    # serialization -------------------------------------------------------

    def to_text(self) -> str:
        head = (
            f"{_FORMAT_TAG} d={self.dim} N={self.n} "
            f"tight={'true' if self.tight else 'false'} tol={self.tight_tol!r}"
        )
        lines = [head]
        for row in self.vectors:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Frame":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith(_FORMAT_TAG):
            raise ValueError("missing framequant-frame v1 header")
        fields = dict(tok.split("=", 1) for tok in lines[0][len(_FORMAT_TAG):].split())
        try:
            d, n = int(fields["d"]), int(fields["N"])
            tight = {"true": True, "false": False}[fields["tight"]]
            tol = float(fields["tol"])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"malformed frame header: {lines[0]!r}") from exc
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
        if len(rows) != n or any(len(r) != d for r in rows):
            raise ValueError(f"expected {n} rows of {d} coordinates")
        frame = cls(np.array(rows), tight_tol=tol)
        if frame.tight != tight:
            raise ValueError("stored tightness flag does not match the vectors")
        return frame


def verify_tight(frame: Frame, tol: float = DEFAULT_TIGHT_TOL) -> TightnessReport:
    """Compare ``F F^T`` against ``(N/d) I`` in the max norm."""
    vecs = frame.vectors
    n, d = vecs.shape
    gram = vecs.T @ vecs
    residual = float(np.max(np.abs(gram - (n / d) * np.eye(d))))
    return TightnessReport(
        residual=residual,
        lambda_estimate=float(np.trace(gram) / d),
        passed=bool(residual <= tol),
        tol=float(tol),
    )


# --------------------------------------------------------------------------
# harmonic frames and frame paths
# --------------------------------------------------------------------------


def _check_dims(d: int, n: int) -> None:
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got d={d}")
    if n < d:
        raise ValueError(f"a frame of R^{d} needs N >= d vectors, got N={n}")


def harmonic_frame(d: int, n: int, tight_tol: float = DEFAULT_TIGHT_TOL) -> Frame:
    """Harmonic frame ``H_N^d`` with vectors indexed ``j = 0, ..., N-1``.

    Even ``d`` stacks ``(cos, sin)`` pairs at frequencies ``1..d/2``; odd
    ``d`` prepends the constant ``1/sqrt(d)``.  For even ``d`` with
    ``N = d`` the samples are degenerate and the result is certified
    non-tight.
    """
    _check_dims(d, n)
    half = d // 2
    j = np.arange(n)[:, None]
    k = np.arange(1, half + 1)[None, :]
    ang = 2 * np.pi * k * j / n
    cols = np.empty((n, 2 * half))
    cols[:, 0::2] = np.cos(ang)
    cols[:, 1::2] = np.sin(ang)
    scale = math.sqrt(2.0 / d)
    if d % 2:
        vecs = np.hstack([np.full((n, 1), 1.0 / math.sqrt(d)), scale * cols])
    else:
        vecs = scale * cols
    return Frame(vecs, tight_tol=tight_tol)


def _harmonic_evaluator(d: int) -> Callable[[np.ndarray], np.ndarray]:
    half = d // 2
    scale = math.sqrt(2.0 / d)
    freqs = np.arange(1, half + 1)

    def evaluate(u: np.ndarray) -> np.ndarray:
        t = 2 * np.pi * np.asarray(u, dtype=float)[:, None]
        cols = np.empty((t.shape[0], 2 * half))
        cols[:, 0::2] = np.cos(freqs * t)
        cols[:, 1::2] = np.sin(freqs * t)
        if d % 2:
            return np.hstack([np.full((t.shape[0], 1), 1.0 / math.sqrt(d)), scale * cols])
        return scale * cols

    return evaluate


@dataclass(frozen=True)
class FramePath:
    """A curve ``u -> f(u)`` of unit vectors on ``[0, 1)``.

    ``evaluator`` takes a 1-D array of parameters and returns an array of
    shape ``(len(u), dim)``.
    """

    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom-table"

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.asarray(self.evaluator(u), dtype=float)
        if out.shape != (u.shape[0], self.dim):
            raise ValueError(f"evaluator returned shape {out.shape}, expected {(u.shape[0], self.dim)}")
        return out

    @classmethod
    def harmonic(cls, d: int) -> "FramePath":
        """The harmonic path ``f(u) = h(2 pi u)``, sampling to ``H_N^d``."""
        if d < 2:
            raise ValueError("dimension must be at least 2")
        return cls(d, _harmonic_evaluator(d), kind="harmonic")

    @classmethod
    def from_table(cls, table: Sequence[Sequence[float]]) -> "FramePath":
        """Periodic piecewise-linear path through ``table`` rows, renormalized.

        Row ``i`` of an ``M``-row table sits at ``u = i/M``.
        """
        tab = np.asarray(table, dtype=float)
        if tab.ndim != 2:
            raise ValueError("table must be 2-D")
        tab = tab / np.linalg.norm(tab, axis=1, keepdims=True)
        m = tab.shape[0]

        def evaluate(u: np.ndarray) -> np.ndarray:
            s = np.mod(u, 1.0) * m
            i0 = np.floor(s).astype(int) % m
            w = (s - np.floor(s))[:, None]
            pts = (1 - w) * tab[i0] + w * tab[(i0 + 1) % m]
            return pts / np.linalg.norm(pts, axis=1, keepdims=True)

        return cls(tab.shape[1], evaluate, kind="custom-table")

    def unit_norm_defect(self, samples: int = 4097) -> float:
        u = np.linspace(0.0, 1.0, samples, endpoint=False)
        return float(np.max(np.abs(np.linalg.norm(self(u), axis=1) - 1.0)))

    def seam_gap(self) -> float:
        """``|f(0) - f(1^-)|`` estimated at ``u = 1 - 1e-9``."""
        a, b = self([0.0, 1.0 - 1e-9])
        return float(np.linalg.norm(a - b))


def frame_path_sample(path: FramePath, n: int, tight_tol: float = DEFAULT_TIGHT_TOL) -> Frame:
    """Sample ``e_j = f((j-1)/N)``, ``j = 1..N``; tightness is certified, not assumed."""
    if n < path.dim:
        raise ValueError(f"need N >= {path.dim} samples, got {n}")
    return Frame(path(np.arange(n) / n), tight_tol=tight_tol)


# --------------------------------------------------------------------------
# duals
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DualFrame:
    base: Frame
    dual_vectors: np.ndarray

    def reconstruct(self, x) -> np.ndarray:
        """``sum_j <x, e_j> S^{-1} e_j``."""
        coeffs = self.base.vectors @ np.asarray(x, dtype=float)
        return coeffs @ self.dual_vectors

    def synthesize(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self.dual_vectors


def canonical_dual(frame: Frame) -> DualFrame:
    s = frame.frame_operator
    if np.linalg.matrix_rank(s) < frame.dim or np.linalg.cond(s) > 1e12:
        raise SingularFrameError("frame operator is singular; vectors do not span R^d")
    dual = np.linalg.solve(s, frame.vectors.T).T
    dual.setflags(write=False)
    return DualFrame(frame, dual)


# --------------------------------------------------------------------------
# equidistributed FUNTFs via frame potential descent
# --------------------------------------------------------------------------


def frame_potential(vectors) -> float:
    """``sum_{i != j} <e_i, e_j>^2``; zero only for orthonormal sets."""
    v = vectors.vectors if isinstance(vectors, Frame) else np.asarray(vectors, dtype=float)
    g = v.T @ v
    return float(np.sum(g * g) - np.sum(np.sum(v * v, axis=1) ** 2))


def _random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _initial_points(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if d == 2:
        # golden-angle sequence on the circle
        theta = 2 * np.pi * np.arange(n) * (2 - (1 + math.sqrt(5)) / 2)
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    elif d == 3:
        # spherical Fibonacci lattice
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        phi = np.pi * (1 + math.sqrt(5)) * i
        s = np.sqrt(1 - z * z)
        pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    else:
        pts = rng.standard_normal((n, d))
    if d <= 3:
        # lattices can sit in an invariant subspace of the descent (e.g. coplanar for small N)
        pts = pts + 1e-3 * rng.standard_normal((n, d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts @ _random_rotation(d, rng).T


def _tight_residual(v: np.ndarray) -> float:
    n, d = v.shape
    return float(np.max(np.abs(v.T @ v - (n / d) * np.eye(d))))


def funtf_equidistributed(
    d: int,
    n: int,
    seed: int,
    tol: float = 1e-8,
    max_iter: int = 100_000,
) -> Frame:
    """Unit-norm tight frame near-uniformly spread over ``S^{d-1}``.

    Starts from a low-discrepancy point set (golden-angle circle for
    ``d = 2``, spherical Fibonacci lattice for ``d = 3``, Gaussian samples
    otherwise) under a seeded random rotation, then runs projected
    gradient descent on the frame potential with backtracking and row
    renormalization until the tightness residual is at most ``tol``.  If
    the iteration cap is hit, the best iterate is returned and carries a
    non-tight certification.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    if n < d:
        raise ValueError(f"need N >= d, got N={n}, d={d}")
    rng = np.random.default_rng(seed)
    v = _initial_points(d, n, rng)
    step0 = d / (8.0 * n)

    eye = (n / d) * np.eye(d)

    def excess(m: np.ndarray) -> float:
        # frame potential minus its floor N^2/d; the raw potential cannot resolve small residuals
        return float(np.sum((m.T @ m - eye) ** 2))

    pot = excess(v)
    best, best_res = v, _tight_residual(v)
    for _ in range(max_iter):
        if best_res <= tol:
            break
        grad = 4.0 * v @ (v.T @ v)
        grad -= np.sum(grad * v, axis=1, keepdims=True) * v
        g2 = float(np.sum(grad * grad))
        step = step0
        while True:
            w = v - step * grad
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            pot_w = excess(w)
            if pot_w <= pot - 1e-4 * step * g2 or step < 1e-12 * step0:
                break
            step *= 0.5
        v, pot = w, pot_w
        res = _tight_residual(v)
        if res < best_res:
            best, best_res = v, res
    best = best / np.linalg.norm(best, axis=1, keepdims=True)
    return Frame(best, tight_tol=tol)


# --------------------------------------------------------------------------
# equidistribution probes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Probe:
    """A test function on the sphere together with its normalized integral."""

    func: Callable[[np.ndarray], np.ndarray]
    integral: float
    name: str = ""


def sphere_moment(alpha: Sequence[int]) -> float:
    """``E[prod z_i^alpha_i]`` for ``z`` uniform on ``S^{d-1}``."""
    alpha = list(alpha)
    if any(a % 2 for a in alpha):
        return 0.0
    d = len(alpha)
    total = sum(alpha)
    log_val = math.lgamma(d / 2) - math.lgamma(d / 2 + total / 2)
    log_val += sum(math.lgamma((a + 1) / 2) - math.lgamma(0.5) for a in alpha)
    return math.exp(log_val)


def monomial_probes(d: int, max_degree: int) -> list[Probe]:
    """All monomials ``z^alpha`` with ``1 <= |alpha| <= max_degree``."""
    probes = []
    for alpha in itertools.product(range(max_degree + 1), repeat=d):
        deg = sum(alpha)
        if not 1 <= deg <= max_degree:
            continue
        powers = np.array(alpha)
        probes.append(
            Probe(
                func=lambda z, p=powers: np.prod(z ** p, axis=1),
                integral=sphere_moment(alpha),
                name="z^" + "".join(map(str, alpha)),
            )
        )
    return probes


def equidistribution_metric(frame: Frame, probes: Iterable[Probe]) -> float:
    """Worst ``|mean_j f(e_j) - integral of f|`` over the probes."""
    worst = 0.0
    for probe in probes:
        mean = float(np.mean(probe.func(frame.vectors)))
        worst = max(worst, abs(mean - probe.integral))
    return worst
