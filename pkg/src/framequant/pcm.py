"""PCM quantization of frame coefficients on the alphabet ``delta * Z``."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .frames import Frame
from .seqtools import frame_variation, partial_sums

__all__ = [
    "NonTightFrameError",
    "Quantizer",
    "QuantizedExpansion",
    "ErrorReport",
    "WNHResult",
    "quantize",
    "quantize_value",
    "quantization_residual",
    "analyze",
    "reconstruct_quantized",
    "error",
    "mse_wnh",
    "wnh_simulate",
]


class NonTightFrameError(ValueError):
    """The ``d/N`` reconstruction rule needs a certified tight frame."""


def _levels(t, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """``s = t/delta`` and the level ``m = floor(s + 1/2)``, ties up.

    ``s + 1/2`` can round across an integer; the fix-up compares the
    exact difference ``s - m`` (Sterbenz) against one half.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    s = np.asarray(t, dtype=float) / delta
    m = np.floor(s + 0.5)
    m = np.where(s - m >= 0.5, m + 1, m)
    m = np.where(s - m < -0.5, m - 1, m)
    return s, m


def quantize(t, delta: float) -> np.ndarray:
    """Vectorized ``Q_delta(t) = delta * floor(t/delta + 1/2)``; ties round up."""
    _, m = _levels(t, delta)
    return delta * m


def quantization_residual(t, delta: float) -> np.ndarray:
    """``Delta_delta(t) = t - Q_delta(t)``, always in ``[-delta/2, delta/2)``.

    Computed as ``delta * (t/delta - m)`` so the range holds exactly even
    where ``delta * m`` is not representable; it matches ``t - Q(t)`` to
    rounding.
    """
    s, m = _levels(t, delta)
    y = delta * (s - m)
    half = delta / 2
    return np.where(y >= half, np.nextafter(half, 0.0), y)


def quantize_value(t: float, delta: float) -> float:
    if not math.isfinite(t):
        raise ValueError(f"cannot quantize non-finite value {t}")
    return float(quantize(t, delta))


@dataclass(frozen=True)
class Quantizer:
    delta: float

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def __call__(self, t) -> np.ndarray:
        return quantize(t, self.delta)

    def residual(self, t) -> np.ndarray:
        return quantization_residual(t, self.delta)


@dataclass(frozen=True, eq=False)
class QuantizedExpansion:
    coefficients: np.ndarray
    quantized: np.ndarray
    delta: float

    @property
    def residuals(self) -> np.ndarray:
        return quantization_residual(self.coefficients, self.delta)

    @property
    def partial_sums(self) -> np.ndarray:
        """``u_0 = 0, u_j = sum_{k <= j} y_k``."""
        return partial_sums(self.residuals)

    @property
    def levels(self) -> np.ndarray:
        """Integer alphabet indices ``q_j / delta``."""
        return np.rint(self.quantized / self.delta).astype(np.int64)


@dataclass(frozen=True)
class ErrorReport:
    error: float
    N: int
    d: int
    delta: float
    norm_x: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def analyze(frame: Frame, x) -> np.ndarray:
    """Frame coefficients ``c_j = <x, e_j>`` in frame order."""
    x = np.asarray(x, dtype=float)
    if x.shape != (frame.dim,):
        raise ValueError(f"x must have shape ({frame.dim},), got {x.shape}")
    return frame.vectors @ x


def reconstruct_quantized(frame: Frame, x, delta: float):
    """Quantize the frame expansion of ``x`` and synthesize ``(d/N) sum q_j e_j``.

    Returns ``(x_tilde, expansion, report)``.
    """
    if not frame.tight:
        raise NonTightFrameError(
            f"frame is not certified tight (residual {frame.report.residual:.3g}); "
            "use canonical_dual for non-tight frames"
        )
    x = np.asarray(x, dtype=float)
    c = analyze(frame, x)
    q = quantize(c, delta)
    x_tilde = (frame.dim / frame.n) * (q @ frame.vectors)
    report = ErrorReport(
        error=float(np.linalg.norm(x - x_tilde)),
        N=frame.n,
        d=frame.dim,
        delta=float(delta),
        norm_x=float(np.linalg.norm(x)),
    )
    return x_tilde, QuantizedExpansion(c, q, float(delta)), report


def error(frame: Frame, x, delta: float) -> float:
    """``E_delta(x, F) = ||x - x_tilde||``."""
    return reconstruct_quantized(frame, x, delta)[2].error


def mse_wnh(d: int, n: int, delta: float) -> float:
    """Mean squared error ``d^2 delta^2 / (12 N)`` under the white noise model."""
    if d < 1 or n < d:
        raise ValueError(f"need N >= d >= 1, got d={d}, N={n}")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    return d * d * delta * delta / (12.0 * n)


@dataclass(frozen=True)
class WNHResult:
    mse: float
    mse_theory: float
    bound_violation_rate: float
    theoretical_rate: float
    bound: float
    sigma: float
    max_error: float
    d: int
    N: int
    delta: float
    epsilon: float
    trials: int
    seed: int
    generator: str = "PCG64"

    @property
    def empirical_mse(self) -> float:
        return self.mse

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def wnh_simulate(
    frame: Frame,
    delta: float,
    trials: int,
    epsilon: float,
    seed: int,
    *,
    chunk: int = 50_000,
    threads: int = 1,
    sigma: float | None = None,
) -> WNHResult:
    """Monte Carlo of the synthetic error ``(d/N) ||sum_j y_j e_j||``.

    Residuals are drawn i.i.d. uniform on ``[-delta/2, delta/2)``.  Trials
    are cut into fixed-size chunks, each fed by its own child of
    ``SeedSequence(seed)``, so results do not depend on ``threads``.
    The probabilistic bound is ``d delta N^(eps - 1/2) (sigma(F) + 1)`` and
    its allowed failure rate ``2 N exp(-2 N^(2 eps))``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if not frame.tight:
        raise NonTightFrameError("WNH simulation assumes a tight frame")
    n, d = frame.n, frame.dim
    if sigma is None:
        sigma = frame_variation(frame, mode="heuristic").sigma if n > 1 else 0.0
    bound = d * delta / n ** (0.5 - epsilon) * (sigma + 1.0)
    vecs = frame.vectors

    sizes = [min(chunk, trials - s) for s in range(0, trials, chunk)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(job):
        size, child = job
        rng = np.random.Generator(np.random.PCG64(child))
        y = rng.uniform(-delta / 2, delta / 2, size=(size, n)) if delta > 0 else np.zeros((size, n))
        err = np.linalg.norm((d / n) * (y @ vecs), axis=1)
        return float(np.sum(err * err)), int(np.sum(err > bound)), float(err.max())

    jobs = list(zip(sizes, children))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]

    sq = math.fsum(p[0] for p in parts)
    over = sum(p[1] for p in parts)
    return WNHResult(
        mse=sq / trials,
        mse_theory=mse_wnh(d, n, delta),
        bound_violation_rate=over / trials,
        theoretical_rate=2.0 * n * math.exp(-2.0 * n ** (2 * epsilon)),
        bound=bound,
        sigma=float(sigma),
        max_error=max(p[2] for p in parts),
        d=d,
        N=n,
        delta=float(delta),
        epsilon=float(epsilon),
        trials=trials,
        seed=seed,
    )
