"""``framequant`` command line.

Every subcommand reads its parameters from three layers, highest first:
command-line flags, a ``--config`` file of ``key = value`` lines (``#``
starts a comment), and built-in defaults.  Keys are the flag names with
dashes or underscores.  Exit codes: 0 success, 1 a failed verdict,
2 a usage or configuration error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import integrate

from . import acceptance, experiments, frames, integrals, pcm, seqtools
from .reports import csv_text, dumps_json, fmt, write_outputs

__all__ = ["main", "run", "ConfigError", "RunConfig", "load_config_file"]


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# --------------------------------------------------------------------------
# value parsers
# --------------------------------------------------------------------------


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(s: str) -> int:
    return int(s)


def _floats(s: str) -> list[float]:
    vals = [_float(t) for t in s.replace(";", ",").split(",") if t.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _ints(s: str) -> list[int]:
    """Comma list; ``a..b`` expands to an inclusive integer range."""
    out: list[int] = []
    for tok in s.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ".." in tok:
            lo, hi = tok.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(tok))
    if not out:
        raise ValueError("empty list")
    return out


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s

    return parse


def _formats(s: str) -> list[str]:
    vals = [t.strip() for t in s.split(",") if t.strip()]
    bad = [v for v in vals if v not in ("csv", "json", "svg")]
    if bad or not vals:
        raise ValueError("expected a subset of csv,json,svg")
    return vals


def _positive(v) -> str | None:
    return None if v > 0 else "must be positive"


def _non_negative(v) -> str | None:
    return None if v >= 0 else "must be non-negative"


def _at_least(lo: int) -> Callable[[Any], str | None]:
    return lambda v: None if v >= lo else f"must be at least {lo}"


def _all_positive(vs) -> str | None:
    return None if all(v > 0 for v in vs) else "all entries must be positive"


@dataclass(frozen=True)
class Param:
    name: str
    parse: Callable[[str], Any]
    default: Any = None
    check: Callable[[Any], str | None] | None = None
    help: str = ""


COMMON = [
    Param("output_dir", Path, Path("framequant-out"), help="directory for csv/json/svg outputs"),
    Param("formats", _formats, ["csv", "json"], help="subset of csv,json,svg"),
    Param("axes", _choice("linear", "loglog"), None, help="svg axes (default per scenario)"),
    Param("threads", _int, None, _at_least(1), help="worker threads (env FRAMEQUANT_THREADS)"),
    Param("seed", _int, 0, _non_negative, help="random seed"),
]

FRAME_KIND = Param("kind", _choice("harmonic", "funtf"), "harmonic", help="frame family")
DIM = Param("d", _int, 2, _at_least(2), help="ambient dimension")
SIZE = Param("n", _int, 16, _at_least(2), help="number of frame vectors")
DELTA = Param("delta", _float, 0.1, _positive, help="quantizer step")
POINT = Param("x", _floats, [math.pi, math.e], help="vector as comma list")


@dataclass
class RunConfig:
    scenario: str
    parameters: dict[str, Any]
    output_dir: Path
    formats: list[str]

    def echo(self) -> dict:
        params = {k: (str(v) if isinstance(v, Path) else v) for k, v in self.parameters.items()}
        return {"scenario": self.scenario, "parameters": params, "output_dir": str(self.output_dir),
                "formats": list(self.formats)}


def load_config_file(path: Path) -> dict[str, str]:
    """Flat ``key = value`` text; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        if not key:
            raise ConfigError("config", f"line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _resolve(scenario: str, params: list[Param], flags: dict[str, str | None], file_values: dict[str, str]) -> RunConfig:
    known = {p.name for p in params}
    for key in file_values:
        if key not in known:
            raise ConfigError(key, f"unknown key for '{scenario}'")
    values: dict[str, Any] = {}
    for p in params:
        raw = flags.get(p.name)
        if raw is None:
            raw = file_values.get(p.name)
        if raw is None:
            values[p.name] = p.default
            continue
        try:
            v = p.parse(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(p.name, f"invalid value {raw!r} ({exc})") from exc
        if p.check is not None and (msg := p.check(v)):
            raise ConfigError(p.name, msg)
        values[p.name] = v
    return RunConfig(scenario, values, values["output_dir"], values["formats"])


def _threads(cfg: RunConfig) -> int:
    t = cfg.parameters.get("threads")
    if t is not None:
        return t
    env = os.environ.get("FRAMEQUANT_THREADS")
    if env:
        try:
            t = int(env)
        except ValueError as exc:
            raise ConfigError("FRAMEQUANT_THREADS", f"invalid value {env!r}") from exc
        if t < 1:
            raise ConfigError("FRAMEQUANT_THREADS", "must be at least 1")
        return t
    return os.cpu_count() or 1


def _build_frame(p: dict) -> frames.Frame:
    d, n = p["d"], p["n"]
    if n < d:
        raise ConfigError("n", f"need n >= d = {d}")
    if p["kind"] == "funtf":
        return frames.funtf_equidistributed(d, n, p["seed"])
    return frames.harmonic_frame(d, n)


def _point(p: dict, d: int, key: str = "x") -> np.ndarray:
    x = np.asarray(p[key], dtype=float)
    if x.shape != (d,):
        raise ConfigError(key, f"expected {d} coordinates, got {x.size}")
    return x


def _require_tight(frame: frames.Frame) -> None:
    if not frame.tight:
        raise ConfigError("n", f"frame is not tight (residual {frame.report.residual:.3g})")


def _write_sweep(sweep: experiments.SweepResult, cfg: RunConfig, default_axes: str) -> None:
    sweep.metadata["seed"] = cfg.parameters["seed"]
    sweep.metadata["run_config"] = cfg.echo()
    axes = cfg.parameters.get("axes") or default_axes
    for path in write_outputs(sweep, cfg.output_dir, cfg.formats, axes):
        print(f"wrote {path}")
    if sweep.fit is not None:
        print(f"slope {fmt(sweep.fit.slope)}")
    for name, ok in sorted(sweep.verdicts.items()):
        print(f"{name} {'PASS' if ok else 'FAIL'}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_frame(cfg: RunConfig) -> int:
    frame = _build_frame(cfg.parameters)
    sys.stdout.write(frame.to_text())
    return 0


def cmd_quantize(cfg: RunConfig) -> int:
    p = cfg.parameters
    frame = _build_frame(p)
    _require_tight(frame)
    _, exp, _ = pcm.reconstruct_quantized(frame, _point(p, frame.dim), p["delta"])
    u = exp.partial_sums
    rows = [(j + 1, float(c), float(q), int(lv), float(y), float(u[j + 1]))
            for j, (c, q, lv, y) in enumerate(zip(exp.coefficients, exp.quantized, exp.levels, exp.residuals))]
    sys.stdout.write(csv_text(("j", "coefficient", "quantized", "level", "residual", "partial_sum"), rows))
    return 0


def cmd_error(cfg: RunConfig) -> int:
    p = cfg.parameters
    frame = _build_frame(p)
    _require_tight(frame)
    x = _point(p, frame.dim)
    _, _, report = pcm.reconstruct_quantized(frame, x, p["delta"])
    out = report.to_dict()
    out["error_via_abel"] = seqtools.error_via_abel(frame, x, p["delta"])
    out["sphere_limit"] = integrals.sphere_limit_error(x, p["delta"])
    sys.stdout.write(dumps_json(out))
    return 0


def cmd_sweep_n(cfg: RunConfig) -> int:
    p = cfg.parameters
    if p["n_max"] < p["n_min"] + 2 * p["n_step"]:
        raise ConfigError("n_max", "need at least 3 frame sizes")
    sweep = experiments.harmonic_plateau_sweep(_point(p, 2), p["delta"], range(p["n_min"], p["n_max"] + 1, p["n_step"]),
                                     threads=_threads(cfg))
    _write_sweep(sweep, cfg, "linear")
    for key in ("plateau_mean", "plateau_cv", "sphere_limit"):
        print(f"{key} {fmt(sweep.extras[key])}")
    return 0 if sweep.passed else 1


def cmd_sweep_delta(cfg: RunConfig) -> int:
    p = cfg.parameters
    deltas = p["deltas"] or [2.0**-k for k in p["delta_exponents"]]
    if len(deltas) < 3:
        raise ConfigError("deltas", "need at least 3 step sizes for a fit")
    if p["scenario"] == "path":
        if p["x"] is None and p["d"] != 2:
            raise ConfigError("x", "required when d != 2")
        x = _point(p, p["d"]) if p["x"] is not None else np.array(experiments.PLATEAU_X)
        sweep = experiments.path_error_scaling(x, frames.FramePath.harmonic(p["d"]), deltas, p["regime"], c=p["c"],
                                             snap_eps=p["snap_eps"], threads=_threads(cfg))
    else:
        if not 2 <= p["d"] <= 5:
            raise ConfigError("d", "must lie in 2..5 for the sphere limit")
        direction = _point(p, p["d"]) if p["x"] is not None else None
        sweep = experiments.sphere_limit_scaling(p["d"], direction, deltas, r=p["r"], snap_eps=p["snap_eps"])
    _write_sweep(sweep, cfg, "loglog")
    return 0 if sweep.passed else 1


def cmd_avg_error(cfg: RunConfig) -> int:
    p = cfg.parameters
    if p["sweep"] != "none":
        sweep = experiments.circle_average_checks([p["delta"]], p["sweep"], n=p["n"], m_values=p["m_values"],
                                            n_values=p["n_values"], threads=_threads(cfg))
        _write_sweep(sweep, cfg, "loglog")
        return 0 if sweep.passed else 1
    spec = integrals.RadialSpec(p["r"], p["delta"])
    out: dict[str, Any] = {"N": p["n"], "r": p["r"], "delta": p["delta"], "eps": spec.eps}
    if p["method"] in ("direct", "both"):
        out["direct"] = integrals.avg_error_direct(frames.harmonic_frame(2, p["n"]), spec)
    if p["method"] in ("fourier", "both"):
        out["fourier"] = integrals.avg_error_fourier(p["n"], spec, kmax=p["kmax"])
    out["lower_bound"] = integrals.AVG_BOUND_CONST * p["delta"] ** 1.5 / math.sqrt(p["r"])
    sys.stdout.write(dumps_json(out))
    return 0


def _integral_oracle(spec: integrals.RadialSpec, d: int) -> float:
    """Adaptive quadrature split at the jumps of the residual."""
    R, delta = spec.R, spec.delta
    m = np.arange(0, math.floor(R + 0.5) + 1) + 0.5
    cuts = sorted(float(t) for t in np.arccos(np.clip(np.concatenate([m, -m]) / R, -1, 1)) if 0 < t < math.pi)

    def f(t: float) -> float:
        return float(pcm.quantization_residual(spec.r * math.cos(t), delta)) * math.cos(t) * math.sin(t) ** (d - 2)

    val, _ = integrate.quad(f, 0.0, math.pi, points=cuts or None, limit=max(200, 4 * len(cuts)),
                            epsabs=1e-14, epsrel=1e-13)
    return 2.0 * val if d == 2 else val


def cmd_integral(cfg: RunConfig) -> int:
    p = cfg.parameters
    spec = integrals.RadialSpec(p["r"], p["delta"])
    d = p["d"]
    if d == 2:
        methods = list(integrals.METHODS_2D) if p["method"] == "all" else [p["method"]]
        evaluate = lambda m: integrals.delta_integral_2d(spec, m, strict=True)
    else:
        methods = list(integrals.METHODS_HIGHD) if p["method"] == "all" else [p["method"]]
        if any(m not in integrals.METHODS_HIGHD for m in methods):
            raise ConfigError("method", f"d > 2 supports {', '.join(integrals.METHODS_HIGHD)}")
        evaluate = lambda m: integrals.delta_integral_highd(spec, d, m)
    oracle = _integral_oracle(spec, d)
    rows, skipped = [], []
    for m in methods:
        try:
            v = evaluate(m)
        except ValueError as exc:
            if p["method"] != "all":
                raise ConfigError("method", str(exc)) from exc
            skipped.append(m)
            continue
        rows.append((m, fmt(p["r"]), fmt(p["delta"]), d, fmt(v), fmt(v - oracle)))
    sys.stdout.write(csv_text(("method", "r", "delta", "d", "value", "residual_vs_oracle"), rows))
    for m in skipped:
        print(f"skipped {m}: not applicable at r={fmt(p['r'])}, delta={fmt(p['delta'])}", file=sys.stderr)
    if len(rows) > 1:
        vals = [float(r[4]) for r in rows]
        print(f"max pairwise difference {fmt(max(vals) - min(vals))}", file=sys.stderr)
    return 0


def cmd_find_rstar(cfg: RunConfig) -> int:
    delta = cfg.parameters["delta"]
    r = integrals.find_rstar(delta)
    residual = abs(integrals.delta_integral_2d(integrals.RadialSpec(r, delta), "breakpoint_sum"))
    print(f"r_star {fmt(r)}")
    print(f"ratio {fmt(r / delta)}")
    print(f"closed_form_ratio {fmt(integrals.MAGIC_RATIO)}")
    print(f"residual {fmt(residual)}")
    return 0


def cmd_wnh_sim(cfg: RunConfig) -> int:
    p = cfg.parameters
    if not 0 < p["epsilon"] < 0.5:
        raise ConfigError("epsilon", "must lie in (0, 1/2)")
    frame = _build_frame(p)
    _require_tight(frame)
    res = pcm.wnh_simulate(frame, p["delta"], p["trials"], p["epsilon"], p["seed"], threads=_threads(cfg))
    sys.stdout.write(dumps_json(res.to_dict()))
    return 0


def cmd_discrepancy(cfg: RunConfig) -> int:
    p = cfg.parameters
    sources = [k for k in ("points", "equal", "random") if p[k] is not None]
    if len(sources) != 1:
        raise ConfigError("points", "give exactly one of points, equal, random")
    if p["points"] is not None:
        pts = np.asarray(p["points"])
    elif p["equal"] is not None:
        pts = np.arange(p["equal"]) / p["equal"]
    else:
        pts = np.random.default_rng(p["seed"]).uniform(-0.5, 0.5, p["random"])
    report = seqtools.discrepancy(pts, ks=p["ks"])
    sys.stdout.write(dumps_json(report.to_dict()))
    return 0


def cmd_verify_all(cfg: RunConfig) -> int:
    p = cfg.parameters
    threads = _threads(cfg)
    verdicts = acceptance.run_all(p["profile"], p["seed"], threads, only=p["only"], log=print)
    # threads does not change results, so it is left out of the echo
    echo = cfg.echo()
    echo["parameters"].pop("threads", None)
    text = acceptance.report_json(verdicts, p["profile"], p["seed"], echo)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / "verify_all.json"
    path.write_text(text, newline="\n")
    ok = all(v.passed for v in verdicts)
    print(f"wrote {path}")
    print("ALL PASS" if ok else "SOME CRITERIA FAILED")
    return 0 if ok else 1


def _criteria(s: str) -> list[int]:
    vals = _ints(s)
    if any(not 1 <= v <= 11 for v in vals):
        raise ValueError("criteria are numbered 1..11")
    return vals


SUBCOMMANDS: dict[str, tuple[str, list[Param], Callable[[RunConfig], int]]] = {
    "frame": ("print a frame in the framequant text format", [FRAME_KIND, DIM, SIZE], cmd_frame),
    "quantize": ("PCM-quantize the frame coefficients of x", [FRAME_KIND, DIM, SIZE, POINT, DELTA], cmd_quantize),
    "error": ("reconstruction error of x", [FRAME_KIND, DIM, SIZE, POINT, DELTA], cmd_error),
    "sweep-n": (
        "error against frame size for harmonic frames of R^2",
        [
            POINT,
            Param("delta", _float, 1 / 16, _positive),
            Param("n_min", _int, 10, _at_least(2)),
            Param("n_max", _int, 2000, _at_least(3)),
            Param("n_step", _int, 1, _at_least(1)),
        ],
        cmd_sweep_n,
    ),
    "sweep-delta": (
        "error exponent in delta (path: frame path samples, sphere: equidistributed limit)",
        [
            Param("scenario", _choice("path", "sphere"), "path"),
            Param("regime", _choice("large_N", "small_N"), "large_N"),
            Param("d", _int, 2, _at_least(2)),
            Param("x", _floats, None),
            Param("r", _float, 1.0, _positive),
            Param("deltas", _floats, None, _all_positive),
            Param("delta_exponents", _ints, list(range(4, 11))),
            Param("c", _float, None, _positive),
            Param("snap_eps", _bool, True),
        ],
        cmd_sweep_delta,
    ),
    "avg-error": (
        "average error over the circle of radius r (harmonic frames of R^2)",
        [
            Param("n", _int, 32, _at_least(3)),
            Param("r", _float, 0.5, _positive),
            Param("delta", _float, 0.2, _positive),
            Param("method", _choice("direct", "fourier", "both"), "both"),
            Param("kmax", _int, 20_000, _at_least(0)),
            Param("sweep", _choice("none", "eps_zero", "magic_ratio"), "none"),
            Param("m_values", _ints, list(range(1, 21)), lambda v: None if min(v) >= 1 else "must be >= 1"),
            Param("n_values", _ints, [2**k for k in range(4, 12)], lambda v: None if min(v) >= 3 else "must be >= 3"),
        ],
        cmd_avg_error,
    ),
    "integral": (
        "the key residual integral by one or all routes",
        [
            Param("r", _float, 0.5, _positive),
            Param("delta", _float, 0.2, _positive),
            Param("d", _int, 2, _at_least(2)),
            Param("method", _choice(*integrals.METHODS_2D, "all"), "all"),
        ],
        cmd_integral,
    ),
    "find-rstar": ("root of the key integral in r on [delta/2, delta]", [Param("delta", _float, 1.0, _positive)],
                   cmd_find_rstar),
    "wnh-sim": (
        "Monte Carlo under the white noise model",
        [
            FRAME_KIND,
            DIM,
            Param("n", _int, 64, _at_least(2)),
            DELTA,
            Param("trials", _int, 100_000, _at_least(1)),
            Param("epsilon", _float, 0.25),
        ],
        cmd_wnh_sim,
    ),
    "discrepancy": (
        "exact arc discrepancy of points on the torus",
        [
            Param("points", _floats, None),
            Param("equal", _int, None, _at_least(1)),
            Param("random", _int, None, _at_least(1)),
            Param("ks", _ints, [1, 2, 4, 8, 16], lambda v: None if min(v) >= 1 else "must be >= 1"),
        ],
        cmd_discrepancy,
    ),
    "verify-all": (
        "run the acceptance suite",
        [
            Param("profile", _choice(*acceptance.PROFILES), "desk"),
            Param("only", _criteria, None),
        ],
        cmd_verify_all,
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="framequant", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, (help_text, params, _) in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", type=Path, help="key = value file; flags override it")
        for p in params + COMMON:
            default = p.default if not isinstance(p.default, list) else ",".join(map(str, p.default))
            sp.add_argument("--" + p.name.replace("_", "-"), dest=p.name, default=None,
                            help=f"{p.help} (default: {default})".strip())
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _, params, handler = SUBCOMMANDS[args.command]
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = _resolve(args.command, params + COMMON, vars(args), file_values)
        return handler(cfg)
    except ConfigError as exc:
        print(f"framequant {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))
