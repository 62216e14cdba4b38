"""
Declarative experiments: a JSON config in, trace and verification files out.

Example config::

    {
      "operator": "rotation2",
      "x0": [1.0, 0.0],
      "schedule": {"lambda": 1.0, "c": 1.0, "eta": 1.0, "error": "none"},
      "iterations": 30,
      "seed": 0,
      "certificates": [{"theorem": "Prop5_1", "kappa": 1.0}]
    }

``x0`` may instead be ``{"random_in_ball": {"center": [...], "radius": r}}``.
``error`` is ``"none"``, ``{"summable": seq}`` or ``{"relative": seq}``.
Sequences are numbers, lists (cycled) or formula ids.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import diagnostics, rates
from .engines import (
    SEQUENCE_FORMULAS,
    NoError,
    RelativeError,
    Schedule,
    Seq,
    SummableError,
    run_gppa,
)
from .errors import ConfigError, GPPAError, InvalidSpec, NotMonotone
from .subregularity import estimate_kappa
from .zoo import make_operator

OPEN_LAMBDA = ("Thm3_4", "Thm3_10", "Thm3_12_subreg", "Thm3_12_lipschitz", "Thm5_6", "Thm5_8")
OUTPUT_FILES = {"trace": "trace.csv", "certificates": "certificates.json",
                "verification": "verification.json", "report": "report.json"}
CERT_PARAMS = ("kappa", "alpha", "tau", "delta", "t", "beta", "gamma_sub", "K_detected", "metric")


@dataclass(frozen=True)
class StartSpec:
    """Explicit start vector or a seeded uniform draw from a ball."""

    point: Optional[tuple] = None
    center: Optional[tuple] = None
    radius: Optional[float] = None

    def resolve(self, seed):
        if self.point is not None:
            return np.array(self.point, dtype=float)
        rng = np.random.default_rng([seed, 1])
        c = np.array(self.center, dtype=float)
        g = rng.standard_normal(c.size)
        g /= np.linalg.norm(g)
        return c + g * self.radius * rng.random() ** (1.0 / c.size)

    def to_json(self):
        if self.point is not None:
            return list(self.point)
        return {"random_in_ball": {"center": list(self.center), "radius": self.radius}}


@dataclass(frozen=True)
class CertSpec:
    theorem: str
    params: tuple = ()

    def to_json(self):
        return {"theorem": self.theorem, **dict(self.params)}


@dataclass(frozen=True)
class EstimateSpec:
    center: tuple
    delta: float
    samples: int

    def to_json(self):
        return {"center": list(self.center), "delta": self.delta, "samples": self.samples}


@dataclass(frozen=True)
class ExperimentConfig:
    operator: str
    x0: StartSpec
    schedule: Schedule
    iterations: int
    seed: int = 0
    certificates: tuple = ()
    estimate: Optional[EstimateSpec] = None
    tolerance: float = 1e-10
    outputs: tuple = tuple(sorted(OUTPUT_FILES.items()))

    def to_json(self) -> dict:
        s = self.schedule
        d = {
            "operator": self.operator,
            "x0": self.x0.to_json(),
            "schedule": {"lambda": s.lam.spec, "c": s.c.spec, "eta": s.eta.spec,
                         "error": s.error.to_spec()},
            "iterations": self.iterations,
            "seed": self.seed,
            "certificates": [c.to_json() for c in self.certificates],
            "tolerance": self.tolerance,
            "outputs": dict(self.outputs),
        }
        if self.estimate is not None:
            d["estimate_kappa"] = self.estimate.to_json()
        return d


# ---------------------------------------------------------------------------
# parsing


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    return float(v)


def _vector(v, path):
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a non-empty list of numbers")
    return tuple(_number(x, f"{path}[{i}]") for i, x in enumerate(v))


def _seq(v, path, lo=None, hi=None, lo_open=False):
    if isinstance(v, str):
        if v not in SEQUENCE_FORMULAS:
            raise ConfigError(path, f"unknown formula id {v!r}; known: {sorted(SEQUENCE_FORMULAS)}")
        values = [(None, SEQUENCE_FORMULAS[v](k)) for k in range(64)]
    elif isinstance(v, list):
        if not v:
            raise ConfigError(path, "empty list")
        values = [(f"{path}[{i}]", _number(x, f"{path}[{i}]")) for i, x in enumerate(v)]
        v = [x for _, x in values]
    else:
        values = [(None, _number(v, path))]
    for p, x in values:
        where = p or path
        if lo is not None and (x <= lo if lo_open else x < lo):
            raise ConfigError(where, f"value {x} below the allowed range")
        if hi is not None and x > hi:
            raise ConfigError(where, f"value {x} above the allowed range")
    return Seq(v)


def _error(v, path, eta):
    if v is None or v == "none":
        return NoError()
    if not isinstance(v, dict) or len(v) != 1:
        raise ConfigError(path, "expected \"none\", {\"summable\": ...} or {\"relative\": ...}")
    (kind, arg), = v.items()
    if kind == "summable":
        return SummableError(_seq(arg, f"{path}.summable", lo=0.0))
    if kind == "relative":
        eps = _seq(arg, f"{path}.relative", lo=0.0)
        for k in range(256):
            if eta(k) * eps(k) >= 1.0:
                raise ConfigError(f"{path}.relative", f"eta_k * eps_k = {eta(k) * eps(k)} must be < 1 (k={k})")
        return RelativeError(eps)
    raise ConfigError(path, f"unknown error policy {kind!r}")


def _known_keys(d, keys, path):
    for k in d:
        if k not in keys:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown field")


def parse_config(data) -> ExperimentConfig:
    """Validate a config (JSON text or decoded dict); errors name the offending field."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    _known_keys(data, ("operator", "x0", "schedule", "iterations", "seed", "certificates",
                       "estimate_kappa", "tolerance", "outputs"), "")

    op_id = data.get("operator")
    if isinstance(op_id, dict) and set(op_id) == {"matrix"}:
        op_id = f"linear:{op_id['matrix']}"
    if not isinstance(op_id, str):
        raise ConfigError("operator", "expected a zoo identifier or {\"matrix\": path}")
    try:
        op = make_operator(op_id)
    except (InvalidSpec, NotMonotone, OSError) as exc:
        raise ConfigError("operator", str(exc)) from None

    x0 = data.get("x0")
    if isinstance(x0, dict):
        _known_keys(x0, ("random_in_ball",), "x0")
        ball = x0.get("random_in_ball")
        if not isinstance(ball, dict):
            raise ConfigError("x0.random_in_ball", "expected {\"center\": [...], \"radius\": r}")
        center = _vector(ball.get("center"), "x0.random_in_ball.center")
        radius = _number(ball.get("radius"), "x0.random_in_ball.radius")
        if radius < 0:
            raise ConfigError("x0.random_in_ball.radius", "must be nonnegative")
        start = StartSpec(center=center, radius=radius)
        dim = len(center)
    else:
        start = StartSpec(point=_vector(x0, "x0"))
        dim = len(start.point)
    if dim != op.dim:
        raise ConfigError("x0", f"dimension {dim} does not match operator dimension {op.dim}")

    sched = data.get("schedule", {})
    if not isinstance(sched, dict):
        raise ConfigError("schedule", "expected an object")
    _known_keys(sched, ("lambda", "c", "eta", "error"), "schedule")
    lam = _seq(sched.get("lambda", 1.0), "schedule.lambda", lo=0.0, hi=2.0)
    c = _seq(sched.get("c", 1.0), "schedule.c", lo=0.0, lo_open=True)
    eta = _seq(sched.get("eta", 1.0), "schedule.eta", lo=0.0)
    err = _error(sched.get("error", "none"), "schedule.error", eta)

    K = data.get("iterations")
    if isinstance(K, bool) or not isinstance(K, int) or K < 1:
        raise ConfigError("iterations", "expected a positive integer")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", "expected an integer in [0, 2^64)")
    schedule = Schedule(lam, c, eta, err, seed)

    certs = data.get("certificates", [])
    if not isinstance(certs, list):
        raise ConfigError("certificates", "expected a list")
    cert_specs = []
    for i, cd in enumerate(certs):
        path = f"certificates[{i}]"
        if not isinstance(cd, dict) or "theorem" not in cd:
            raise ConfigError(path, "expected an object with a \"theorem\" field")
        _known_keys(cd, ("theorem",) + CERT_PARAMS, path)
        tid = cd["theorem"]
        if tid not in rates.THEOREM_IDS:
            raise ConfigError(f"{path}.theorem", f"unknown theorem id {tid!r}")
        params = tuple(sorted((k, v) for k, v in cd.items() if k != "theorem"))
        spec = CertSpec(tid, params)
        _build_certificate(spec, schedule, K, path)
        cert_specs.append(spec)

    est = None
    if "estimate_kappa" in data:
        ed = data["estimate_kappa"]
        if not isinstance(ed, dict):
            raise ConfigError("estimate_kappa", "expected an object")
        _known_keys(ed, ("center", "delta", "samples"), "estimate_kappa")
        center = _vector(ed.get("center"), "estimate_kappa.center")
        delta = _number(ed.get("delta"), "estimate_kappa.delta")
        samples = ed.get("samples", 1000)
        if isinstance(samples, bool) or not isinstance(samples, int) or samples < 1:
            raise ConfigError("estimate_kappa.samples", "expected a positive integer")
        est = EstimateSpec(center, delta, samples)

    tol = _number(data.get("tolerance", 1e-10), "tolerance")
    outputs = dict(OUTPUT_FILES)
    od = data.get("outputs", {})
    if not isinstance(od, dict):
        raise ConfigError("outputs", "expected an object")
    _known_keys(od, tuple(OUTPUT_FILES), "outputs")
    for k, v in od.items():
        if not isinstance(v, str) or not v:
            raise ConfigError(f"outputs.{k}", "expected a file name")
        outputs[k] = v

    return ExperimentConfig(op_id, start, schedule, K, seed, tuple(cert_specs), est, tol,
                            tuple(sorted(outputs.items())))


def _build_certificate(spec: CertSpec, schedule, K, path):
    params = dict(spec.params)
    if spec.theorem in OPEN_LAMBDA:
        lam = schedule.lam.take(K)
        if np.any((lam <= 0) | (lam >= 2)):
            raise ConfigError(f"{path}.theorem", f"{spec.theorem} requires lambda_k in ]0, 2[")
    try:
        return rates.make_certificate(spec.theorem, params, schedule, K)
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "required hypothesis constant is missing") from None
    except (GPPAError, ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# running


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    trace: object
    certificates: list
    verifications: list
    summability: Optional[dict]
    estimate: Optional[dict]
    paths: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(v.overall for v in self.verifications)

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "trace": diagnostics.summary(self.trace),
            "verification": {v.certificate_id: ("pass" if v.overall else "fail") for v in self.verifications},
            "overall": "pass" if self.passed else "fail",
            "summability": self.summability,
            "subregularity_estimate": self.estimate,
        }


def _dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _clean(obj):
    """Replace non-finite floats with None so the JSON stays strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentReport:
    """Run one experiment; write trace CSV and JSON reports when ``out_dir`` is given.

    Outputs depend only on the config (and its seed), so repeated runs are
    byte-identical.
    """
    op = make_operator(config.operator)
    x0 = config.x0.resolve(config.seed)
    trace = run_gppa(op, config.schedule, x0, config.iterations)
    certs = [_build_certificate(s, config.schedule, config.iterations, f"certificates[{i}]")
             for i, s in enumerate(config.certificates)]
    verifs = [diagnostics.check_certificate(trace, c, config.tolerance) for c in certs]
    summ = diagnostics.summability_report(trace) if trace.K + 1 >= diagnostics.MIN_ENTRIES else None
    est = None
    if config.estimate is not None:
        e = config.estimate
        est = estimate_kappa(op, e.center, e.delta, e.samples, config.seed).to_json()
    report = ExperimentReport(config, trace, certs, verifs, summ, est)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        outputs = dict(config.outputs)
        paths = {k: os.path.join(out_dir, v) for k, v in outputs.items()}
        with open(paths["trace"], "w", encoding="utf-8", newline="") as fh:
            fh.write(trace.to_csv())
        _dump(_clean([c.to_json() for c in certs]), paths["certificates"])
        _dump(_clean([v.to_json() for v in verifs]), paths["verification"])
        _dump(_clean(report.to_json()), paths["report"])
        report.paths = paths
    return report
