"""
Relaxed inexact proximal point and Krasnosel'skii-Mann iterations.

Both engines run the same loop::

    y_k     = (1 - lam_k) x_k + lam_k T_k x_k
    x_{k+1} = y_k + eta_k e_k

with ``T_k = J_{c_k A}`` (averagedness 1/2) for the proximal point method, or
a user-supplied ``alpha_k``-averaged map for the Krasnosel'skii-Mann form.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DivergenceError, PolicyViolation, RangeViolation
from .operators import MonotoneOperator, as_vector

DIVERGENCE_NORM = 1e12

# ---------------------------------------------------------------------------
# coefficient sequences

SEQUENCE_FORMULAS: dict[str, Callable[[int], float]] = {
    "harmonic-plus-one": lambda k: 1.0 + 1.0 / (k + 1),
    "geometric-half": lambda k: 0.5 ** k,
    "inverse-square": lambda k: 1.0 / (k + 1) ** 2,
    "alternating-half-three-halves": lambda k: 0.5 if k % 2 == 0 else 1.5,
}


class Seq:
    """A coefficient sequence ``k -> value`` built from a constant, list, or formula id.

    Lists shorter than the run are cycled.  The original ``spec`` is kept so
    that configurations round-trip.
    """

    def __init__(self, spec):
        if isinstance(spec, Seq):
            spec = spec.spec
        if isinstance(spec, bool):
            raise TypeError("boolean is not a valid sequence")
        if isinstance(spec, (int, float)):
            v = float(spec)
            self._fn = lambda k: v
        elif isinstance(spec, str):
            try:
                self._fn = SEQUENCE_FORMULAS[spec]
            except KeyError:
                raise ValueError(f"unknown sequence formula {spec!r}") from None
        elif isinstance(spec, (list, tuple)):
            vals = [float(v) for v in spec]
            if not vals:
                raise ValueError("empty sequence list")
            self._fn = lambda k: vals[k % len(vals)]
            spec = vals
        else:
            raise TypeError(f"cannot build a sequence from {spec!r}")
        self.spec = spec

    def __call__(self, k: int) -> float:
        return self._fn(int(k))

    def take(self, n: int) -> np.ndarray:
        return np.array([self(k) for k in range(n)], dtype=float)

    def __eq__(self, other):
        return isinstance(other, Seq) and self.spec == other.spec

    def __repr__(self):
        return f"Seq({self.spec!r})"


# ---------------------------------------------------------------------------
# error policies


@dataclass(frozen=True)
class NoError:
    def to_spec(self):
        return "none"


@dataclass(frozen=True)
class SummableError:
    """``||e_k||`` is fixed to ``bound(k)`` along a random unit direction."""

    bound: Seq

    def __post_init__(self):
        object.__setattr__(self, "bound", Seq(self.bound))

    def to_spec(self):
        return {"summable": self.bound.spec}


@dataclass(frozen=True)
class RelativeError:
    """``||e_k|| <= eps_k ||x_k - x_{k+1}||`` enforced by construction."""

    eps: Seq

    def __post_init__(self):
        object.__setattr__(self, "eps", Seq(self.eps))

    def to_spec(self):
        return {"relative": self.eps.spec}


ErrorPolicy = Union[NoError, SummableError, RelativeError]


@dataclass(frozen=True)
class Schedule:
    """Coefficient sequences and error policy for one run."""

    lam: Seq = 1.0
    c: Seq = 1.0
    eta: Seq = 1.0
    error: ErrorPolicy = field(default_factory=NoError)
    seed: int = 0

    def __post_init__(self):
        for name in ("lam", "c", "eta"):
            object.__setattr__(self, name, Seq(getattr(self, name)))

    def coefficients(self, k):
        """Return validated ``(lam_k, c_k, eta_k)``."""
        lam, c, eta = self.lam(k), self.c(k), self.eta(k)
        if not 0.0 <= lam <= 2.0:
            raise RangeViolation(f"lambda_{k} = {lam} outside [0, 2]")
        if not c > 0:
            raise RangeViolation(f"c_{k} = {c} must be positive")
        if not eta >= 0:
            raise RangeViolation(f"eta_{k} = {eta} must be nonnegative")
        return lam, c, eta

    def summary(self, n=None):
        d = {"lambda": self.lam.spec, "c": self.c.spec, "eta": self.eta.spec,
             "error": self.error.to_spec(), "seed": self.seed}
        return d


# ---------------------------------------------------------------------------
# trace


@dataclass
class IterationTrace:
    """Full record of a run of ``K`` steps (``K + 1`` iterates).

    Arrays indexed by ``k = 0..K`` hold per-iterate data; arrays of length
    ``K`` hold per-step data.  Distances to ``zer A`` (and the anchored
    distances used by certificates) are ``None`` when no zero-set
    description was available.
    """

    x: np.ndarray
    j: np.ndarray
    y: np.ndarray
    e: np.ndarray
    lam: np.ndarray
    c: np.ndarray
    eta: np.ndarray
    alpha: np.ndarray
    eps: np.ndarray
    residual: np.ndarray
    step: np.ndarray
    err: np.ndarray
    dist: Optional[np.ndarray] = None
    dist_exact: bool = True
    zero_point: Optional[np.ndarray] = None
    y_to_px: Optional[np.ndarray] = None
    next_to_px: Optional[np.ndarray] = None
    x_to_pj: Optional[np.ndarray] = None
    next_to_pj: Optional[np.ndarray] = None
    name: str = ""
    seed: int = 0

    @property
    def K(self):
        return self.step.size

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def exact(self):
        return bool(np.all(self.err == 0.0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_trace_csv(self, buf)
        return buf.getvalue()


def _fmt(v):
    return format(float(v), ".17g")


def write_trace_csv(trace: IterationTrace, fh):
    """Write one row per iterate: k, lambda, c, eta, err_norm, residual, step, dist, dist_exact.

    Step and error columns are empty on the final row (no step is taken from
    ``x_K``); ``dist`` is empty when the zero set is unknown.
    """
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "lambda", "c", "eta", "err_norm", "residual", "step", "dist", "dist_exact"])
    K = trace.K
    for k in range(K + 1):
        last = k == K
        w.writerow([
            k,
            _fmt(trace.lam[k]),
            _fmt(trace.c[k]),
            _fmt(trace.eta[k]),
            "" if last else _fmt(trace.err[k]),
            _fmt(trace.residual[k]),
            "" if last else _fmt(trace.step[k]),
            "" if trace.dist is None else _fmt(trace.dist[k]),
            "true" if (trace.dist is not None and trace.dist_exact) else "false",
        ])


# ---------------------------------------------------------------------------
# single steps


def _unit_direction(rng, n):
    d = rng.standard_normal(n)
    nd = np.linalg.norm(d)
    while nd == 0.0:
        d = rng.standard_normal(n)
        nd = np.linalg.norm(d)
    return d / nd


def gppa_step(op: MonotoneOperator, x, lam, c, eta, e):
    """One relaxed inexact resolvent step; returns ``(y, x_next)``."""
    x = as_vector(x, op.dim)
    e = as_vector(e, op.dim)
    y = (1.0 - lam) * x + lam * op.resolve(c, x)
    return y, y + eta * e


def inject_relative_error(rng, y, x, eta, eps):
    """Random error ``e`` with ``||e|| <= eps ||x - (y + eta e)||``.

    The direction is uniform on the sphere; the length is
    ``eps ||x - y|| / (1 + eta eps)``.  Since ``||x - x_next|| >= ||x - y|| - eta ||e||``,
    this length satisfies the relative bound with equality in the worst case.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if eta * eps >= 1.0:
        raise PolicyViolation(f"eta * eps = {eta * eps} must be < 1")
    d = _unit_direction(rng, x.size)
    # hypot avoids underflow when squaring tiny gaps
    s = eps * math.hypot(*(x - y)) / (1.0 + eta * eps)
    return s * d


# ---------------------------------------------------------------------------
# runs


Family = Callable[[int], tuple]


def resolvent_family(op: MonotoneOperator, c) -> Family:
    """``k -> (1/2, J_{c_k A})``: the resolvent family behind the proximal point method."""
    c = Seq(c)
    return lambda k: (0.5, lambda v, _g=c(k): op.resolve(_g, v))


def _projector_for(op):
    if op is None or op.zero_set is None:
        return None
    return op.project_zero_set


def _iterate(family: Family, schedule: Schedule, x0, K, projector, name, gppa):
    x0 = as_vector(x0)
    if K < 1:
        raise ValueError("K must be >= 1")
    n = x0.size
    rng = np.random.default_rng(schedule.seed)
    policy = schedule.error

    xs = np.empty((K + 1, n))
    js = np.empty((K + 1, n))
    ys = np.empty((K, n))
    es = np.zeros((K, n))
    lam = np.empty(K + 1)
    c = np.empty(K + 1)
    eta = np.empty(K + 1)
    alpha = np.empty(K + 1)
    eps = np.full(K, np.nan)

    xs[0] = x0
    for k in range(K + 1):
        lam[k], c[k], eta[k] = schedule.coefficients(k)
        alpha[k], T = family(k)
        if not 0.0 < alpha[k] <= 1.0:
            raise RangeViolation(f"alpha_{k} = {alpha[k]} outside ]0, 1]")
        if not gppa and lam[k] > 1.0 / alpha[k]:
            raise RangeViolation(f"lambda_{k} = {lam[k]} outside [0, 1/alpha_{k}]")
        x = xs[k]
        js[k] = T(x)
        if k == K:
            break
        y = (1.0 - lam[k]) * x + lam[k] * js[k]
        if isinstance(policy, SummableError):
            e = policy.bound(k) * _unit_direction(rng, n)
        elif isinstance(policy, RelativeError):
            eps[k] = policy.eps(k)
            e = inject_relative_error(rng, y, x, eta[k], eps[k])
        else:
            e = np.zeros(n)
        ys[k] = y
        es[k] = e
        xs[k + 1] = y + eta[k] * e
        if not np.all(np.isfinite(xs[k + 1])) or np.linalg.norm(xs[k + 1]) > DIVERGENCE_NORM:
            raise DivergenceError(f"||x_{k + 1}|| exceeded {DIVERGENCE_NORM:g}")

    residual = np.linalg.norm(xs - js, axis=1)
    step = np.linalg.norm(xs[1:] - xs[:-1], axis=1)
    err = eta[:K] * np.linalg.norm(es, axis=1)
    trace = IterationTrace(x=xs, j=js, y=ys, e=es, lam=lam, c=c, eta=eta, alpha=alpha,
                           eps=eps, residual=residual, step=step, err=err,
                           name=name, seed=schedule.seed)
    if projector is not None:
        _attach_distances(trace, projector)
    return trace


def _attach_distances(trace, projector):
    K = trace.K
    px = []
    exact = True
    for k in range(K + 1):
        proj = projector(trace.x[k])
        px.append(proj.point)
        exact = exact and proj.exact
    px = np.array(px)
    pj = np.array([projector(trace.j[k]).point for k in range(K)])
    trace.dist = np.linalg.norm(trace.x - px, axis=1)
    trace.dist_exact = exact
    trace.y_to_px = np.linalg.norm(trace.y - px[:K], axis=1)
    trace.next_to_px = np.linalg.norm(trace.x[1:] - px[:K], axis=1)
    trace.x_to_pj = np.linalg.norm(trace.x[:K] - pj, axis=1)
    trace.next_to_pj = np.linalg.norm(trace.x[1:] - pj, axis=1)


def run_gppa(op: MonotoneOperator, schedule: Schedule, x0, K: int) -> IterationTrace:
    """Run ``K`` steps of the generalized proximal point algorithm from ``x0``.

    Deterministic given ``schedule.seed``.  Raises ``DivergenceError`` if an
    iterate's norm exceeds 1e12.
    """
    x0 = as_vector(x0, op.dim)
    trace = _iterate(resolvent_family(op, schedule.c), schedule, x0, K,
                     _projector_for(op), op.name, gppa=True)
    if op.zero_set is not None and op.zero_set.singleton:
        trace.zero_point = op.zero_set.project(x0)
    return trace


def run_km(family: Family, schedule: Schedule, x0, K: int, zero_set_projector=None,
           name="km") -> IterationTrace:
    """Inexact non-stationary Krasnosel'skii-Mann iteration.

    Parameters
    ----------
    family : callable
        ``k -> (alpha_k, T_k)`` with ``T_k`` an ``alpha_k``-averaged map.
    schedule : Schedule
        Relaxation, error scaling, and error policy.  ``schedule.c`` is only
        echoed into the trace.
    zero_set_projector : callable, optional
        ``x -> ZeroProjection`` onto the common fixed-point set; enables the
        distance columns.
    """
    return _iterate(family, schedule, x0, K, zero_set_projector, name, gppa=False)
