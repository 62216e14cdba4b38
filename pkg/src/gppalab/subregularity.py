"""
Empirical regularity constants and the conversions between them.

Sampling is uniform in balls (normalized Gaussian direction, radius scaled
by ``U^{1/n}``) and deterministic per seed.  Sampled suprema are lower
bounds on the true constants; they certify nothing on their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NoZeroSetInfo, NotAZero, RangeViolation, ZeroSetNotSingleton
from .operators import ZERO_RESIDUAL_TOL, MonotoneOperator, as_vector

DIVERGENCE_GROWTH = 10.0
TREND_RADII = (1.0, 0.5, 0.25, 0.125)
ZERO_DIST_TOL = 1e-12
DEFAULT_RADIUS = 10.0


@dataclass
class SubregEstimate:
    """Sampled subregularity constant on ``B[center; delta]``.

    ``kappa_hat`` is ``None`` when the estimate is divergent.
    """

    kappa_hat: Optional[float]
    delta: float
    samples: int
    worst_witness: Optional[np.ndarray]
    ratio_trend: list = field(default_factory=list)
    divergent: bool = False

    @property
    def trend_growth(self):
        """Sup-ratio growth factor across each halving of the radius."""
        sups = [s for _, s in self.ratio_trend]
        return [b / a if a > 0 else math.inf for a, b in zip(sups, sups[1:])]

    def to_json(self) -> dict:
        return {
            "kappa_hat": "divergent" if self.divergent else self.kappa_hat,
            "delta": self.delta,
            "samples": self.samples,
            "trend": [[r, s] for r, s in self.ratio_trend],
        }


def sample_ball(rng, center, radius, n):
    """``n`` points uniform in the closed ball ``B[center; radius]``."""
    center = np.asarray(center, dtype=float)
    d = center.size
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    r = radius * rng.random(n) ** (1.0 / d)
    return center + g / norms[:, None] * r[:, None]


def sample_sphere(rng, center, radius, n):
    center = np.asarray(center, dtype=float)
    g = rng.standard_normal((n, center.size))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    return center + radius * g / norms[:, None]


def _require_zero(op, center):
    center = as_vector(center, op.dim)
    r = np.linalg.norm(center - op.resolve(1.0, center))
    if r > ZERO_RESIDUAL_TOL:
        raise NotAZero(f"resolvent residual at the center is {r:.3e}")
    return center


def _require_exact_projector(op):
    if op.zero_set is None or not op.zero_set.exact:
        raise NoZeroSetInfo(f"{op.name}: an exact zero-set projector is required")


def _ratio(op, x):
    """``(d(x, zer A), d(0, Ax))`` for one point."""
    return op.project_zero_set(x).dist, op.min_norm_value(x)


def sampled_kappa(op: MonotoneOperator, points, center=None):
    """Sup of ``d(x, zer A) / d(0, Ax)`` over ``points``.

    Returns ``(kappa_hat, witness, divergent)``.  Points outside the domain
    (``d(0, Ax) = inf``) contribute 0; points with ``d(0, Ax) = 0`` but
    positive distance make the estimate divergent.
    """
    _require_exact_projector(op)
    best, witness, divergent = 0.0, None, False
    for x in np.atleast_2d(points):
        num, den = _ratio(op, x)
        if den == 0.0:
            if num > ZERO_DIST_TOL:
                divergent = True
                witness = x.copy()
            continue
        q = num / den
        if q > best:
            best, witness = q, x.copy()
    return (None if divergent else best), witness, divergent


def _trend(op, center, delta, rng, n_dirs):
    dirs = sample_sphere(rng, np.zeros(op.dim), 1.0, n_dirs)
    out = []
    for scale in TREND_RADII:
        r = delta * scale
        sup = 0.0
        for d in dirs:
            num, den = _ratio(op, center + r * d)
            if den == 0.0:
                sup = math.inf if num > ZERO_DIST_TOL else sup
                continue
            sup = max(sup, num / den)
        out.append((r, sup))
    return out


def _trend_diverges(trend):
    """Two consecutive halvings with combined sup-ratio growth above 10x."""
    sups = [s for _, s in trend]
    for a, b, c in zip(sups, sups[1:], sups[2:]):
        if math.isinf(c) and not math.isinf(a):
            return True
        if a > 0 and b > a and c > b and c / a > DIVERGENCE_GROWTH:
            return True
    return False


def estimate_kappa(op: MonotoneOperator, center, delta, n_samples, seed=0) -> SubregEstimate:
    """Sampled subregularity constant at ``center`` over ``B[center; delta]``.

    Also records sup-ratios on spheres of radius ``delta, delta/2, delta/4,
    delta/8`` (shared directions); sustained growth across two halvings
    flags the operator as not subregular at ``center``.
    """
    center = _require_zero(op, center)
    _require_exact_projector(op)
    delta = float(delta)
    if not (delta > 0 and math.isfinite(delta)):
        raise RangeViolation("delta must be positive and finite")
    if n_samples < 1:
        raise RangeViolation("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, center, delta, int(n_samples))
    kappa_hat, witness, divergent = sampled_kappa(op, pts, center)
    trend = _trend(op, center, delta, rng, min(int(n_samples), 256))
    if _trend_diverges(trend):
        divergent = True
    return SubregEstimate(None if divergent else kappa_hat, delta, int(n_samples), witness,
                          trend, divergent)


def lipschitz_to_subreg(alpha, tau):
    """A Lipschitz-at-0 inverse with ``(alpha, tau)`` gives subregularity ``(kappa, delta) = (alpha, alpha tau)``."""
    alpha, tau = float(alpha), float(tau)
    if not (alpha > 0 and tau > 0):
        raise RangeViolation("alpha and tau must be positive")
    return alpha, alpha * tau


def resolvent_residual_subreg(kappa, gamma):
    """Subregularity constant ``1 + kappa/gamma`` of the residual map ``Id - J_{gamma A}``."""
    kappa, gamma = float(kappa), float(gamma)
    if not (kappa >= 0 and gamma > 0):
        raise RangeViolation("kappa must be nonnegative and gamma positive")
    return 1.0 + kappa / gamma


@dataclass
class CheckResult:
    """Outcome of a sampled inequality check."""

    passed: bool
    checked: int
    worst_ratio: float
    bound: float
    witness: Optional[tuple] = None

    def to_json(self):
        w = None if self.witness is None else [np.asarray(v).tolist() for v in self.witness]
        return {"passed": self.passed, "checked": self.checked,
                "worst_ratio": self.worst_ratio, "bound": self.bound, "witness": w}


def verify_inverse_lipschitz(op: MonotoneOperator, alpha, tau, n_samples, seed=0) -> CheckResult:
    """Sample graph pairs ``(z, w)`` of ``A`` and test ``||z - xbar|| <= alpha ||w||`` when ``||w|| <= tau``.

    Pairs come from :meth:`graph_element` at random points with step sizes
    log-uniform in ``[1e-3, 1e3]``.  On failure the violating pair is
    returned as the witness.
    """
    if op.zero_set is None or not op.zero_set.singleton:
        raise ZeroSetNotSingleton(f"{op.name}: a unique zero is required")
    alpha, tau = float(alpha), float(tau)
    xbar = op.zero_set.project(np.zeros(op.dim))
    rng = np.random.default_rng(seed)
    checked, worst, witness = 0, 0.0, None
    for _ in range(int(n_samples)):
        gamma = 10.0 ** rng.uniform(-3.0, 3.0)
        r = 10.0 ** rng.uniform(-4.0, 3.0)
        x = sample_sphere(rng, xbar, r, 1)[0]
        z, w = op.graph_element(gamma, x)
        nw = float(np.linalg.norm(w))
        if nw > tau:
            continue
        checked += 1
        nz = float(np.linalg.norm(z - xbar))
        if nw > 0:
            worst = max(worst, nz / nw)
        if nz > alpha * nw + 1e-10 and witness is None:
            witness = (z, w)
    return CheckResult(witness is None, checked, worst, alpha, witness)


def _sample_radius(delta):
    return delta if math.isfinite(delta) else DEFAULT_RADIUS


def resolvent_distance_contraction_check(op, kappa, delta, gamma, center, n_samples, seed=0) -> CheckResult:
    """Check ``d(J x, zer A) <= d(x, zer A) / sqrt(1 + gamma^2/kappa^2)`` on sampled ``x``.

    Only points with ``J x`` inside ``B[center; delta]`` count; an infinite
    ``delta`` is sampled on a ball of radius 10.
    """
    center = _require_zero(op, center)
    _require_exact_projector(op)
    bound = 1.0 / math.sqrt(1.0 + gamma ** 2 / kappa ** 2)
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, center, _sample_radius(float(delta)), int(n_samples))
    checked, worst, witness = 0, 0.0, None
    for x in pts:
        j = op.resolve(gamma, x)
        if np.linalg.norm(j - center) > delta:
            continue
        checked += 1
        dx = op.project_zero_set(x).dist
        dj = op.project_zero_set(j).dist
        scale = max(1.0, float(np.linalg.norm(x)))
        if dx > 0:
            worst = max(worst, dj / dx)
        if dj > bound * dx + 1e-10 * scale and witness is None:
            witness = (x, j)
    return CheckResult(witness is None, checked, worst, bound, witness)


def residual_map_ratio_check(op, kappa, delta, gamma, center, n_samples, seed=0) -> CheckResult:
    """Check ``d(x, zer A) <= (1 + kappa/gamma) ||x - J x||`` on ``B[center; delta]``."""
    center = _require_zero(op, center)
    _require_exact_projector(op)
    bound = resolvent_residual_subreg(kappa, gamma)
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, center, _sample_radius(float(delta)), int(n_samples))
    checked, worst, witness = 0, 0.0, None
    for x in pts:
        res = float(np.linalg.norm(x - op.resolve(gamma, x)))
        d = op.project_zero_set(x).dist
        checked += 1
        if res > 0:
            worst = max(worst, d / res)
        if d > bound * res + 1e-9 and witness is None:
            witness = (x, res)
    return CheckResult(witness is None, checked, worst, bound, witness)


def equivalence_probe(op, alpha, tau, n_samples, seed=0) -> dict:
    """Experimental: evidence for both regularity notions at a unique zero.

    Reports the sampled subregularity constant on ``B[xbar; alpha tau]`` and
    the Lipschitz-at-0 check side by side.  Never used by certificates.
    """
    lip = verify_inverse_lipschitz(op, alpha, tau, n_samples, seed)
    xbar = op.zero_set.project(np.zeros(op.dim))
    kappa, delta = lipschitz_to_subreg(alpha, tau)
    est = estimate_kappa(op, xbar, delta, n_samples, seed)
    return {
        "experimental": True,
        "lipschitz_at_zero": lip.to_json(),
        "subreg_estimate": est.to_json(),
        "subreg_within_alpha": (not est.divergent) and est.kappa_hat <= kappa + 1e-9,
    }
