"""
Closed-form contraction factors, the scalar identities behind them, and
theorem-indexed rate certificates.

Two certificate kinds exist:

* ``Q`` certificates bound a one-step ratio ``m_{k+1} <= factor_k * m_k`` for
  every ``k`` past some threshold (or from the start);
* ``R`` certificates bound squared distances to the solution set through the
  recursion ``d^2_{k+1} <= rho_k d^2_k + slack_k`` and its unrolled product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engines import Seq
from .errors import DomainError, HypothesisViolation, NonContractive, PolicyViolation, RangeViolation

METRICS = ("norm_to_point", "dist_to_set", "dist_sq_to_set", "anchored_px", "anchored_pj")

THEOREM_IDS = (
    "Lem2_4", "Thm3_4", "Thm3_10", "Thm3_12_subreg", "Thm3_12_lipschitz",
    "Prop4_5", "Cor4_6", "Prop5_1", "Thm5_6", "Thm5_8", "Thm5_10",
)

R_TYPE = ("Prop4_5", "Cor4_6", "Thm5_10")

_MATCH_TOL = 1e-12


# ---------------------------------------------------------------------------
# scalar identities and inequalities


def identity_gap(t, lam):
    """Both sides of the rate identity and their difference.

    ``lhs = (1 - lam/(t+1))^2 - (1 - lam(2-lam)/(1+t^2))`` and
    ``rhs = 2 t lam (1 - lam - t^2) / ((1+t^2)(t+1)^2)``.
    """
    t = float(t)
    lam = float(lam)
    if t == -1.0:
        raise DomainError("t = -1 is outside the domain")
    lhs = (1.0 - lam / (t + 1.0)) ** 2 - (1.0 - lam * (2.0 - lam) / (1.0 + t * t))
    rhs = 2.0 * t * lam / ((1.0 + t * t) * (t + 1.0) ** 2) * (1.0 - lam - t * t)
    return lhs, rhs, lhs - rhs


def unit_relaxation_gap(t):
    """``(1 - 1/(1+t^2)) - (1 - 1/(t+1))^2``; nonnegative for ``t >= 0``."""
    t = float(t)
    if t < 0:
        raise DomainError("t must be nonnegative")
    return (1.0 - 1.0 / (1.0 + t * t)) - (1.0 - 1.0 / (t + 1.0)) ** 2


def small_relaxation_gap(t, lam):
    """``(1 - lam/(1+t^2)) - (1 - lam/(t+1))^2``; nonnegative when ``0 <= lam <= 1 - t^2``."""
    t = float(t)
    lam = float(lam)
    if t <= 0 or not 0.0 <= lam <= 1.0 - t * t:
        raise DomainError("requires t > 0 and 0 <= lam <= 1 - t^2")
    return (1.0 - lam / (1.0 + t * t)) - (1.0 - lam / (t + 1.0)) ** 2


def sharp_vs_crude_gap(lam, kappa, gamma):
    """Crude squared factor minus the sharp one; positive for ``lam`` in ]0,2[."""
    t = float(kappa) / float(gamma)
    crude = 1.0 - lam * (2.0 - lam) / (1.0 + t) ** 2
    return crude - rho_optimal_sq(lam, t)


def averaged_combination_bound(u, v, t, lam):
    """Bound on ``||(1-lam) u + lam v||^2`` when ``||v|| <= t ||u - v||``.

    Returns ``(lhs, rhs)`` with
    ``rhs = (1 - lam/(t+1))^2 ||u||^2 + lam (t^2 + lam - 1) ||sqrt(t)/(1+t) u - v/sqrt(t)||^2``.
    Equality holds exactly when ``||v|| = t ||u - v||``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    t = float(t)
    lam = float(lam)
    if u.shape != v.shape:
        raise ValueError("u and v must have the same shape")
    if not t > 0:
        raise RangeViolation("t must be positive")
    if not 0.0 <= lam <= 1.0:
        raise RangeViolation("lam must lie in [0, 1]")
    if math.hypot(*v) > t * math.hypot(*(u - v)) * (1.0 + 1e-12):
        raise HypothesisViolation("||v|| > t ||u - v||")
    lhs = float(np.sum(((1.0 - lam) * u + lam * v) ** 2))
    st = math.sqrt(t)
    w = (st / (1.0 + t)) * u - v / st
    rhs = (1.0 - lam / (t + 1.0)) ** 2 * float(np.sum(u * u)) + lam * (t * t + lam - 1.0) * float(np.sum(w * w))
    return lhs, rhs


# ---------------------------------------------------------------------------
# contraction factors


def _open_relaxation(lam):
    lam = float(lam)
    if not 0.0 < lam < 2.0:
        raise RangeViolation(f"lambda = {lam} must lie in ]0, 2[")
    return lam


def _positive(name, v):
    v = float(v)
    if not v > 0 or not math.isfinite(v):
        raise RangeViolation(f"{name} = {v} must be positive and finite")
    return v


def rho_subreg_upper(lam, kappa, gamma):
    """``sqrt(1 - lam (2 - lam) / (1 + kappa/gamma)^2)``, in ]0, 1[."""
    lam = _open_relaxation(lam)
    t = _positive("kappa", kappa) / _positive("gamma", gamma)
    return math.sqrt(1.0 - lam * (2.0 - lam) / (1.0 + t) ** 2)


def rho_optimal_sq(lam, t):
    """Sharp squared factor ``max{(1 - lam/(t+1))^2, 1 - lam(2-lam)/(1+t^2)}``.

    The max form is checked against the piecewise form (first branch iff
    ``lam <= 1 - t^2``) to 1e-12.
    """
    lam = _open_relaxation(lam)
    t = _positive("t", t)
    first = (1.0 - lam / (t + 1.0)) ** 2
    second = 1.0 - lam * (2.0 - lam) / (1.0 + t * t)
    value = max(first, second)
    piecewise = first if lam <= 1.0 - t * t else second
    if abs(value - piecewise) > _MATCH_TOL:
        raise AssertionError(f"max and piecewise forms disagree at lam={lam}, t={t}")
    return value


def rho_inexact(rho, eta, eps):
    """``(rho + eta eps) / (1 - eta eps)``; may be >= 1, which callers must detect."""
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        raise RangeViolation(f"rho = {rho} must lie in [0, 1[")
    if eta < 0 or eps < 0:
        raise RangeViolation("eta and eps must be nonnegative")
    q = float(eta) * float(eps)
    if q >= 1.0:
        raise PolicyViolation(f"eta * eps = {q} must be < 1")
    return (rho + q) / (1.0 - q)


def km_contraction(lam, alpha, gamma_sub):
    """``(beta, rho)`` for one averaged step with residual-map subregularity ``gamma_sub``.

    ``beta = lam (1/alpha - lam) / gamma_sub^2``; ``rho = 1 - beta`` when
    ``beta <= 1`` and ``1 / (1 + beta)`` otherwise.
    """
    lam = float(lam)
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise RangeViolation(f"alpha = {alpha} must lie in ]0, 1]")
    if not 0.0 <= lam <= 1.0 / alpha:
        raise RangeViolation(f"lambda = {lam} must lie in [0, 1/alpha]")
    g = _positive("gamma_sub", gamma_sub)
    beta = lam * (1.0 / alpha - lam) / (g * g)
    rho = 1.0 - beta if beta <= 1.0 else 1.0 / (1.0 + beta)
    return beta, rho


def dist_recursion_bound(rho_seq, slack_seq, d0_sq, k):
    """Unrolled recursion ``(prod_{i<=k} rho_i) d0^2 + sum_i (prod_{i<j<=k} rho_j) slack_i``.

    Evaluated by streaming ``b <- rho_i b + slack_i``, which equals the
    double sum with the empty product taken as 1.
    """
    k = int(k)
    if k < 0:
        raise RangeViolation("k must be >= 0")
    rho = np.asarray(rho_seq, dtype=float)[: k + 1]
    slack = np.asarray(slack_seq, dtype=float)[: k + 1]
    if rho.size < k + 1 or slack.size < k + 1:
        raise RangeViolation("sequences must be defined through index k")
    if np.any(rho < 0) or np.any(rho > 1) or np.any(slack < 0) or d0_sq < 0:
        raise RangeViolation("rho must lie in [0, 1]; slack and d0_sq must be nonnegative")
    b = float(d0_sq)
    for r, s in zip(rho, slack):
        b = r * b + s
    return b


def dist_recursion_envelope(rho_seq, slack_seq, d0_sq):
    """All partial bounds ``b_0, ..., b_{n-1}`` of :func:`dist_recursion_bound`."""
    rho = np.asarray(rho_seq, dtype=float)
    slack = np.asarray(slack_seq, dtype=float)
    out = np.empty(rho.size)
    b = float(d0_sq)
    for i, (r, s) in enumerate(zip(rho, slack)):
        b = r * b + s
        out[i] = b
    return out


# ---------------------------------------------------------------------------
# certificates


@dataclass
class RateCertificate:
    """Per-step bound sequence tied to one theorem.

    ``rho`` holds the exact-step factors and ``factor`` the effective ones
    (equal unless inexactness inflates them).  ``from_start`` means the bound
    must hold at every step rather than for ``k`` large enough.
    """

    theorem_id: str
    metric: str
    rho: list
    factor: list
    K: int = 0
    mu: Optional[float] = None
    hypotheses: dict = field(default_factory=dict)
    from_start: bool = False

    def __post_init__(self):
        if self.theorem_id not in THEOREM_IDS:
            raise ValueError(f"unknown theorem id {self.theorem_id!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        self.rho = [float(r) for r in self.rho]
        self.factor = [float(f) for f in self.factor]
        if any(not 0.0 <= r <= 1.0 for r in self.rho):
            raise RangeViolation("per-step rho values must lie in [0, 1]")
        if self.mu is not None and not self.mu < 1.0:
            raise NonContractive(f"mu = {self.mu} is not < 1")

    @property
    def kind(self):
        return "R" if self.theorem_id in R_TYPE else "Q"

    @property
    def steps(self):
        return len(self.rho)

    def to_json(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "metric": self.metric,
            "K": self.K,
            "mu": self.mu,
            "rho": self.rho,
            "factor": self.factor,
            "kind": self.kind,
            "from_start": self.from_start,
            "hypotheses": self.hypotheses,
        }


def _take(seq, n):
    if isinstance(seq, np.ndarray):
        seq = seq.tolist()
    return Seq(seq).take(n)


def _spec(seq):
    if isinstance(seq, np.ndarray):
        return seq.tolist()
    return Seq(seq).spec


def _inexact_factors(rho, eta, eps):
    q = eta * eps
    if np.any(q >= 1.0):
        raise PolicyViolation("eta_k * eps_k must be < 1 for every k")
    return (rho + q) / (1.0 - q)


def _mu(factor, K):
    tail = factor[K:]
    return float(np.max(tail)) if tail.size else None


def _check_mu(mu):
    if mu is not None and mu >= 1.0:
        raise NonContractive(f"uniform factor mu = {mu} is not < 1")
    return mu


def gppa_dist_certificate(kappa, c_seq, lam_seq, K):
    """Squared-distance certificate ``rho_k = 1 - lam_k (2 - lam_k) / (1 + kappa/c_k)^2``.

    ``K`` is the number of steps covered.  The reported supremum bound
    ``1 - inf lam (2 - sup lam) / (1 + kappa/inf c)^2`` is attached when the
    relaxations stay inside ]0, 2[.
    """
    kappa = _positive("kappa", kappa)
    lam = _take(lam_seq, K)
    c = _take(c_seq, K)
    if np.any((lam < 0) | (lam > 2)):
        raise RangeViolation("lambda_k must lie in [0, 2]")
    if np.any(c <= 0):
        raise RangeViolation("c_k must be positive")
    gamma = 1.0 + kappa / c
    rho = 1.0 - lam * (2.0 - lam) / gamma ** 2
    hyp = {"kappa": kappa, "c": _spec(c_seq), "lambda": _spec(lam_seq)}
    mu = None
    if K and lam.min() > 0 and lam.max() < 2:
        hyp["rho_sup_bound"] = 1.0 - lam.min() * (2.0 - lam.max()) / (1.0 + kappa / c.min()) ** 2
        mu = float(rho.max())
    return RateCertificate("Thm5_10", "dist_sq_to_set", rho, rho, 0, mu, hyp, from_start=True)


def km_dist_certificate(alpha_seq, lam_seq, gamma_sub_seq, K, exact=False):
    """Distance recursion for averaged maps: ``rho_k`` from :func:`km_contraction`.

    With ``exact=True`` the factor is ``1 - beta_k`` throughout and the
    certificate also carries the ``2 rho^{k/2} d(x_0, C)`` envelope.
    """
    alpha = _take(alpha_seq, K)
    lam = _take(lam_seq, K)
    g = _take(gamma_sub_seq, K)
    rho = []
    for a, l, gk in zip(alpha, lam, g):
        beta, r = km_contraction(l, a, gk)
        if exact:
            if beta > 1.0:
                raise RangeViolation(f"beta = {beta} > 1; 1 - beta would be negative")
            r = 1.0 - beta
        rho.append(r)
    rho = np.array(rho)
    hyp = {"alpha": _spec(alpha_seq), "lambda": _spec(lam_seq), "gamma_sub": _spec(gamma_sub_seq)}
    mu = float(rho.max()) if rho.size and rho.max() < 1.0 else None
    tid = "Cor4_6" if exact else "Prop4_5"
    return RateCertificate(tid, "dist_sq_to_set", rho, rho, 0, mu, hyp, from_start=True)


def gppa_qlinear_certificate(mode, const, c_seq, lam_seq, eta_seq, eps_seq, K, K_detected=0,
                             metric=None, theorem_id=None):
    """Sharp Q-linear certificate under subregularity or a Lipschitz inverse at 0.

    Parameters
    ----------
    mode : {"subreg", "lipschitz"}
        Which hypothesis supplies ``const`` (``kappa`` or ``alpha``).
    K : int
        Number of steps covered.
    K_detected : int
        Threshold from which the uniform factor ``mu`` is taken.
    metric : str, optional
        ``norm_to_point`` (default) or ``anchored_pj`` for non-singleton
        solution sets under subregularity.
    """
    if mode not in ("subreg", "lipschitz"):
        raise ValueError(f"unknown mode {mode!r}")
    const = _positive("kappa" if mode == "subreg" else "alpha", const)
    lam = _take(lam_seq, K)
    c = _take(c_seq, K)
    eta = _take(eta_seq, K)
    eps = _take(eps_seq, K)
    if np.any(c <= 0):
        raise RangeViolation("c_k must be positive")
    rho = np.array([math.sqrt(rho_optimal_sq(l, const / ck)) for l, ck in zip(lam, c)])
    factor = _inexact_factors(rho, eta, eps)
    mu = _check_mu(_mu(factor, K_detected))
    if theorem_id is None:
        theorem_id = "Thm5_6" if mode == "subreg" else "Thm5_8"
    if metric is None:
        metric = "norm_to_point"
    if mode == "lipschitz" and metric != "norm_to_point":
        raise RangeViolation("the Lipschitz-inverse bound is stated for a unique zero")
    hyp = {("kappa" if mode == "subreg" else "alpha"): const, "c": _spec(c_seq),
           "lambda": _spec(lam_seq), "eta": _spec(eta_seq), "eps": _spec(eps_seq)}
    return RateCertificate(theorem_id, metric, rho, factor, int(K_detected), mu, hyp)


def sharp_step_certificate(mode, const, c_seq, lam_seq, eta_seq, eps_seq, K, metric=None):
    """Single-step sharp bound; the same factors as :func:`gppa_qlinear_certificate`.

    Applies at every step whose resolvent point lies in the subregularity
    ball (or whose graph value lies in the Lipschitz ball), hence from the
    start on globally regular operators.
    """
    tid = "Thm3_12_subreg" if mode == "subreg" else "Thm3_12_lipschitz"
    cert = gppa_qlinear_certificate(mode, const, c_seq, lam_seq, eta_seq, eps_seq, K,
                                    metric=metric, theorem_id=tid)
    cert.from_start = True
    return cert


def subreg_step_certificate(kappa, c_seq, lam_seq, eta_seq, eps_seq, K):
    """Crude one-step bound toward ``P_zer(x_k)``: ``rho = rho_subreg_upper``, inflated by inexactness."""
    kappa = _positive("kappa", kappa)
    lam = _take(lam_seq, K)
    c = _take(c_seq, K)
    eta = _take(eta_seq, K)
    eps = _take(eps_seq, K)
    rho = np.array([rho_subreg_upper(l, kappa, ck) for l, ck in zip(lam, c)])
    factor = _inexact_factors(rho, eta, eps)
    hyp = {"kappa": kappa, "c": _spec(c_seq), "lambda": _spec(lam_seq),
           "eta": _spec(eta_seq), "eps": _spec(eps_seq)}
    mu = float(factor.max()) if factor.size and factor.max() < 1 else None
    return RateCertificate("Thm3_4", "anchored_px", rho, factor, 0, mu, hyp, from_start=True)


def sharp_exact_certificate(t_seq, lam_seq, K):
    """Exact-step bound ``||y - z|| <= sqrt(rho_optimal_sq(lam, t)) ||x - z||`` toward a fixed zero.

    ``t_k`` must satisfy ``||J x_k - z|| <= t_k ||x_k - J x_k||``.
    """
    lam = _take(lam_seq, K)
    t = _take(t_seq, K)
    rho = np.array([math.sqrt(rho_optimal_sq(l, tk)) for l, tk in zip(lam, t)])
    hyp = {"t": _spec(t_seq), "lambda": _spec(lam_seq)}
    mu = float(rho.max()) if rho.size else None
    return RateCertificate("Thm3_10", "norm_to_point", rho, rho, 0, mu, hyp, from_start=True)


def exact_unit_certificate(kappa, c_seq, K):
    """Unit-relaxation exact bound ``d(x_{k+1}) <= d(x_k) / sqrt(1 + c_k^2/kappa^2)`` from the start."""
    kappa = _positive("kappa", kappa)
    c = _take(c_seq, K)
    if np.any(c <= 0):
        raise RangeViolation("c_k must be positive")
    rho = 1.0 / np.sqrt(1.0 + c ** 2 / kappa ** 2)
    hyp = {"kappa": kappa, "c": _spec(c_seq), "lambda": 1.0}
    mu = float(rho.max()) if rho.size else None
    return RateCertificate("Prop5_1", "dist_to_set", rho, rho, 0, mu, hyp, from_start=True)


def inexact_step_certificate(beta_seq, eta_seq, eps_seq, K):
    """Generic inflation ``(beta_k + eta_k eps_k) / (1 - eta_k eps_k)`` of an exact factor ``beta_k``."""
    beta = _take(beta_seq, K)
    eta = _take(eta_seq, K)
    eps = _take(eps_seq, K)
    if np.any((beta < 0) | (beta > 1)):
        raise RangeViolation("beta_k must lie in [0, 1]")
    factor = _inexact_factors(beta, eta, eps)
    hyp = {"beta": _spec(beta_seq), "eta": _spec(eta_seq), "eps": _spec(eps_seq)}
    mu = float(factor.max()) if factor.size and factor.max() < 1 else None
    return RateCertificate("Lem2_4", "norm_to_point", beta, factor, 0, mu, hyp, from_start=True)


def _check_open_lambda(lam_seq, K, tid):
    lam = _take(lam_seq, K)
    if np.any((lam <= 0) | (lam >= 2)):
        raise RangeViolation(f"{tid} requires lambda_k in ]0, 2[")


def make_certificate(theorem_id, params: dict, schedule, K):
    """Build a certificate from a theorem id, hypothesis constants and a schedule.

    ``params`` supplies ``kappa``, ``alpha``, ``t``, ``beta``, ``gamma_sub``
    or ``K_detected`` as the theorem requires; sequences come from the
    schedule.  Relative-error levels default to 0 for other policies.
    """
    from .engines import RelativeError

    eps = schedule.error.eps.spec if isinstance(schedule.error, RelativeError) else 0.0
    lam, c, eta = schedule.lam.spec, schedule.c.spec, schedule.eta.spec
    p = dict(params)

    def need(name):
        if name not in p:
            raise KeyError(name)
        return p[name]

    if theorem_id in ("Thm3_4", "Thm3_12_subreg", "Thm3_12_lipschitz", "Thm3_10", "Thm5_6", "Thm5_8"):
        _check_open_lambda(lam, K, theorem_id)
    if theorem_id == "Thm5_10":
        return gppa_dist_certificate(need("kappa"), c, lam, K)
    if theorem_id == "Prop5_1":
        if np.any(_take(lam, K) != 1.0):
            raise RangeViolation("Prop5_1 requires lambda_k = 1")
        return exact_unit_certificate(need("kappa"), c, K)
    if theorem_id == "Thm5_6":
        return gppa_qlinear_certificate("subreg", need("kappa"), c, lam, eta, eps, K,
                                        p.get("K_detected", 0), metric=p.get("metric"))
    if theorem_id == "Thm5_8":
        return gppa_qlinear_certificate("lipschitz", need("alpha"), c, lam, eta, eps, K,
                                        p.get("K_detected", 0))
    if theorem_id == "Thm3_12_subreg":
        return sharp_step_certificate("subreg", need("kappa"), c, lam, eta, eps, K, metric=p.get("metric"))
    if theorem_id == "Thm3_12_lipschitz":
        return sharp_step_certificate("lipschitz", need("alpha"), c, lam, eta, eps, K)
    if theorem_id == "Thm3_4":
        return subreg_step_certificate(need("kappa"), c, lam, eta, eps, K)
    if theorem_id == "Thm3_10":
        return sharp_exact_certificate(need("t"), lam, K)
    if theorem_id == "Lem2_4":
        return inexact_step_certificate(need("beta"), eta, eps, K)
    if theorem_id in ("Prop4_5", "Cor4_6"):
        kappa = p.get("kappa")
        g = p.get("gamma_sub")
        if g is None:
            if kappa is None:
                raise KeyError("kappa")
            g = (1.0 + float(kappa) / _take(c, K)).tolist()
        return km_dist_certificate(p.get("alpha", 0.5), lam, g, K, exact=theorem_id == "Cor4_6")
    raise ValueError(f"unknown theorem id {theorem_id!r}")


# ---------------------------------------------------------------------------
# formula evaluation by id (CLI ``rates``)


def evaluate(theorem_id, params: dict):
    """Evaluate the headline formula for ``theorem_id`` at scalar parameters."""
    p = {k: float(v) for k, v in params.items()}

    def g(name):
        if name not in p:
            raise KeyError(name)
        return p[name]

    eta, eps = p.get("eta", 0.0), p.get("eps", 0.0)
    if theorem_id == "Lem2_4":
        return {"factor": rho_inexact(g("beta"), eta, eps)}
    if theorem_id == "Thm3_4":
        rho = rho_subreg_upper(g("lambda"), g("kappa"), g("gamma"))
        return {"rho": rho, "factor": rho_inexact(rho, eta, eps)}
    if theorem_id == "Thm3_10":
        sq = rho_optimal_sq(g("lambda"), g("t"))
        return {"rho_sq": sq, "rho": math.sqrt(sq)}
    if theorem_id in ("Thm3_12_subreg", "Thm5_6"):
        rho = math.sqrt(rho_optimal_sq(g("lambda"), g("kappa") / g("c" if "c" in p else "gamma")))
        return {"rho": rho, "factor": rho_inexact(rho, eta, eps)}
    if theorem_id in ("Thm3_12_lipschitz", "Thm5_8"):
        rho = math.sqrt(rho_optimal_sq(g("lambda"), g("alpha") / g("c" if "c" in p else "gamma")))
        return {"rho": rho, "factor": rho_inexact(rho, eta, eps)}
    if theorem_id == "Prop4_5":
        beta, rho = km_contraction(g("lambda"), g("alpha"), g("gamma_sub"))
        return {"beta": beta, "rho": rho}
    if theorem_id == "Cor4_6":
        beta, _ = km_contraction(g("lambda"), g("alpha"), g("gamma_sub"))
        return {"beta": beta, "rho": 1.0 - beta}
    if theorem_id == "Prop5_1":
        return {"rho": 1.0 / math.sqrt(1.0 + g("c") ** 2 / g("kappa") ** 2)}
    if theorem_id == "Thm5_10":
        lam = g("lambda")
        if not 0.0 <= lam <= 2.0:
            raise RangeViolation("lambda must lie in [0, 2]")
        return {"rho": 1.0 - lam * (2.0 - lam) / (1.0 + g("kappa") / _positive("c", g("c"))) ** 2}
    raise ValueError(f"unknown theorem id {theorem_id!r}")
