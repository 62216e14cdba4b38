"""
Trace analysis: one-step ratios, root rates, certificate verification and
summability witnesses.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engines import IterationTrace
from .errors import MetricMismatch, MetricUnavailable, TooShort
from .rates import RateCertificate, dist_recursion_envelope

RATIO_FLOOR = 1e-300
MIN_ENTRIES = 10
CAUCHY_TOL = 1e-10
RESIDUAL_TOL = 1e-8


# ---------------------------------------------------------------------------
# metrics


def metric_sequence(trace: IterationTrace, metric: str) -> np.ndarray:
    """Per-iterate metric values ``m_0..m_K`` for the sequence metrics."""
    if metric == "norm_to_point":
        if trace.zero_point is None:
            raise MetricUnavailable("norm_to_point needs a unique zero")
        return np.linalg.norm(trace.x - trace.zero_point, axis=1)
    if metric in ("dist_to_set", "dist_sq_to_set"):
        if trace.dist is None:
            raise MetricUnavailable(f"{metric} needs a zero-set description")
        return trace.dist if metric == "dist_to_set" else trace.dist ** 2
    if metric in ("anchored_px", "anchored_pj"):
        raise MetricUnavailable(f"{metric} is a per-step pair metric; use metric_pairs")
    raise MetricUnavailable(f"unknown metric {metric!r}")


def metric_pairs(trace: IterationTrace, metric: str):
    """``(after_k, before_k)`` for each step, measured against the metric's anchor.

    Sequence metrics give ``(m_{k+1}, m_k)``.  The anchored metrics measure
    both ``x_k`` and ``x_{k+1}`` against the projection of ``x_k``
    (``anchored_px``) or of ``J x_k`` (``anchored_pj``) onto ``zer A``.
    """
    if metric == "anchored_px":
        if trace.next_to_px is None:
            raise MetricUnavailable("anchored_px needs a zero-set description")
        return trace.next_to_px, trace.dist[:-1]
    if metric == "anchored_pj":
        if trace.next_to_pj is None:
            raise MetricUnavailable("anchored_pj needs a zero-set description")
        return trace.next_to_pj, trace.x_to_pj
    m = metric_sequence(trace, metric)
    return m[1:], m[:-1]


def q_ratios(trace, metric: str) -> np.ndarray:
    """One-step ratios ``m_{k+1} / m_k``; NaN where ``m_k < 1e-300``.

    ``trace`` may also be a plain sequence ``m_0..m_K``.
    """
    if isinstance(trace, IterationTrace):
        num, den = metric_pairs(trace, metric)
    else:
        m = np.asarray(trace, dtype=float)
        num, den = m[1:], m[:-1]
    out = np.full(num.shape, np.nan)
    ok = den >= RATIO_FLOOR
    out[ok] = num[ok] / den[ok]
    return out


def r_rate(trace, metric: str = "dist_to_set") -> float:
    """Max of ``m_k^{1/k}`` over the trailing half of the sequence.

    A conservative finite surrogate for ``limsup m_k^{1/k}``.  Returns 0 if
    the tail is identically zero.
    """
    if isinstance(trace, IterationTrace):
        m = metric_sequence(trace, metric)
    else:
        m = np.asarray(trace, dtype=float)
    if m.size < MIN_ENTRIES:
        raise TooShort(f"need at least {MIN_ENTRIES} entries, got {m.size}")
    start = max(1, m.size // 2)
    k = np.arange(start, m.size)
    tail = m[start:]
    if np.all(tail == 0):
        return 0.0
    with np.errstate(divide="ignore"):
        roots = np.where(tail > 0, np.exp(np.log(np.where(tail > 0, tail, 1.0)) / k), 0.0)
    return float(roots.max())


# ---------------------------------------------------------------------------
# certificate verification


@dataclass
class VerificationReport:
    """Per-step comparison of a trace against a certificate.

    ``overall`` is true iff no row at or after ``K_detected`` fails (and, for
    certificates that hold from the start, ``K_detected == 0``).
    """

    certificate_id: str
    metric: str
    per_k: list
    tolerance: float
    K_detected: Optional[int]
    first_violation: Optional[int]
    overall: bool
    mu: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "certificate_id": self.certificate_id,
            "metric": self.metric,
            "overall": "pass" if self.overall else "fail",
            "K_detected": self.K_detected,
            "first_violation": self.first_violation,
            "mu": self.mu,
            "tolerance": self.tolerance,
            "per_k": [{"k": k, "observed": o, "bound": b, "pass": p} for k, o, b, p in self.per_k],
            **self.extra,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "observed", "bound", "pass"])
        for k, o, b, p in self.per_k:
            w.writerow([k, format(o, ".17g"), format(b, ".17g"), "true" if p else "false"])
        return buf.getvalue()


def _rows(observed, bound, tol):
    ok = observed <= bound * (1.0 + tol) + tol
    return [(k, float(o), float(b), bool(p)) for k, (o, b, p) in enumerate(zip(observed, bound, ok))], ok


def _scan(ok):
    """``(K_detected, first_violation)``: first index from which every row passes."""
    bad = np.flatnonzero(~ok)
    if not bad.size:
        return 0, None
    last = int(bad[-1])
    return (None if last == ok.size - 1 else last + 1), int(bad[0])


def _persistent_start(ok):
    """Start of the violating run that reaches the last row."""
    i = ok.size - 1
    while i > 0 and not ok[i - 1]:
        i -= 1
    return i


def _expected_metric(cert):
    # each theorem fixes the quantity it bounds
    fixed = {"Prop5_1": ("dist_to_set",), "Thm3_4": ("anchored_px",),
             "Thm3_10": ("norm_to_point",), "Lem2_4": ("norm_to_point",),
             "Thm5_8": ("norm_to_point",), "Thm3_12_lipschitz": ("norm_to_point",),
             "Thm5_6": ("norm_to_point", "anchored_pj"),
             "Thm3_12_subreg": ("norm_to_point", "anchored_pj"),
             "Prop4_5": ("dist_sq_to_set",), "Cor4_6": ("dist_sq_to_set",),
             "Thm5_10": ("dist_sq_to_set",)}
    return fixed[cert.theorem_id]


def check_certificate(trace: IterationTrace, cert: RateCertificate, tol=1e-10,
                      envelope_tol=1e-9) -> VerificationReport:
    """Compare a trace with a certificate, row by row.

    A row passes when ``observed <= bound (1 + tol) + tol``.  Q-type rows
    compare ``m_{k+1}`` with ``factor_k m_k``; the first index from which all
    rows pass is reported as ``K_detected``.  R-type rows compare
    ``d^2_{k+1}`` with ``rho_k d^2_k + slack_k`` and additionally check the
    unrolled product bound and, on exact runs with ``sup rho < 1``, the
    envelope ``||x_k - xhat|| <= 2 rho^{k/2} d(x_0)`` with ``xhat`` the last
    iterate (tolerance ``envelope_tol``).
    """
    if cert.metric not in _expected_metric(cert):
        raise MetricMismatch(f"{cert.theorem_id} bounds {_expected_metric(cert)}, not {cert.metric}")
    try:
        after, before = metric_pairs(trace, cert.metric)
    except MetricUnavailable as exc:
        raise MetricMismatch(f"trace cannot supply {cert.metric}: {exc}") from None
    K = trace.K
    if cert.steps < K:
        raise MetricMismatch(f"certificate covers {cert.steps} steps, trace has {K}")
    factor = np.asarray(cert.factor[:K])
    rho = np.asarray(cert.rho[:K])

    if cert.kind == "Q":
        rows, ok = _rows(after, factor * before, tol)
        K_det, first = _scan(ok)
        if cert.from_start and K_det not in (0, None):
            overall = False
        else:
            overall = K_det is not None
        mu = float(factor[K_det:].max()) if K_det is not None and K_det < K else None
        if mu is not None and mu >= 1.0:
            overall = False
        extra = {}
        if K_det is None:
            extra["persistent_violation_from"] = _persistent_start(ok)
        if trace.zero_point is not None:
            # hypothesis J x_k -> xbar is only observed, never certified
            extra["terminal_resolvent_gap"] = float(np.linalg.norm(trace.j[-1] - trace.zero_point))
        return VerificationReport(cert.theorem_id, cert.metric, rows, tol, K_det, first, overall, mu, extra)

    slack = trace.err * (2.0 * trace.y_to_px + trace.err)
    d2 = trace.dist ** 2
    rows, ok = _rows(d2[1:], rho * d2[:-1] + slack, tol)
    unrolled = dist_recursion_envelope(rho, slack, d2[0])
    _, ok_prod = _rows(d2[1:], unrolled, tol)
    extra = {"product_pass": bool(ok_prod.all()),
             "product_first_violation": None if ok_prod.all() else int(np.flatnonzero(~ok_prod)[0])}
    overall = bool(ok.all() and ok_prod.all())
    rho_sup = float(rho.max()) if rho.size else None
    if trace.exact and rho_sup is not None and rho_sup < 1.0:
        xhat = trace.x[-1]
        gap = np.linalg.norm(trace.x - xhat, axis=1)
        env = 2.0 * rho_sup ** (np.arange(K + 1) / 2.0) * trace.dist[0]
        ok_env = gap <= env + envelope_tol
        extra["envelope_pass"] = bool(ok_env.all())
        extra["envelope_first_violation"] = None if ok_env.all() else int(np.flatnonzero(~ok_env)[0])
        extra["envelope_rho"] = rho_sup
        overall = overall and bool(ok_env.all())
    elif cert.theorem_id == "Cor4_6":
        extra["envelope_pass"] = False
        extra["envelope_note"] = "envelope needs an exact run with sup rho < 1"
        overall = False
    first = None if ok.all() else int(np.flatnonzero(~ok)[0])
    return VerificationReport(cert.theorem_id, cert.metric, rows, tol, 0 if overall else None,
                              first, overall, rho_sup, extra)


# ---------------------------------------------------------------------------
# summability


def summability_report(trace: IterationTrace) -> dict:
    """Partial sums behind the descent inequalities and their finite-sample Cauchy flags.

    A series is flagged ``cauchy`` when its trailing-half increment is below
    1e-10: a heuristic witness of summability, not a proof.
    """
    K = trace.K
    if K + 1 < MIN_ENTRIES:
        raise TooShort(f"need at least {MIN_ENTRIES} iterates, got {K + 1}")
    lam, alpha = trace.lam[:K], trace.alpha[:K]
    r = trace.residual[:K]
    weighted = np.cumsum(lam * (1.0 / alpha - lam) * r ** 2)
    res_sq = np.cumsum(r ** 2)
    step_sq = np.cumsum(trace.step ** 2)
    scaled = trace.residual / trace.c
    half = K // 2

    def series(s):
        inc = float(s[-1] - s[half - 1]) if half > 0 else float(s[-1])
        return {"partial_sums": s.tolist(), "total": float(s[-1]),
                "tail_increment": inc, "cauchy": inc < CAUCHY_TOL}

    return {
        "weighted_residual_sq": series(weighted),
        "residual_sq": series(res_sq),
        "step_sq": series(step_sq),
        "scaled_residual": scaled.tolist(),
        "terminal_scaled_residual": float(scaled[-1]),
        "residual_vanishing": bool(scaled[-1] < RESIDUAL_TOL),
    }


def summary(trace: IterationTrace) -> dict:
    """Compact description of a trace for reports."""
    out = {
        "K": trace.K,
        "dim": trace.dim,
        "x0": trace.x[0].tolist(),
        "x_final": trace.x[-1].tolist(),
        "residual_final": float(trace.residual[-1]),
        "step_final": float(trace.step[-1]),
        "err_total": float(trace.err.sum()),
        "exact": trace.exact,
    }
    if trace.dist is not None:
        out["dist_initial"] = float(trace.dist[0])
        out["dist_final"] = float(trace.dist[-1])
        out["dist_exact"] = trace.dist_exact
    return out
