"""
Batch property checks grouped into families; each family reports one
pass/fail line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diagnostics, rates
from .engines import RelativeError, Schedule, SummableError, run_gppa
from .errors import GPPAError
from .subregularity import (
    estimate_kappa,
    residual_map_ratio_check,
    resolvent_distance_contraction_check,
)
from .zoo import ZOO_MEMBERS, make_operator


@dataclass
class FamilyResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _identities(rng, extra):
    n = 10_000
    t = rng.uniform(-5, 5, n)
    t[np.isclose(t, -1.0, atol=1e-3)] = 0.5
    lam = rng.uniform(-2, 3, n)
    bad = 0
    for ti, li in zip(t, lam):
        lhs, _, gap = rates.identity_gap(ti, li)
        bad += abs(gap) > 1e-12 * (1 + abs(lhs))
    ts = rng.uniform(0, 50, n)
    bad_unit = sum(rates.unit_relaxation_gap(x) < -1e-12 for x in ts)
    t2 = rng.uniform(1e-6, 1 - 1e-6, n)
    l2 = rng.uniform(0, 1, n) * (1 - t2 ** 2)
    bad_small = sum(rates.small_relaxation_gap(a, b) < -1e-12 for a, b in zip(t2, l2))
    ok = bad == 0 and bad_unit == 0 and bad_small == 0
    return ok, f"identity {bad}, unit-relaxation {bad_unit}, small-relaxation {bad_small} violations"


def _inequalities(rng, extra):
    n = 2000
    bad_forms = bad_cmp = 0
    for _ in range(n):
        lam = rng.uniform(1e-6, 2 - 1e-6)
        t = rng.uniform(1e-3, 5)
        try:
            rates.rho_optimal_sq(lam, t)
        except AssertionError:
            bad_forms += 1
        kappa, gamma = rng.uniform(1e-2, 10, 2)
        bad_cmp += rates.sharp_vs_crude_gap(lam, kappa, gamma) <= 0
    bad_bound = bad_eq = 0
    for _ in range(n):
        d = int(rng.integers(1, 5))
        t = rng.uniform(0.05, 3)
        lam = rng.uniform(0, 1)
        v = rng.standard_normal(d)
        u = v + (np.linalg.norm(v) / t) * _unit(rng, d) * rng.uniform(1, 3)
        lhs, rhs = rates.averaged_combination_bound(u, v, t, lam)
        bad_bound += lhs > rhs + 1e-9
        u = v + (np.linalg.norm(v) / t) * _unit(rng, d)
        lhs, rhs = rates.averaged_combination_bound(u, v, t, lam)
        bad_eq += abs(lhs - rhs) > 1e-9
    ok = not (bad_forms or bad_cmp or bad_bound or bad_eq)
    return ok, (f"forms {bad_forms}, sharp<crude {bad_cmp}, combination bound {bad_bound}, "
                f"equality {bad_eq} violations")


def _unit(rng, d):
    g = rng.standard_normal(d)
    return g / np.linalg.norm(g)


def _resolvent(rng, extra):
    ops = [make_operator(z) for z in ZOO_MEMBERS]
    if extra is not None:
        ops.append(make_operator(f"linear:{extra}", check_monotone=False))
    failures = []
    for op in ops:
        try:
            for _ in range(200):
                gamma = 10 ** rng.uniform(-2, 2)
                x, y = rng.standard_normal((2, op.dim)) * 3
                jx, jy = op.resolve(gamma, x), op.resolve(gamma, y)
                d = jx - jy
                if d @ d > d @ (x - y) + 1e-10 * (1 + np.abs(x - y).sum()):
                    raise AssertionError("firm nonexpansiveness")
            if op.zero_set is not None and op.zero_set.exact:
                p = op.project_zero_set(rng.standard_normal(op.dim)).point
                if np.linalg.norm(op.resolve(1.0, p) - p) > 1e-10:
                    raise AssertionError("zero is not fixed")
        except (AssertionError, GPPAError) as exc:
            failures.append(f"{op.name} ({exc})")
    return not failures, ("all operators firmly nonexpansive" if not failures
                          else "failed: " + ", ".join(failures))


def _tight_rates(rng, extra):
    op = make_operator("rotation2")
    worst = 0.0
    for c in (1.0, 2.0, 0.5):
        tr = run_gppa(op, Schedule(c=c), [1.0, 0.0], 30)
        q = diagnostics.q_ratios(tr, "dist_to_set")
        worst = max(worst, float(np.max(np.abs(q - 1 / math.sqrt(1 + c * c)))))
        if not diagnostics.check_certificate(tr, rates.exact_unit_certificate(1.0, c, 30)).overall:
            return False, f"unit-relaxation certificate failed at c={c}"
    chk = resolvent_distance_contraction_check(op, 1.0, math.inf, 1.0, [0.0, 0.0], 200, 1)
    ok = worst <= 1e-10 and chk.passed and abs(chk.worst_ratio - chk.bound) < 1e-10
    return ok, f"max ratio deviation {worst:.2e}; resolvent distance ratio {chk.worst_ratio:.12f}"


def _recursion(rng, extra):
    rho = np.full(61, 0.5)
    slack = 0.5 ** np.arange(61)
    worst = 0.0
    for k in range(61):
        brute = sum(np.prod(rho[i + 1:k + 1]) * slack[i] for i in range(k + 1))
        stream = rates.dist_recursion_bound(rho, slack, 0.0, k)
        worst = max(worst, abs(brute - stream), abs(stream - (k + 1) * 0.5 ** k))
    op = make_operator("box:[0,1]x[0,1]")
    tr = run_gppa(op, Schedule(), [3.0, -2.0], 50)
    rep = diagnostics.check_certificate(tr, rates.gppa_dist_certificate(1.0, 1.0, 1.0, 50), 1e-12)
    tr2 = run_gppa(op, Schedule(lam=[0.5, 1.5], error=SummableError("geometric-half"), seed=2),
                   [3.0, -2.0], 50)
    rep2 = diagnostics.check_certificate(tr2, rates.gppa_dist_certificate(1.0, 1.0, [0.5, 1.5], 50), 1e-12)
    ok = worst <= 1e-12 and rep.overall and rep2.overall
    return ok, f"series deviation {worst:.2e}; exact {rep.overall}, inexact {rep2.overall}"


def _subregularity(rng, extra):
    msgs = []
    e = estimate_kappa(make_operator("identity"), [0.0], 1.0, 1000, 0)
    if abs(e.kappa_hat - 1) > 1e-12:
        msgs.append("identity")
    e = estimate_kappa(make_operator("scaled2"), [0.0], 1.0, 1000, 0)
    if abs(e.kappa_hat - 0.5) > 1e-9:
        msgs.append("scaled2")
    if not estimate_kappa(make_operator("cubic"), [0.0], 0.1, 1000, 0).divergent:
        msgs.append("cubic not flagged")
    for z in ZOO_MEMBERS:
        op = make_operator(z)
        if op.lipschitz_meta is not None:
            lm = op.lipschitz_meta
            center = op.zero_set.project(np.zeros(op.dim))
            est = estimate_kappa(op, center, lm.alpha * lm.tau, 500, 0)
            if est.divergent or est.kappa_hat > lm.alpha + 1e-9:
                msgs.append(f"{z} kappa_hat")
        if op.subreg_meta is not None:
            sm = op.subreg_meta
            for gamma in (0.5, 1.0, 4.0):
                if not residual_map_ratio_check(op, sm.kappa, sm.delta, gamma, sm.center, 200, 0).passed:
                    msgs.append(f"{z} residual map")
    return not msgs, "all chains hold" if not msgs else "failed: " + ", ".join(msgs)


def _fejer(rng, extra):
    bad = []
    for z in ZOO_MEMBERS:
        op = make_operator(z)
        sched = Schedule(lam=[0.5, 1.9, 1.0], c=[1.0, 0.3, 3.0], eta=0.5,
                         error=RelativeError(0.2), seed=int(rng.integers(2 ** 32)))
        x0 = rng.standard_normal(op.dim) * 2
        tr = run_gppa(op, sched, x0, 40)
        K = tr.K
        recon = tr.x[1:] - ((1 - tr.lam[:K, None]) * tr.x[:-1] + tr.lam[:K, None] * tr.j[:-1]
                            + tr.eta[:K, None] * tr.e)
        if np.abs(recon).max() > 1e-14 * max(1.0, np.abs(tr.x).max()):
            bad.append(f"{z} reconstruction")
        # the measured step carries absolute rounding of order u (||x_k|| + ||x_{k+1}||)
        xn = np.linalg.norm(tr.x, axis=1)
        rounding = 4 * np.finfo(float).eps * (xn[:-1] + xn[1:])
        rel = np.linalg.norm(tr.e, axis=1) <= tr.eps * (tr.step + rounding) * (1 + 1e-12)
        if not rel.all():
            bad.append(f"{z} relative error")
        if tr.zero_point is not None:
            xb = tr.zero_point
            a = np.linalg.norm(tr.x[:-1] - xb, axis=1) ** 2
            b = np.linalg.norm(tr.x[1:] - xb, axis=1) ** 2
            ne = np.linalg.norm(tr.e, axis=1) * tr.eta[:K]
            rhs = a - tr.lam[:K] * (2 - tr.lam[:K]) * tr.residual[:K] ** 2 \
                + ne * (2 * np.linalg.norm(tr.y - xb, axis=1) + ne)
            if np.any(b > rhs + 1e-10 * (1 + a)):
                bad.append(f"{z} inexact descent")
    return not bad, "descent, reconstruction and error bounds hold" if not bad else "failed: " + ", ".join(bad)


def _convergence(rng, extra):
    bad = []
    for z in ZOO_MEMBERS:
        op = make_operator(z)
        sched = Schedule(lam=[0.5, 1.5], c="harmonic-plus-one", eta=1.0,
                         error=SummableError("geometric-half"), seed=7)
        tr = run_gppa(op, sched, np.full(op.dim, 2.0), 500)
        if tr.residual[-1] > 1e-8 or tr.step[-1] > 1e-8:
            bad.append(z)
    return not bad, "all zoo runs converge" if not bad else "did not converge: " + ", ".join(bad)


FAMILIES = {
    "identities": _identities,
    "inequalities": _inequalities,
    "resolvent": _resolvent,
    "tight-rates": _tight_rates,
    "recursion": _recursion,
    "subregularity": _subregularity,
    "fejer": _fejer,
    "convergence": _convergence,
}


def verify_suite(seed=0, only=None, matrix=None, echo=print):
    """Run property families; returns the list of :class:`FamilyResult`.

    ``matrix`` adds a file-loaded matrix (without the monotonicity check) to
    the resolvent family, to exercise detection of bad inputs.
    """
    names = list(FAMILIES) if not only else list(only)
    for n in names:
        if n not in FAMILIES:
            raise ValueError(f"unknown family {n!r}; known: {', '.join(FAMILIES)}")
    results = []
    for i, name in enumerate(names):
        rng = np.random.default_rng([seed, i])
        try:
            ok, detail = FAMILIES[name](rng, matrix)
        except GPPAError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = FamilyResult(name, bool(ok), detail)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
