import json

import numpy as np
import pytest

from gppalab import rates
from gppalab.diagnostics import (
    check_certificate,
    q_ratios,
    r_rate,
    summability_report,
    summary,
)
from gppalab.engines import RelativeError, Schedule, SummableError, run_gppa
from gppalab.errors import MetricMismatch, MetricUnavailable, TooShort
from gppalab.rates import RateCertificate
from gppalab.zoo import make_operator


def rotation_run(K=30, c=1.0, lam=1.0):
    return run_gppa(make_operator("rotation2"), Schedule(lam=lam, c=c), [1.0, 0.0], K)


def test_q_ratios_rotation():
    q = q_ratios(rotation_run(), "dist_to_set")
    np.testing.assert_allclose(q, 2 ** -0.5, atol=1e-10)
    q = q_ratios(rotation_run(), "dist_sq_to_set")
    np.testing.assert_allclose(q, 0.5, atol=1e-10)
    q = q_ratios(rotation_run(), "norm_to_point")
    np.testing.assert_allclose(q, 2 ** -0.5, atol=1e-10)


def test_q_ratios_finite_termination_sentinel():
    tr = run_gppa(make_operator("abs"), Schedule(), [3.0], 6)
    q = q_ratios(tr, "dist_to_set")
    np.testing.assert_allclose(q[:3], [2 / 3, 1 / 2, 0.0])
    assert np.all(np.isnan(q[3:]))


def test_q_ratios_synthetic():
    np.testing.assert_array_equal(q_ratios(2.0 ** -np.arange(20), "dist_to_set"), 0.5)


def test_q_ratios_missing_metric():
    tr = run_gppa(make_operator("box:[0,1]x[0,1]"), Schedule(), [2.0, 2.0], 3)
    with pytest.raises(MetricUnavailable):
        q_ratios(tr, "norm_to_point")


def test_r_rate_examples():
    assert r_rate(2.0 ** -np.arange(30)) == pytest.approx(0.5, abs=1e-6)
    assert r_rate(rotation_run(40)) == pytest.approx(2 ** -0.5, rel=0.02)
    assert r_rate(np.full(30, 3.0)) > 1.0
    assert r_rate(np.full(400, 0.7)) > 0.99
    assert r_rate(np.r_[1.0, np.zeros(20)]) == 0.0
    with pytest.raises(TooShort):
        r_rate(np.ones(5))


def test_check_tight_certificate():
    tr = rotation_run()
    rep = check_certificate(tr, rates.exact_unit_certificate(1.0, 1.0, 30))
    assert rep.overall and rep.K_detected == 0 and rep.first_violation is None
    obs = np.array([row[1] for row in rep.per_k])
    bnd = np.array([row[2] for row in rep.per_k])
    np.testing.assert_allclose(obs, bnd, rtol=1e-10)


def test_check_false_certificate_fails_at_start():
    tr = rotation_run()
    cert = RateCertificate("Prop5_1", "dist_to_set", [0.5] * 30, [0.5] * 30, 0, 0.5, from_start=True)
    rep = check_certificate(tr, cert)
    assert not rep.overall
    assert rep.first_violation == 0
    assert rep.extra["persistent_violation_from"] == 0


def test_check_distance_recursion_on_box():
    tr = run_gppa(make_operator("box:[0,1]x[0,1]"), Schedule(), [3.0, -2.0], 50)
    rep = check_certificate(tr, rates.gppa_dist_certificate(1.0, 1.0, 1.0, 50), 1e-12)
    assert rep.overall
    assert rep.extra["product_pass"] and rep.extra["envelope_pass"]


def test_check_distance_recursion_inexact():
    sched = Schedule(lam=[0.5, 1.5], c=2.0, eta=0.5, error=SummableError("geometric-half"), seed=4)
    tr = run_gppa(make_operator("abs:3"), sched, [4.0, -1.0, 2.0], 60)
    rep = check_certificate(tr, rates.gppa_dist_certificate(1.0, 2.0, [0.5, 1.5], 60), 1e-12)
    assert rep.overall
    assert "envelope_pass" not in rep.extra


def test_check_metric_mismatch():
    tr = rotation_run()
    cert = RateCertificate("Prop5_1", "norm_to_point", [0.8] * 30, [0.8] * 30)
    with pytest.raises(MetricMismatch):
        check_certificate(tr, cert)
    tr = run_gppa(make_operator("box:[0,1]x[0,1]"), Schedule(), [2.0, 2.0], 5)
    cert = rates.gppa_qlinear_certificate("subreg", 1.0, 1.0, 1.0, 0.0, 0.0, 5)
    with pytest.raises(MetricMismatch):
        check_certificate(tr, cert)


def test_check_short_certificate():
    with pytest.raises(MetricMismatch):
        check_certificate(rotation_run(30), rates.exact_unit_certificate(1.0, 1.0, 10))


def test_q_certificate_detects_threshold():
    sched = Schedule(eta=1.0, error=RelativeError(0.05), seed=3)
    tr = run_gppa(make_operator("abs"), sched, [3.0], 100)
    cert = rates.gppa_qlinear_certificate("lipschitz", 0.01, 1.0, 1.0, 1.0, 0.05, 100)
    rep = check_certificate(tr, cert)
    assert rep.overall
    assert rep.K_detected is not None and rep.K_detected <= 5
    assert "terminal_resolvent_gap" in rep.extra


def test_report_serialization():
    rep = check_certificate(rotation_run(5), rates.exact_unit_certificate(1.0, 1.0, 5))
    doc = json.loads(json.dumps(rep.to_json()))
    assert doc["overall"] == "pass" and len(doc["per_k"]) == 5
    lines = rep.to_csv().splitlines()
    assert lines[0] == "k,observed,bound,pass"
    assert len(lines) == 6 and lines[1].endswith(",true")


def test_summability_rotation_unit_relaxation():
    rep = summability_report(rotation_run(60))
    assert rep["residual_vanishing"]
    assert rep["terminal_scaled_residual"] < 1e-8
    # trailing-half increment at K = 60 is about 2^-30, above the 1e-10 threshold
    assert not rep["residual_sq"]["cauchy"]
    rep = summability_report(rotation_run(80))
    for key in ("weighted_residual_sq", "residual_sq", "step_sq"):
        assert rep[key]["cauchy"]
    # residuals r_k = 2^{-1/2} 2^{-k/2}: sum of r_k^2 is 1
    assert rep["residual_sq"]["total"] == pytest.approx(1.0, rel=1e-12)


def test_summability_rotation_reflection():
    rep = summability_report(rotation_run(40, lam=2.0))
    assert rep["weighted_residual_sq"]["total"] == 0.0
    assert not rep["residual_vanishing"]
    assert not rep["residual_sq"]["cauchy"]
    # the reflection is an isometry, so r_k = ||x_k|| / sqrt(2) = 1 / sqrt(2)
    np.testing.assert_allclose(rep["scaled_residual"], 2 ** -0.5, rtol=1e-12)


def test_summability_constant_at_zero():
    tr = run_gppa(make_operator("box:[0,1]x[0,1]"), Schedule(), [0.5, 0.5], 20)
    rep = summability_report(tr)
    for key in ("weighted_residual_sq", "residual_sq", "step_sq"):
        assert rep[key]["total"] == 0.0
    assert rep["residual_vanishing"]


def test_summability_too_short():
    with pytest.raises(TooShort):
        summability_report(rotation_run(3))


def test_summary_fields():
    s = summary(rotation_run(10))
    assert s["K"] == 10 and s["exact"]
    assert s["dist_final"] == pytest.approx(2 ** -5)
