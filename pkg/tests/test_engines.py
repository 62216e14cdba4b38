import io
import math

import numpy as np
import pytest

from gppalab.engines import (
    NoError,
    RelativeError,
    Schedule,
    Seq,
    SummableError,
    gppa_step,
    inject_relative_error,
    resolvent_family,
    run_gppa,
    run_km,
    write_trace_csv,
)
from gppalab.errors import DivergenceError, PolicyViolation, RangeViolation
from gppalab.zoo import make_operator


def test_seq_forms():
    assert Seq(0.5)(10) == 0.5
    assert [Seq([0.5, 1.5])(k) for k in range(4)] == [0.5, 1.5, 0.5, 1.5]
    assert Seq("harmonic-plus-one")(0) == 2.0
    assert Seq("harmonic-plus-one")(3) == 1.25
    assert Seq("geometric-half")(3) == 0.125
    with pytest.raises(ValueError):
        Seq("no-such-formula")
    assert Seq([1, 2]) == Seq([1.0, 2.0])


def test_schedule_validates_ranges():
    with pytest.raises(RangeViolation):
        Schedule(lam=2.5).coefficients(0)
    with pytest.raises(RangeViolation):
        Schedule(c=0.0).coefficients(0)
    with pytest.raises(RangeViolation):
        Schedule(eta=-1.0).coefficients(0)
    assert Schedule(lam=[0.0, 2.0]).coefficients(1) == (2.0, 1.0, 1.0)


def test_gppa_step_rotation():
    y, x1 = gppa_step(make_operator("rotation2"), [1.0, 0.0], 1.0, 1.0, 0.0, [0.0, 0.0])
    np.testing.assert_allclose(x1, [0.5, -0.5], atol=1e-16)
    np.testing.assert_array_equal(y, x1)


def test_gppa_step_zero_relaxation():
    x = np.array([0.3, -2.0])
    _, x1 = gppa_step(make_operator("rotation2"), x, 0.0, 1.0, 0.0, [5.0, 5.0])
    np.testing.assert_array_equal(x1, x)


def test_gppa_step_reflection():
    from gppalab.operators import make_linear

    y, x1 = gppa_step(make_linear([[1.0]]), [4.0], 2.0, 1.0, 0.0, [0.0])
    assert y[0] == 0.0 and x1[0] == 0.0


def test_gppa_step_adds_scaled_error():
    y, x1 = gppa_step(make_operator("abs"), [3.0], 1.0, 1.0, 0.5, [2.0])
    assert y[0] == 2.0 and x1[0] == 3.0


def test_inject_relative_error_length():
    rng = np.random.default_rng(0)
    x = np.array([1.0, 0.0])
    y = np.array([0.0, 0.0])
    e = inject_relative_error(rng, y, x, 1.0, 0.1)
    assert np.linalg.norm(e) == pytest.approx(1 / 11, rel=1e-15)
    x1 = y + e
    assert np.linalg.norm(e) <= 0.1 * np.linalg.norm(x - x1) * (1 + 1e-15)


def test_inject_relative_error_trivial_cases():
    rng = np.random.default_rng(0)
    assert np.all(inject_relative_error(rng, [1.0], [2.0], 1.0, 0.0) == 0)
    assert np.all(inject_relative_error(rng, [1.0], [1.0], 1.0, 0.3) == 0)


def test_inject_relative_error_policy():
    with pytest.raises(PolicyViolation):
        inject_relative_error(np.random.default_rng(0), [0.0], [1.0], 2.0, 0.5)


def test_run_gppa_rotation_contraction():
    tr = run_gppa(make_operator("rotation2"), Schedule(), [1.0, 0.0], 20)
    assert tr.dist[20] / tr.dist[0] == pytest.approx(2.0 ** -10, rel=1e-12)
    assert tr.x.shape == (21, 2)


def test_run_gppa_at_zero_is_constant():
    tr = run_gppa(make_operator("box:[0,1]x[0,1]"), Schedule(lam=1.5), [0.5, 0.2], 10)
    assert np.all(tr.residual == 0)
    # (1 - lam) x + lam x only equals x up to rounding
    np.testing.assert_allclose(tr.x, np.broadcast_to(tr.x[0], tr.x.shape), rtol=1e-15)


def test_run_gppa_soft_threshold_terminates():
    tr = run_gppa(make_operator("abs"), Schedule(), [3.0], 8)
    np.testing.assert_array_equal(tr.x[:, 0], [max(3 - k, 0) for k in range(9)])


def test_run_gppa_deterministic():
    s = Schedule(error=RelativeError(0.2), eta=0.5, seed=11)
    a = run_gppa(make_operator("rotation4:1.0"), s, [1.0, 2.0, 3.0, 4.0], 25)
    b = run_gppa(make_operator("rotation4:1.0"), s, [1.0, 2.0, 3.0, 4.0], 25)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.to_csv() == b.to_csv()
    c = run_gppa(make_operator("rotation4:1.0"), Schedule(error=RelativeError(0.2), eta=0.5, seed=12),
                 [1.0, 2.0, 3.0, 4.0], 25)
    assert not np.array_equal(a.x, c.x)


def test_summable_policy_error_norms():
    s = Schedule(eta=1.0, error=SummableError("geometric-half"), seed=3)
    tr = run_gppa(make_operator("rotation2"), s, [1.0, 0.0], 12)
    np.testing.assert_allclose(tr.err, 0.5 ** np.arange(12), rtol=1e-14)
    s = Schedule(eta=0.25, error=SummableError(1.0), seed=3)
    tr = run_gppa(make_operator("rotation2"), s, [1.0, 0.0], 5)
    np.testing.assert_allclose(tr.err, 0.25, rtol=1e-14)


def test_relative_policy_constraint_holds():
    s = Schedule(lam=[0.4, 1.7], c=[0.5, 2.0], eta=0.9, error=RelativeError([0.3, 0.7]), seed=5)
    tr = run_gppa(make_operator("abs:3"), s, [3.0, -1.0, 0.5], 30)
    lhs = np.linalg.norm(tr.e, axis=1)
    # the measured step carries absolute rounding of order u (||x_k|| + ||x_{k+1}||)
    xn = np.linalg.norm(tr.x, axis=1)
    rounding = 4 * np.finfo(float).eps * (xn[:-1] + xn[1:])
    assert np.all(lhs <= tr.eps * (tr.step + rounding) * (1 + 1e-12))


def test_reconstruction_identity():
    s = Schedule(lam=[0.3, 1.8], c=2.0, eta=0.7, error=SummableError(0.1), seed=1)
    tr = run_gppa(make_operator("deadzone"), s, [4.0], 15)
    K = tr.K
    rebuilt = (1 - tr.lam[:K, None]) * tr.x[:-1] + tr.lam[:K, None] * tr.j[:-1] + tr.eta[:K, None] * tr.e
    np.testing.assert_array_equal(rebuilt, tr.x[1:])


def test_divergence_guard():
    s = Schedule(eta=1.0, error=SummableError(1e13))
    with pytest.raises(DivergenceError):
        run_gppa(make_operator("zero"), s, [0.0], 3)


def test_run_km_halving_map():
    tr = run_km(lambda k: (0.5, lambda v: v / 2), Schedule(), [8.0], 3)
    assert tr.x[3, 0] == 1.0


def test_run_km_zero_relaxation_constant():
    tr = run_km(lambda k: (0.5, lambda v: v / 2), Schedule(lam=0.0), [8.0], 5)
    assert np.all(tr.x == 8.0)


def test_run_km_range_violation():
    with pytest.raises(RangeViolation):
        run_km(lambda k: (0.75, lambda v: v / 2), Schedule(lam=1.5), [8.0], 3)


def test_run_km_matches_run_gppa():
    op = make_operator("rotation2")
    for sched in (Schedule(), Schedule(lam=[0.5, 1.5], c="harmonic-plus-one", eta=0.5,
                                       error=RelativeError(0.3), seed=9)):
        a = run_gppa(op, sched, [1.0, -2.0], 40)
        b = run_km(resolvent_family(op, sched.c), sched, [1.0, -2.0], 40, op.project_zero_set)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.j, b.j)
        np.testing.assert_array_equal(a.dist, b.dist)


def test_trace_csv_layout():
    tr = run_gppa(make_operator("rotation2"), Schedule(), [1.0, 0.0], 4)
    buf = io.StringIO()
    write_trace_csv(tr, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "k,lambda,c,eta,err_norm,residual,step,dist,dist_exact"
    assert len(lines) == 6
    assert lines[1].split(",")[5] == "0.70710678118654757"
    last = lines[-1].split(",")
    assert last[4] == "" and last[6] == ""
    assert last[8] == "true"


def test_trace_csv_without_zero_set():
    tr = run_km(lambda k: (0.5, lambda v: v / 2), Schedule(), [8.0], 3)
    row = tr.to_csv().splitlines()[1].split(",")
    assert row[7] == "" and row[8] == "false"


def test_fejer_descent_exact():
    for ident in ("rotation2", "deadzone", "kernel2", "sqrt"):
        op = make_operator(ident)
        tr = run_gppa(op, Schedule(lam=[0.3, 1.9]), np.full(op.dim, 3.0), 40)
        assert np.all(np.diff(tr.dist) <= 1e-12 * (1 + tr.dist[:-1]))


def test_no_error_policy_is_exact():
    tr = run_gppa(make_operator("abs"), Schedule(error=NoError()), [2.0], 5)
    assert tr.exact
    assert math.isnan(tr.eps[0])
