import math

import numpy as np
import pytest

from gppalab.errors import NotAZero, NoZeroSetInfo, RangeViolation, ZeroSetNotSingleton
from gppalab.operators import make_linear, with_reference_zero_set
from gppalab.subregularity import (
    equivalence_probe,
    estimate_kappa,
    lipschitz_to_subreg,
    residual_map_ratio_check,
    resolvent_distance_contraction_check,
    resolvent_residual_subreg,
    sample_ball,
    sampled_kappa,
    verify_inverse_lipschitz,
)
from gppalab.zoo import ZOO_MEMBERS, make_operator


def test_estimate_identity():
    est = estimate_kappa(make_operator("identity"), [0.0], 1.0, 1000, seed=0)
    assert est.kappa_hat == pytest.approx(1.0, abs=1e-12)
    assert not est.divergent


def test_estimate_scaled_linear():
    est = estimate_kappa(make_linear([[2.0]]), [0.0], 1.0, 1000, seed=0)
    assert est.kappa_hat == pytest.approx(0.5, abs=1e-9)


def test_estimate_cubic_diverges():
    est = estimate_kappa(make_operator("cubic"), [0.0], 0.1, 1000, seed=0)
    assert est.divergent and est.kappa_hat is None
    radii = [r for r, _ in est.ratio_trend]
    sups = [s for _, s in est.ratio_trend]
    np.testing.assert_allclose(radii, [0.1, 0.05, 0.025, 0.0125])
    # |x| / |x|^3 on spheres of radius r is exactly r^-2
    np.testing.assert_allclose(sups, [r ** -2 for r in radii], rtol=1e-12)
    assert sups[0] >= 100 * (1 - 1e-12)
    assert est.to_json()["kappa_hat"] == "divergent"


def test_estimate_witness_attains_sup():
    op = make_operator("scaled2")
    est = estimate_kappa(op, [0.0], 1.0, 200, seed=3)
    d = op.project_zero_set(est.worst_witness).dist
    assert d / op.min_norm_value(est.worst_witness) == est.kappa_hat


def test_estimate_requires_zero():
    with pytest.raises(NotAZero):
        estimate_kappa(make_operator("identity"), [0.5], 1.0, 10)


def test_estimate_requires_exact_projector():
    op = with_reference_zero_set(make_operator("deadzone"), start=[5.0])
    with pytest.raises(NoZeroSetInfo):
        estimate_kappa(op, [1.0], 0.5, 10)


def test_estimate_rejects_infinite_radius():
    with pytest.raises(RangeViolation):
        estimate_kappa(make_operator("identity"), [0.0], math.inf, 10)


def test_estimate_box_interior_is_zero():
    est = estimate_kappa(make_operator("box:[0,1]x[0,1]"), [0.5, 0.5], 0.25, 300)
    assert est.kappa_hat == 0.0 and not est.divergent


def test_kappa_monotone_under_nested_shrinkage():
    rng = np.random.default_rng(8)
    for ident in ("abs:3", "deadzone", "quad:0.5", "sqrt", "rotation4:1.0"):
        op = make_operator(ident)
        center = op.project_zero_set(np.zeros(op.dim)).point
        pts = sample_ball(rng, center, 2.0, 500)
        prev = math.inf
        for delta in (2.0, 1.0, 0.5, 0.1):
            inside = pts[np.linalg.norm(pts - center, axis=1) <= delta]
            k, _, div = sampled_kappa(op, inside, center)
            assert not div
            assert k <= prev + 1e-12
            prev = k


def test_lipschitz_to_subreg():
    assert lipschitz_to_subreg(2, 0.5) == (2.0, 1.0)
    assert lipschitz_to_subreg(1, 1) == (1.0, 1.0)
    k, d = lipschitz_to_subreg(0.01, 10)
    assert k == 0.01 and d == pytest.approx(0.1, rel=1e-15)
    with pytest.raises(RangeViolation):
        lipschitz_to_subreg(0, 1)


def test_resolvent_residual_subreg():
    assert resolvent_residual_subreg(1, 1) == 2.0
    assert resolvent_residual_subreg(1e-300, 3.0) == 1.0
    assert resolvent_residual_subreg(2, 0.5) == 5.0
    with pytest.raises(RangeViolation):
        resolvent_residual_subreg(1, 0)


def test_verify_inverse_lipschitz_abs():
    res = verify_inverse_lipschitz(make_operator("abs"), 0.01, 0.5, 2000, seed=0)
    assert res.passed and res.checked > 0


def test_verify_inverse_lipschitz_identity():
    op = make_operator("identity")
    assert verify_inverse_lipschitz(op, 1.0, 1.0, 2000, seed=0).passed
    res = verify_inverse_lipschitz(op, 0.5, 1.0, 2000, seed=0)
    assert not res.passed
    z, w = res.witness
    np.testing.assert_allclose(z, w, rtol=1e-12)


def test_verify_inverse_lipschitz_needs_singleton():
    with pytest.raises(ZeroSetNotSingleton):
        verify_inverse_lipschitz(make_operator("box:[0,1]x[0,1]"), 1.0, 1.0, 10)


def test_contraction_check_rotation_tight():
    res = resolvent_distance_contraction_check(make_operator("rotation2"), 1.0, math.inf, 1.0,
                                               [0.0, 0.0], 300, seed=0)
    assert res.passed
    assert res.worst_ratio == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert res.bound == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_contraction_check_identity_slack():
    res = resolvent_distance_contraction_check(make_operator("identity"), 1.0, math.inf, 1.0,
                                               [0.0], 300, seed=0)
    assert res.passed
    assert res.worst_ratio == pytest.approx(0.5, abs=1e-15)


def test_contraction_check_on_zero_set():
    op = make_operator("box:[0,1]x[0,1]")
    res = resolvent_distance_contraction_check(op, 1.0, 0.2, 1.0, [0.5, 0.5], 100, seed=0)
    assert res.passed and res.worst_ratio == 0.0


def test_residual_map_chain_for_zoo():
    for ident in ZOO_MEMBERS:
        op = make_operator(ident)
        sm = op.subreg_meta
        if sm is None:
            continue
        for gamma in (0.25, 1.0, 4.0):
            res = residual_map_ratio_check(op, sm.kappa, sm.delta, gamma, sm.center, 300, seed=1)
            assert res.passed, (ident, gamma, res.worst_ratio, res.bound)
            assert res.worst_ratio <= resolvent_residual_subreg(sm.kappa, gamma) + 1e-9


def test_lipschitz_chain_for_zoo():
    for ident in ZOO_MEMBERS:
        op = make_operator(ident)
        lm = op.lipschitz_meta
        if lm is None:
            continue
        kappa, delta = lipschitz_to_subreg(lm.alpha, lm.tau)
        center = op.zero_set.project(np.zeros(op.dim))
        est = estimate_kappa(op, center, delta, 500, seed=2)
        assert not est.divergent, ident
        assert est.kappa_hat <= kappa + 1e-9, ident


def test_scalar_inverse_lipschitz_implies_subreg():
    # only the direction from Lipschitz-at-0 to subregularity is asserted
    for ident in ZOO_MEMBERS:
        op = make_operator(ident)
        lm = op.lipschitz_meta
        if lm is None or op.dim != 1:
            continue
        if verify_inverse_lipschitz(op, lm.alpha, lm.tau, 1000, seed=4).passed:
            est = estimate_kappa(op, op.zero_set.project(np.zeros(1)), lm.alpha * lm.tau, 500, seed=4)
            assert est.kappa_hat is not None and est.kappa_hat <= lm.alpha + 1e-9


def test_equivalence_probe_is_labelled():
    out = equivalence_probe(make_operator("abs"), 0.01, 0.5, 200)
    assert out["experimental"] is True
    assert out["subreg_within_alpha"]
