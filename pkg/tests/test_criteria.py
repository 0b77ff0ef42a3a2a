"""Steering witnesses and hierarchy identities."""

import numpy as np
import pytest

import ngsteer as ng
from ngsteer.criteria import (
    SteeringDirection,
    cm_test_matrix_standard,
    hierarchy_check,
    hz_from_standard_form,
    lr_from_standard_form,
    s_cm,
    s_hz,
    s_lr,
    sample_standard_forms,
    sign_with_boundary,
    steered_test_matrix,
    steering_report,
    w_hz,
    w_lr,
)
from ngsteer.fock import HilbertLayout, tensor, vacuum
from ngsteer.quadratures import StandardFormCM, build_cm

D11 = SteeringDirection("A", 1, 1)


def test_direction_validation():
    with pytest.raises(ValueError):
        SteeringDirection("C", 1, 1)
    with pytest.raises(ValueError):
        SteeringDirection("A", 0, 1)
    assert SteeringDirection("A", 1, 2).steered_party == "B"


def test_product_state_not_steerable():
    psi = tensor(ng.coherent(0.9, 20), vacuum(HilbertLayout((20,))))
    cm = build_cm(psi, 1, 1)
    assert s_cm(cm, D11) >= -1e-10
    assert s_hz(psi, D11) >= -1e-10
    val, gains = s_lr(cm, D11)
    assert val >= -1e-8


def test_two_mode_vacuum_is_boundary():
    layout = HilbertLayout((8, 8))
    cm = build_cm(vacuum(layout), 1, 1)
    val, gains = s_lr(cm, D11)
    assert gains == pytest.approx((0.0, 0.0))
    assert val == pytest.approx(0.0, abs=1e-10)
    assert s_cm(cm, D11) == pytest.approx(0.0, abs=1e-10)


def test_tmsv_closed_forms():
    for r in (0.25, 0.5, 1.0):
        psi = ng.tmsv(r, (45, 45))
        cm = build_cm(psi, 1, 1)
        expect = 1.0 / np.cosh(2 * r) - 1.0
        val, _ = s_lr(cm, D11)
        assert val == pytest.approx(expect, abs=1e-6)
        raw, _ = s_lr(cm, D11, method="raw")
        assert raw == pytest.approx(expect, abs=1e-6)
        # eigensolve oracle for the CM witness
        direct = float(np.linalg.eigvalsh(steered_test_matrix(cm, D11))[0])
        assert s_cm(cm, D11) == pytest.approx(direct, abs=1e-14)
        assert s_cm(cm, D11) < 0


def test_tmsv_hz_value():
    # closed form: -(cosh r sinh r - sqrt((sinh^2 r + 1/2) sinh^2 r))
    r = 1.0
    psi = ng.tmsv(r, (45, 45))
    s, c = np.sinh(r), np.cosh(r)
    expect = -(c * s - np.sqrt((s * s + 0.5) * s * s))
    assert s_hz(psi, D11) == pytest.approx(expect, abs=1e-6)
    assert s_hz(psi, D11) == pytest.approx(-0.2016, abs=5e-4)
    # with zero means the centered and raw bounds coincide
    assert s_hz(psi, D11, centered=False) == pytest.approx(
        s_hz(psi, D11), abs=1e-10)


def test_hz_detects_small_squeezing():
    psi = ng.tmsv(0.1, (20, 20))
    assert s_hz(psi, D11) < 0


def test_centered_hz_is_stronger_when_displaced(mixture_07):
    d22 = SteeringDirection("A", 2, 2)
    centered = s_hz(mixture_07, d22, centered=True)
    raw = s_hz(mixture_07, d22, centered=False)
    # the order-2 means are nonzero for this family
    assert centered != pytest.approx(raw, abs=1e-6)
    assert centered <= raw + 1e-12


def test_w_lr_equals_det_of_test_matrix():
    rng = np.random.default_rng(7)
    for sf in sample_standard_forms(200, rng):
        det = float(np.linalg.det(cm_test_matrix_standard(sf)).real)
        scale = max(abs(det), abs(w_lr(sf)), 1e-30)
        assert abs(w_lr(sf) - det) / scale < 1e-10


def test_difference_identity_on_samples():
    rng = np.random.default_rng(11)
    for sf in sample_standard_forms(200, rng):
        lhs = w_lr(sf) - w_hz(sf)
        rhs = -((sf.c1 + sf.c2) ** 2 / 16.0) * (
            8 * sf.n * sf.m - 4 * sf.c1 * sf.c2 + (sf.c1 - sf.c2) ** 2)
        assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(lhs)))


def test_sign_clauses_on_samples():
    rng = np.random.default_rng(23)
    for sf in sample_standard_forms(300, rng):
        shz = hz_from_standard_form(sf)
        slr = lr_from_standard_form(sf)
        scm = float(np.linalg.eigvalsh(cm_test_matrix_standard(sf))[0])
        if shz < -1e-7:
            assert slr < 1e-7 and scm < 1e-7
        sl, sc = sign_with_boundary(slr, 1e-7), sign_with_boundary(scm, 1e-7)
        if 0 not in (sl, sc):
            assert sl == sc
        if abs(sf.c1 + sf.c2) < 1e-9:
            sh = sign_with_boundary(shz, 1e-7)
            if 0 not in (sh, sl):
                assert sh == sl


def test_sample_standard_forms_feasible():
    rng = np.random.default_rng(3)
    for sf in sample_standard_forms(50, rng):
        assert sf.n > 0 and sf.m > 0 and sf.q_b > 0
        assert sf.principal_minors_ok()


def test_sign_with_boundary():
    assert sign_with_boundary(-1e-3) == -1
    assert sign_with_boundary(1e-3) == 1
    assert sign_with_boundary(1e-12) == 0


def test_direction_swap_on_asymmetric_state():
    state = ng.spdc_state(ng.SpdcParams(xi=0.15, cutoff_a=16, cutoff_b=32))
    d_ab = SteeringDirection("A", 1, 2)
    d_ba = SteeringDirection("B", 1, 2)
    cm = build_cm(state, 1, 2)
    fwd = s_cm(cm, d_ab)
    bwd = s_cm(cm, d_ba)
    assert fwd < 0
    assert bwd < 0
    assert fwd != pytest.approx(bwd, abs=1e-6)


def test_order_mismatch_rejected(tmsv_r1):
    cm = build_cm(tmsv_r1, 1, 1)
    with pytest.raises(ValueError):
        s_cm(cm, SteeringDirection("A", 1, 2))


def test_hierarchy_check_on_tmsv(tmsv_r1):
    report = hierarchy_check(tmsv_r1, D11)
    assert report.passed
    v = report.values
    assert v.s_cr == pytest.approx(v.s_lr, abs=1e-4)


def test_steering_report_hz_estimators(mixture_07):
    d = SteeringDirection("A", 1, 1)
    direct = steering_report(mixture_07, d, include_cr=False)
    sf_based = steering_report(mixture_07, d, include_cr=False,
                               hz_estimator="standard_form")
    assert direct.s_cm == pytest.approx(sf_based.s_cm, abs=1e-12)
    assert direct.s_lr == pytest.approx(sf_based.s_lr, abs=1e-12)
    # the HZ bound is not invariant under the standard-form reduction
    assert direct.s_hz != pytest.approx(sf_based.s_hz, abs=1e-6)
    with pytest.raises(ValueError):
        steering_report(mixture_07, d, hz_estimator="bogus")
