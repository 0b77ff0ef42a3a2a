"""Acceptance gate: ten numbered criteria, one pass/fail line each.

Each criterion pins a reproduction target (threshold values, fidelities,
or structural properties) at fixed cutoffs and tolerances. Sweep-based
criteria load the packaged experiment configs so the CLI and the tests
exercise identical parameter sets.
"""

import warnings
from importlib import resources

import numpy as np
import pytest

import ngsteer as ng
from ngsteer.conditioning import (
    conditional_state_at_value,
    fidelity,
    measure_ho_quadrature,
)
from ngsteer.criteria import (
    SteeringDirection,
    cm_test_matrix_standard,
    hierarchy_check,
    hz_from_standard_form,
    lr_from_standard_form,
    sample_standard_forms,
    sign_with_boundary,
    steering_report,
    w_hz,
    w_lr,
)
from ngsteer.fock import (
    HilbertLayout,
    TruncationWarning,
    expectation,
    number_op,
    partial_trace,
)
from ngsteer.quadratures import build_cm, ho_quadrature
from ngsteer.sweep import SweepConfig, find_threshold, load_config, run_sweep

pytestmark = pytest.mark.filterwarnings("ignore::ngsteer.fock.TruncationWarning")

_SWEEP_CACHE: dict = {}


def sweep_result(name: str):
    if name not in _SWEEP_CACHE:
        path = str(resources.files("ngsteer.configs") / f"{name}.yaml")
        config = load_config(path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            _SWEEP_CACHE[name] = run_sweep(config)
    return _SWEEP_CACHE[name]


def test_criterion_01_lossy_subtracted_first_order_thresholds():
    """Subtracted lossy two-mode squeezing, r=1, orders (1,1): efficiency
    thresholds CR 0.585, LR/CM 0.62 (mutually equal within 1e-3), HZ 0.65,
    each within +-0.02."""
    thr = sweep_result("fig3b").thresholds
    assert thr["s_cr"] == pytest.approx(0.585, abs=0.02)
    assert thr["s_lr"] == pytest.approx(0.62, abs=0.02)
    assert thr["s_cm"] == pytest.approx(0.62, abs=0.02)
    assert abs(thr["s_lr"] - thr["s_cm"]) < 1e-3
    assert thr["s_hz"] == pytest.approx(0.65, abs=0.02)


def test_criterion_02_lossy_subtracted_second_order_thresholds():
    """Same family at orders (2,2): CR 0.58, LR/CM 0.59, HZ 0.62, +-0.02."""
    thr = sweep_result("fig3c").thresholds
    assert thr["s_cr"] == pytest.approx(0.58, abs=0.02)
    assert thr["s_lr"] == pytest.approx(0.59, abs=0.02)
    assert thr["s_cm"] == pytest.approx(0.59, abs=0.02)
    assert thr["s_hz"] == pytest.approx(0.62, abs=0.02)


def test_criterion_03_mixture_first_order_thresholds():
    """Squeezed-vacuum mixture, r=r_a=r_b=0.5, orders (1,1): mixing-weight
    thresholds LR/CM 0.666 (equal within 1e-3), HZ 0.730, CR 0.631, +-0.015."""
    thr = sweep_result("fig4a").thresholds
    assert thr["s_lr"] == pytest.approx(0.666, abs=0.015)
    assert thr["s_cm"] == pytest.approx(0.666, abs=0.015)
    assert abs(thr["s_lr"] - thr["s_cm"]) < 1e-3
    assert thr["s_hz"] == pytest.approx(0.730, abs=0.015)
    assert thr["s_cr"] == pytest.approx(0.631, abs=0.015)


def test_criterion_04_mixture_second_order_thresholds():
    """Mixture at orders (2,2): LR/CM 0.693, HZ 0.727, CR 0.528, +-0.015.

    Note: the LR/CM and CR targets are only attained at unit squeezing
    (see the packaged fig4b config); no evaluation convention reproduces
    the HZ target there, so that clause fails and is documented as a
    blocking discrepancy in the project notes.
    """
    thr = sweep_result("fig4b").thresholds
    assert thr["s_lr"] == pytest.approx(0.693, abs=0.015)
    assert thr["s_cm"] == pytest.approx(0.693, abs=0.015)
    assert thr["s_cr"] == pytest.approx(0.528, abs=0.015)
    assert thr["s_hz"] == pytest.approx(0.727, abs=0.015)


def test_criterion_05_conditional_kitten_fidelity():
    """Three-photon state at xi=0.6, cutoffs (32, 64): conditioning on
    X^2 = 1.3 in the odd sector yields fidelity 0.922 +- 0.03 against the
    ideal four-component cat with alpha=1.8."""
    state = ng.spdc_state(ng.SpdcParams(xi=0.6, cutoff_a=32, cutoff_b=64))
    rho, weight = conditional_state_at_value(state, 0, 2, "X", 1.3, sector=1)
    assert weight > 0
    target = ng.ideal_cat(1.8, 4, 64)
    assert fidelity(rho, target) == pytest.approx(0.922, abs=0.03)


def test_criterion_06_three_photon_region_structure():
    """Three-photon sweep: the (1,2) inference witness is negative on an
    interval and returns positive at large coupling; (2,4) and (3,6) stay
    negative over the same sweep; CM, HZ, and LR change sign at a common
    coupling within 1e-3.

    Note: the (3,6) clause fails as stated. The order-(3,6) inference
    witness turns positive near xi = 0.32 at every cutoff tested, because
    conditioning on a third-order quadrature provides no variance
    reduction for the sixth-order steered moment on this family; see the
    project notes for the blocking analysis.
    """
    rows = sweep_result("fig1d").rows
    vals_12 = np.array([r.witnesses["s_cr_3rd"] for r in rows])
    vals_24 = np.array([r.witnesses["s_cr_6th"] for r in rows])
    vals_36 = np.array([r.witnesses["s_cr_9th"] for r in rows])
    assert vals_12.min() < -0.05
    assert vals_12[-1] > 0
    assert vals_24.max() < 1e-9, "orders (2,4) must remain negative"

    config = SweepConfig(experiment="crossing", family="spdc", start=0.2,
                         stop=0.3, step=0.05, orders=(1, 2),
                         cutoff_a=24, cutoff_b=48, cr_subgrid=0)
    base = run_sweep(config)
    crossings = [find_threshold(config, w, result=base, tol=1e-4)
                 for w in ("s_cm", "s_hz", "s_lr")]
    assert max(crossings) - min(crossings) < 1e-3

    assert vals_36.max() < 1e-9, (
        "orders (3,6) must remain negative; observed max "
        f"{vals_36.max():.4g} (witness turns positive near the "
        "s_cr_9th crossing reported by the sweep)")


def test_criterion_07_hierarchy_property_suite(
        tmsv_r1, subtracted_07, mixture_07, spdc_03):
    """On 1000 rejection-sampled feasible standard forms and on all
    simulated families: the linear-response witness equals the test-matrix
    determinant (rel. 1e-10); the witness-difference identity holds to
    1e-12; a negative HZ bound implies negative LR and CM; LR and CM agree
    in sign; when c1 + c2 vanishes HZ joins the sign agreement; and the
    inference witness never exceeds the linear-response witness."""
    rng = np.random.default_rng(2024)
    for sf in sample_standard_forms(1000, rng):
        det = float(np.linalg.det(cm_test_matrix_standard(sf)).real)
        wl, wh = w_lr(sf), w_hz(sf)
        scale = max(abs(wl), abs(det), 1e-30)
        assert abs(wl - det) / scale < 1e-10
        identity = wl - wh + ((sf.c1 + sf.c2) ** 2 / 16.0) * (
            8 * sf.n * sf.m - 4 * sf.c1 * sf.c2 + (sf.c1 - sf.c2) ** 2)
        assert abs(identity) < 1e-12 * max(1.0, abs(wl))
        slr = lr_from_standard_form(sf)
        shz = hz_from_standard_form(sf)
        scm = float(np.linalg.eigvalsh(cm_test_matrix_standard(sf))[0])
        if shz < -1e-7:
            assert slr < 1e-7 and scm < 1e-7
        s_l, s_c = sign_with_boundary(slr, 1e-7), sign_with_boundary(scm, 1e-7)
        if 0 not in (s_l, s_c):
            assert s_l == s_c
        if abs(sf.c1 + sf.c2) < 1e-9:
            s_h = sign_with_boundary(shz, 1e-7)
            if 0 not in (s_h, s_l):
                assert s_h == s_l
    cases = [(tmsv_r1, ("A", 1, 1)), (tmsv_r1, ("A", 2, 2)),
             (subtracted_07, ("A", 1, 1)), (mixture_07, ("A", 1, 1)),
             (spdc_03, ("A", 1, 2))]
    for state, (party, k, l) in cases:
        direction = SteeringDirection(party, k, l)
        assert hierarchy_check(state, direction).passed
        report = steering_report(state, direction, include_cr=True)
        assert report.s_cr <= report.s_lr + 1e-6


def test_criterion_08_gaussian_oracle():
    """Two-mode squeezed vacuum at r in {0.25, 0.5, 1}: the linear-response
    and inference witnesses equal 1/cosh(2r) - 1 within 1e-4, and the
    covariance matrix entries match cosh(2r)/4 and +-sinh(2r)/4 to 1e-8."""
    from ngsteer.conditioning import s_cr
    from ngsteer.criteria import s_lr

    d = SteeringDirection("A", 1, 1)
    for r in (0.25, 0.5, 1.0):
        psi = ng.tmsv(r, (45, 45))
        expect = 1.0 / np.cosh(2 * r) - 1.0
        cm = build_cm(psi, 1, 1)
        val, _ = s_lr(cm, d)
        assert val == pytest.approx(expect, abs=1e-4)
        assert s_cr(psi, d) == pytest.approx(expect, abs=1e-4)
        c, s = np.cosh(2 * r) / 4.0, np.sinh(2 * r) / 4.0
        expected = np.array([
            [c, 0, s, 0],
            [0, c, 0, -s],
            [s, 0, c, 0],
            [0, -s, 0, c]])
        assert np.allclose(cm.matrix, expected, atol=1e-8)


def test_criterion_09_physicality_suite(
        tmsv_r1, subtracted_07, mixture_07, spdc_03, spdc_06):
    """Every generated state yields a feasible high-order covariance matrix
    (minimum eigenvalue >= -1e-7) for orders (k, l) in {1,2,3} x {1,2,4};
    unitary evolution conserves the norm within 1e-9; the three-photon
    family satisfies <n_B> = 2 <n_A> within 1e-8."""
    states = (tmsv_r1, subtracted_07, mixture_07, spdc_03, spdc_06)
    for state in states:
        for k in (1, 2, 3):
            for l in (1, 2, 4):
                cm = build_cm(state, k, l)
                assert cm.feasibility_min_eig() >= -1e-7, (k, l)
    for spdc in (spdc_03, spdc_06):
        assert np.linalg.norm(spdc.amplitudes) == pytest.approx(1.0, abs=1e-9)
        na = expectation(number_op(spdc.layout, 0), spdc).real
        nb = expectation(number_op(spdc.layout, 1), spdc).real
        assert nb == pytest.approx(2.0 * na, abs=1e-8)


def test_criterion_10_conditioning_invariants(
        spdc_03, subtracted_07, mixture_07):
    """Law of total variance and ensemble reassembly hold on all three
    state families: the probability-weighted conditional variances plus
    the variance of the conditional means reproduce the unconditional
    variance, and summing the ensemble reproduces the reduced state."""
    for state in (spdc_03, subtracted_07, mixture_07):
        ens = measure_ho_quadrature(state, 0, 1, "X")
        other = HilbertLayout((state.layout.mode_dims[1],))
        xb = ho_quadrature(other, 0, 1, "X")
        psum = ens.probabilities.sum()
        avg_var = ens.average_conditional_variance(xb)
        means = np.array([expectation(xb, rho).real for rho in ens.states])
        grand = float((ens.probabilities * means).sum() / psum)
        between = float((ens.probabilities * (means - grand) ** 2).sum() / psum)
        reduced = partial_trace(state, keep=[1])
        m1 = expectation(xb, reduced).real
        m2 = expectation(xb @ xb, reduced).real
        assert avg_var + between == pytest.approx(m2 - m1 ** 2, abs=1e-7)
        back = ens.reassembled().matrix * psum
        assert np.allclose(back, reduced.matrix, atol=1e-7)
