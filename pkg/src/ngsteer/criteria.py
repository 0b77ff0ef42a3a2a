"""Steering witnesses built on the high-order covariance matrix.

Negative witness value means steering is detected; values inside the
boundary band (+-1e-9) are reported as saturated rather than as detection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import DensityOperator, ModeOperator, StateVector, expectation, ladder
from .quadratures import HighOrderCM, StandardFormCM, build_cm, standard_form

BOUNDARY_BAND = 1e-9


@dataclass(frozen=True)
class SteeringDirection:
    """Which party steers, and the quadrature order attached to each party.

    order_a / order_b stay attached to their modes regardless of direction;
    the direction selects which block of the CM receives the commutator
    augmentation and which party supplies the estimation gains.
    """

    steering_party: str  # "A" or "B"
    order_a: int
    order_b: int

    def __post_init__(self):
        if self.steering_party not in ("A", "B"):
            raise ValueError("steering_party must be 'A' or 'B'")
        if self.order_a < 1 or self.order_b < 1:
            raise ValueError("orders must be >= 1")

    @property
    def steered_party(self) -> str:
        return "B" if self.steering_party == "A" else "A"


@dataclass(frozen=True)
class SteeringReport:
    direction: SteeringDirection
    s_cm: float
    s_hz: float
    s_lr: float
    s_cr: float | None
    gains: tuple[float, float]
    w_lr: float
    w_hz: float
    truncation_warnings: tuple[str, ...] = ()


def _oriented(cm: HighOrderCM, direction: SteeringDirection) -> HighOrderCM:
    """CM reordered so the steering party occupies the first block."""
    if cm.orders != (direction.order_a, direction.order_b):
        raise ValueError(
            f"CM orders {cm.orders} do not match direction orders "
            f"({direction.order_a}, {direction.order_b})")
    return cm if direction.steering_party == "A" else cm.swapped()


def steered_test_matrix(cm: HighOrderCM, direction: SteeringDirection) -> np.ndarray:
    """Hermitian M: V with the steered block augmented by +-i q."""
    oc = _oriented(cm, direction)
    m = oc.matrix.astype(complex)
    m[2, 3] += 1j * oc.q_b
    m[3, 2] -= 1j * oc.q_b
    return m


def s_cm(cm: HighOrderCM, direction: SteeringDirection) -> float:
    """Minimum eigenvalue of the steered test matrix; negative => steering."""
    return float(np.linalg.eigvalsh(steered_test_matrix(cm, direction))[0])


def _centered_power(state, mode: int, order: int) -> ModeOperator:
    layout = state.layout
    ak = ladder(layout, mode).power(order)
    mean = expectation(ak, state)
    from .fock import identity_op

    return ak - mean * identity_op(layout)


def s_hz(state: StateVector | DensityOperator, direction: SteeringDirection,
         centered: bool = True) -> float:
    """Hillery-Zubairy-type witness from power operators.

    centered=True subtracts the operator means first (the optimized form);
    centered=False evaluates the bound on the raw powers, which is the
    original product-criterion form and is weaker whenever the means are
    nonzero. Both are valid sufficient conditions.
    """
    if direction.steering_party == "A":
        steer_mode, steered_mode = 0, 1
        k, l = direction.order_a, direction.order_b
    else:
        steer_mode, steered_mode = 1, 0
        k, l = direction.order_b, direction.order_a
    if centered:
        a_hat = _centered_power(state, steer_mode, k)
        b_hat = _centered_power(state, steered_mode, l)
    else:
        a_hat = ladder(state.layout, steer_mode).power(k)
        b_hat = ladder(state.layout, steered_mode).power(l)
    cross = abs(expectation(a_hat @ b_hat, state))
    sym_a = 0.5 * expectation(a_hat @ a_hat.dagger() + a_hat.dagger() @ a_hat, state).real
    norm_b = expectation(b_hat.dagger() @ b_hat, state).real
    radicand = sym_a * norm_b
    if radicand < -1e-12:
        raise ValueError(f"negative radicand {radicand:.2e}: numerical corruption")
    return -(cross - np.sqrt(max(radicand, 0.0)))


def s_lr(cm: HighOrderCM, direction: SteeringDirection,
         method: str = "standard") -> tuple[float, tuple[float, float]]:
    """Reid-type witness with linear estimation gains.

    method='standard': reduce to standard form first and use the closed-form
    optimal gains. method='raw': minimize X/P gains on the CM as given.
    """
    oc = _oriented(cm, direction)
    if method == "standard":
        sf, _ = standard_form(oc)
        n, m, c1, c2, q = sf.n, sf.m, sf.c1, sf.c2, sf.q_b
        if n < 1e-12:
            raise ValueError("degenerate steering-party variance")
        gx, gp = -c1 / n, c2 / n
        vx = m + 2 * c1 * gx + gx ** 2 * n
        vp = m - 2 * c2 * gp + gp ** 2 * n
    elif method == "raw":
        v = oc.matrix
        if min(v[0, 0], v[1, 1]) < 1e-12:
            raise ValueError("degenerate steering-party variance")
        gx = -v[0, 2] / v[0, 0]
        gp = -v[1, 3] / v[1, 1]
        vx = v[2, 2] + 2 * v[0, 2] * gx + gx ** 2 * v[0, 0]
        vp = v[3, 3] + 2 * v[1, 3] * gp + gp ** 2 * v[1, 1]
        q = oc.q_b
    else:
        raise ValueError("method must be 'standard' or 'raw'")
    r = np.sqrt(max(vx, 0.0) * max(vp, 0.0)) / q
    return float(r - 1.0), (float(gx), float(gp))


def w_lr(sf: StandardFormCM) -> float:
    n, m, c1, c2, q = sf.n, sf.m, sf.c1, sf.c2, sf.q_b
    return (n * m - c1 ** 2) * (n * m - c2 ** 2) - (n * q) ** 2


def w_hz(sf: StandardFormCM) -> float:
    n, m, c1, c2, q = sf.n, sf.m, sf.c1, sf.c2, sf.q_b
    return (n * m - (c1 - c2) ** 2 / 4.0) ** 2 - (n * q) ** 2


def hz_from_standard_form(sf: StandardFormCM) -> float:
    """HZ witness value expressed through the standard-form parameters."""
    cross = abs(sf.c1 - sf.c2)
    radicand = 4.0 * sf.n * (sf.m - sf.q_b)
    return -(cross - np.sqrt(max(radicand, 0.0)))


def lr_from_standard_form(sf: StandardFormCM) -> float:
    vx = sf.m - sf.c1 ** 2 / sf.n
    vp = sf.m - sf.c2 ** 2 / sf.n
    return float(np.sqrt(max(vx, 0.0) * max(vp, 0.0)) / sf.q_b - 1.0)


def cm_test_matrix_standard(sf: StandardFormCM) -> np.ndarray:
    m = sf.matrix().astype(complex)
    m[2, 3] += 1j * sf.q_b
    m[3, 2] -= 1j * sf.q_b
    return m


def sign_with_boundary(value: float, band: float = BOUNDARY_BAND) -> int:
    """-1 detection, 0 boundary, +1 no detection."""
    if value < -band:
        return -1
    if value > band:
        return 1
    return 0


def sample_standard_forms(count: int, rng: np.random.Generator,
                          feasibility_tol: float = 0.0) -> list[StandardFormCM]:
    """Rejection-sample physical standard-form CMs.

    n, m uniform in (0, 4]; c1, c2 uniform inside the principal-minor box;
    q_a, q_b are 1/4 with probability 1/2, otherwise uniform in (0, 2];
    samples violating the uncertainty feasibility test are discarded.
    """
    out = []
    while len(out) < count:
        n, m = rng.uniform(1e-3, 4.0, size=2)
        bound = np.sqrt(n * m)
        c1, c2 = rng.uniform(-bound, bound, size=2)
        q_a = 0.25 if rng.random() < 0.5 else rng.uniform(1e-3, 2.0)
        q_b = 0.25 if rng.random() < 0.5 else rng.uniform(1e-3, 2.0)
        sf = StandardFormCM(n=n, m=m, c1=c1, c2=c2, q_b=q_b)
        v = sf.matrix().astype(complex)
        v[0, 1] += 1j * q_a
        v[1, 0] -= 1j * q_a
        v[2, 3] += 1j * q_b
        v[3, 2] -= 1j * q_b
        if np.linalg.eigvalsh(v)[0] >= -feasibility_tol:
            out.append(sf)
    return out


@dataclass(frozen=True)
class HierarchyReport:
    values: SteeringReport
    hz_implies_lr_cm: bool
    lr_cm_sign_agreement: bool
    lr_implies_cr: bool
    hz_lr_sign_agreement_when_balanced: bool | None
    passed: bool


def hierarchy_check(state: StateVector | DensityOperator,
                    direction: SteeringDirection,
                    binning: float = 0.0,
                    tol: float = 1e-7) -> HierarchyReport:
    """Evaluate all four witnesses and test the criteria-ordering clauses."""
    report = steering_report(state, direction, binning=binning, include_cr=True)
    shz, slr, scm, scr = report.s_hz, report.s_lr, report.s_cm, report.s_cr
    c1 = not (shz < -tol) or (slr < tol and scm < tol)
    c2 = sign_with_boundary(slr, tol) == sign_with_boundary(scm, tol) \
        or 0 in (sign_with_boundary(slr, tol), sign_with_boundary(scm, tol))
    c3 = not (slr < -tol) or (scr is not None and scr < tol)
    cm = build_cm(state, direction.order_a, direction.order_b)
    sf, _ = standard_form(_oriented(cm, direction))
    if abs(sf.c1 + sf.c2) < 1e-9:
        c4 = sign_with_boundary(shz, tol) == sign_with_boundary(slr, tol) \
            or 0 in (sign_with_boundary(shz, tol), sign_with_boundary(slr, tol))
    else:
        c4 = None
    passed = c1 and c2 and c3 and (c4 is not False)
    return HierarchyReport(report, c1, c2, c3, c4, passed)


def steering_report(state: StateVector | DensityOperator,
                    direction: SteeringDirection,
                    binning: float = 0.0,
                    include_cr: bool = True,
                    hz_estimator: str = "direct",
                    hz_centered: bool = True) -> SteeringReport:
    """All witnesses for one state and direction.

    hz_estimator='direct' evaluates the HZ bound on the state's moments;
    'standard_form' evaluates it on the CM after standard-form reduction.
    The two differ because the HZ witness is not invariant under the local
    transformations used in the reduction.
    """
    import warnings as _warnings

    from .conditioning import s_cr as _s_cr
    from .fock import TruncationWarning

    if hz_estimator not in ("direct", "standard_form"):
        raise ValueError("hz_estimator must be 'direct' or 'standard_form'")
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always", TruncationWarning)
        cm = build_cm(state, direction.order_a, direction.order_b)
        scm = s_cm(cm, direction)
        slr, gains = s_lr(cm, direction)
        sf, _ = standard_form(_oriented(cm, direction))
        if hz_estimator == "direct":
            shz = s_hz(state, direction, centered=hz_centered)
        else:
            shz = hz_from_standard_form(sf)
        scr = _s_cr(state, direction, binning=binning) if include_cr else None
    notes = tuple(str(w.message) for w in caught
                  if issubclass(w.category, TruncationWarning))
    return SteeringReport(
        direction=direction, s_cm=scm, s_hz=shz, s_lr=slr, s_cr=scr,
        gains=gains, w_lr=w_lr(sf), w_hz=w_hz(sf),
        truncation_warnings=notes)
