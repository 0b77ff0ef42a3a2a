"""Pure loss and coherent photon subtraction."""

import numpy as np
import pytest

import ngsteer as ng
from ngsteer.channels import DegenerateInputError, coherent_subtract, pure_loss
from ngsteer.conditioning import fidelity
from ngsteer.fock import (
    HilbertLayout,
    expectation,
    number_op,
    partial_trace,
    tensor,
    vacuum,
)


def test_loss_on_coherent_state_rescales_amplitude():
    alpha, eta = 1.2, 0.6
    psi = tensor(ng.coherent(alpha, 30), vacuum(HilbertLayout((2,))))
    rho = pure_loss(psi, 0, eta)
    reduced = partial_trace(rho, keep=[0])
    target = ng.coherent(np.sqrt(eta) * alpha, 30)
    assert fidelity(reduced, target) == pytest.approx(1.0, abs=1e-8)


def test_loss_preserves_trace_and_scales_energy(tmsv_r1):
    eta = 0.55
    rho = pure_loss(tmsv_r1, 0, eta)
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-10)
    n0 = expectation(number_op(tmsv_r1.layout, 0), tmsv_r1).real
    n1 = expectation(number_op(rho.layout, 0), rho).real
    assert n1 == pytest.approx(eta * n0, abs=1e-8)
    # untouched mode keeps its photon number
    assert expectation(number_op(rho.layout, 1), rho).real == pytest.approx(
        n0, abs=1e-8)


def test_loss_identity_and_full():
    psi = ng.tmsv(0.5, (12, 12))
    rho_full = pure_loss(psi, 0, 1.0)
    assert np.allclose(rho_full.matrix, psi.to_density_operator().matrix,
                       atol=1e-12)
    rho_none = pure_loss(psi, 0, 0.0)
    assert expectation(number_op(psi.layout, 0), rho_none).real == pytest.approx(
        0.0, abs=1e-10)


def test_subtraction_weight_on_tmsv():
    r = 0.9
    psi = ng.tmsv(r, (40, 40))
    _, weight = coherent_subtract(psi.to_density_operator())
    # <(a^dag + b^dag)(a + b)> = 2 sinh^2 r, the a^dag b cross terms vanish
    assert weight == pytest.approx(2 * np.sinh(r) ** 2, abs=1e-6)


def test_subtraction_output_is_state(subtracted_07):
    mat = subtracted_07.matrix
    assert np.trace(mat).real == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(mat, mat.conj().T)
    assert np.linalg.eigvalsh(mat)[0] > -1e-10


def test_subtraction_rejects_vacuum():
    layout = HilbertLayout((4, 4))
    with pytest.raises(DegenerateInputError):
        coherent_subtract(vacuum(layout).to_density_operator())


def test_loss_rejects_bad_efficiency():
    psi = ng.tmsv(0.5, (8, 8))
    with pytest.raises(ValueError):
        pure_loss(psi, 0, 1.3)
