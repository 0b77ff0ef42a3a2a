"""Pure-loss channels and coherent single-photon subtraction."""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .fock import (
    DensityOperator,
    StateVector,
    ladder,
)


class DegenerateInputError(ValueError):
    """Heralded map applied to a state with no photons to subtract."""


def pure_loss(state: DensityOperator | StateVector, mode: int, eta: float) -> DensityOperator:
    """Single-mode pure-loss channel with transmission eta, as a Kraus series.

    K_j = sqrt((1-eta)^j / j!) * eta^(n/2) * a^j, summed to the mode cutoff
    (exact on the truncated space).
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("transmission must lie in [0, 1]")
    if isinstance(state, StateVector):
        state = state.to_density_operator()
    layout = state.layout
    layout.check_mode(mode)
    if eta == 1.0:
        return state
    d = layout.mode_dims[mode]
    n = np.arange(d)
    if eta == 0.0:
        damp = np.where(n == 0, 1.0, 0.0)
    else:
        damp = np.power(eta, n / 2.0)
    a_full = ladder(layout, mode).matrix
    # eta^(n/2) is diagonal on the full space; a^j rho a^dag^j built incrementally
    dvec = layout.embed(np.diag(damp.astype(complex)), mode).diagonal().real
    rho = state.matrix
    out = np.zeros_like(rho)
    left = rho
    for j in range(d):
        if j > 0:
            left = np.asarray(a_full @ (left @ a_full.conj().T))
        coeff = 1.0 if j == 0 else np.exp(j * np.log1p(-eta) - gammaln(j + 1))
        out += coeff * (dvec[:, None] * left * dvec[None, :])
        if coeff * np.abs(left).max() < 1e-18:
            break
    out = 0.5 * (out + out.conj().T)
    return DensityOperator(layout, out)


def coherent_subtract(state: DensityOperator | StateVector) -> tuple[DensityOperator, float]:
    """Heralded map rho -> (a+b) rho (a+b)^dag / w with weight w = Tr[(a+b)^dag (a+b) rho].

    The weight is proportional to the heralding probability.
    """
    if isinstance(state, StateVector):
        state = state.to_density_operator()
    layout = state.layout
    if layout.n_modes != 2:
        raise ValueError("coherent subtraction is defined for two-mode states")
    ab = ladder(layout, 0).matrix + ladder(layout, 1).matrix
    unnorm = np.asarray(ab @ (state.matrix @ ab.conj().T))
    w = float(np.trace(unnorm).real)
    if w < 1e-12:
        raise DegenerateInputError(
            f"subtraction weight {w:.2e} too small: no photon to subtract")
    # symmetrize away round-off so the constructor's Hermiticity check holds
    unnorm = 0.5 * (unnorm + unnorm.conj().T)
    return DensityOperator(layout, unnorm / w), w
