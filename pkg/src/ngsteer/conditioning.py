"""Projective high-order quadrature measurements and conditional-state tools.

The truncated quadrature has a discrete spectrum, so a measurement is an
eigenprojector decomposition; an optional bin width groups nearby outcomes
to emulate finite detector resolution or to carve out cat-extraction windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .fock import (
    DensityOperator,
    HilbertLayout,
    StateVector,
    hermitian_eig,
)
from .quadratures import ho_quadrature

PROB_FLOOR = 1e-12
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class MeasurementDescriptor:
    mode: int
    order: int
    which: str


@dataclass(frozen=True)
class ConditionalEnsemble:
    """Outcome values, probabilities, and conditional states on the other mode."""

    measured: MeasurementDescriptor
    values: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    states: tuple[DensityOperator, ...] = field(repr=False)
    binning: float
    discarded_probability: float

    def average_conditional_variance(self, op) -> float:
        """sum_a P_a Var_a(op) over the ensemble."""
        from .fock import expectation

        total = 0.0
        op_sq = op @ op
        for p, rho in zip(self.probabilities, self.states):
            mean = expectation(op, rho).real
            total += p * (expectation(op_sq, rho).real - mean ** 2)
        return total / self.probabilities.sum()

    def reassembled(self) -> DensityOperator:
        """sum_a P_a rho_a; reproduces the reduced steered-party state."""
        mat = sum(p * rho.matrix for p, rho in zip(self.probabilities, self.states))
        return DensityOperator(self.states[0].layout, mat)


def _conditional_blocks(state, mode: int, evecs: np.ndarray):
    """Per-eigenvector probabilities and unnormalized single-mode blocks."""
    layout = state.layout
    if layout.n_modes != 2:
        raise ValueError("conditioning is defined for two-mode states")
    other = 1 - mode
    da, db = layout.mode_dims
    if isinstance(state, StateVector):
        psi = state.amplitudes.reshape(da, db)
        if mode == 1:
            psi = psi.T
        # rows of proj are the (unnormalized) conditional vectors on the kept mode
        proj = evecs.conj().T @ psi
        probs = np.einsum("ij,ij->i", proj, proj.conj()).real
        return probs, proj, None
    rho = state.matrix.reshape(da, db, da, db)
    if mode == 1:
        rho = rho.transpose(1, 0, 3, 2)
    dm = rho.shape[0]
    dk = rho.shape[1]
    # transform the measured axes into the eigenbasis
    rho_t = np.einsum("im,mjnl,nk->ijkl", evecs.conj().T, rho, evecs, optimize=True)
    blocks = np.array([rho_t[i, :, i, :] for i in range(dm)])
    probs = np.array([np.trace(b).real for b in blocks])
    return probs, None, blocks


def _group_outcomes(eigvals: np.ndarray, binning: float):
    """Indices of eigenvalues grouped per outcome (exact-degeneracy or bins)."""
    groups: list[list[int]] = []
    values: list[float] = []
    if binning <= 0:
        current: list[int] = [0]
        for i in range(1, len(eigvals)):
            if eigvals[i] - eigvals[current[0]] < DEGENERACY_TOL:
                current.append(i)
            else:
                groups.append(current)
                current = [i]
        groups.append(current)
        values = [float(np.mean(eigvals[g])) for g in groups]
    else:
        bin_ids = np.floor(eigvals / binning + 0.5).astype(int)
        for b in np.unique(bin_ids):
            idx = np.nonzero(bin_ids == b)[0].tolist()
            groups.append(idx)
            values.append(float(b * binning))
    return values, groups


def measure_ho_quadrature(state: StateVector | DensityOperator, mode: int,
                          order: int, which: str, binning: float = 0.0,
                          prob_floor: float = PROB_FLOOR) -> ConditionalEnsemble:
    """Measure X^k or P^k on one mode of a two-mode state."""
    layout = state.layout
    layout.check_mode(mode)
    single = HilbertLayout((layout.mode_dims[mode],))
    op = ho_quadrature(single, 0, order, which)
    eigvals, evecs = hermitian_eig(op)
    probs, proj, blocks = _conditional_blocks(state, mode, evecs)
    values, groups = _group_outcomes(eigvals, binning)
    other_dim = layout.mode_dims[1 - mode]
    other_layout = HilbertLayout((other_dim,))
    out_vals, out_probs, out_states = [], [], []
    discarded = 0.0
    for val, grp in zip(values, groups):
        p = probs[grp].sum()
        if p < prob_floor:
            discarded += p
            continue
        if proj is not None:
            mat = proj[grp].conj().T @ proj[grp]
        else:
            mat = sum(blocks[i] for i in grp)
        mat = 0.5 * (mat + mat.conj().T)
        out_vals.append(val)
        out_probs.append(p)
        out_states.append(DensityOperator(other_layout, mat / p))
    if not out_states:
        raise ValueError("all outcome probability discarded; lower the floor")
    return ConditionalEnsemble(
        measured=MeasurementDescriptor(mode, order, which),
        values=np.array(out_vals),
        probabilities=np.array(out_probs),
        states=tuple(out_states),
        binning=binning,
        discarded_probability=discarded)


def s_cr(state: StateVector | DensityOperator, direction, binning: float = 0.0) -> float:
    """Reid-type witness from conditional (nonlinear) estimation.

    Measures X and P of the steering party at its order, averages the
    conditional variances of the steered party's quadratures, and compares
    the inference uncertainty product with the commutator bound.
    """
    from .quadratures import commutator_factor

    if direction.steering_party == "A":
        steer_mode, steered_mode = 0, 1
        k, l = direction.order_a, direction.order_b
    else:
        steer_mode, steered_mode = 1, 0
        k, l = direction.order_b, direction.order_a
    other_layout = HilbertLayout((state.layout.mode_dims[steered_mode],))
    xb = ho_quadrature(other_layout, 0, l, "X")
    pb = ho_quadrature(other_layout, 0, l, "P")
    ens_x = measure_ho_quadrature(state, steer_mode, k, "X", binning)
    ens_p = measure_ho_quadrature(state, steer_mode, k, "P", binning)
    v_x = ens_x.average_conditional_variance(xb)
    v_p = ens_p.average_conditional_variance(pb)
    q_b = commutator_factor(state, steered_mode, l)
    if abs(q_b) < 1e-14:
        raise ValueError("vanishing commutator expectation: inference ratio undefined")
    ratio = 2.0 * np.sqrt(max(v_x, 0.0) * max(v_p, 0.0)) / abs(2.0 * q_b)
    return float(ratio - 1.0)


def conditional_state(state: StateVector | DensityOperator, mode: int, order: int,
                      which: str, target_value: float,
                      window: float | None = None) -> tuple[DensityOperator, float]:
    """Project onto eigenvalues within [target - window, target + window].

    Default window is 2% of |target|. Returns the normalized conditional
    state on the other mode and the captured probability.
    """
    if window is None:
        window = 0.02 * abs(target_value)
    if window <= 0:
        raise ValueError("window must be positive")
    layout = state.layout
    layout.check_mode(mode)
    single = HilbertLayout((layout.mode_dims[mode],))
    op = ho_quadrature(single, 0, order, which)
    eigvals, evecs = hermitian_eig(op)
    sel = np.nonzero(np.abs(eigvals - target_value) <= window)[0]
    if len(sel) == 0:
        raise ValueError(
            f"no eigenvalue within {window:g} of {target_value:g}")
    probs, proj, blocks = _conditional_blocks(state, mode, evecs)
    p = probs[sel].sum()
    if p < PROB_FLOOR:
        raise ValueError("window captures negligible probability")
    if proj is not None:
        mat = proj[sel].conj().T @ proj[sel]
    else:
        mat = sum(blocks[i] for i in sel)
    mat = 0.5 * (mat + mat.conj().T)
    other_layout = HilbertLayout((layout.mode_dims[1 - mode],))
    return DensityOperator(other_layout, mat / p), float(p)


def _sector_eigenvector(op_dense: np.ndarray, order: int, sector: int,
                        value: float) -> np.ndarray:
    """Formal eigenvector of a truncated order-k quadrature at an arbitrary value.

    X^k and P^k only couple Fock levels n and n +- k, so each residue class
    n = sector (mod k) carries an independent tridiagonal three-term
    recurrence. Solving it forward gives the truncation of the continuum
    eigenfunction at any target value, sidestepping the sparse discrete
    spectrum of the truncated operator. The result is unit-normalized in
    the truncated space.
    """
    dim = op_dense.shape[0]
    if not 0 <= sector < order:
        raise ValueError(f"sector must lie in [0, {order})")
    idx = np.arange(sector, dim, order)
    sub = op_dense[np.ix_(idx, idx)]
    phi = np.zeros(len(idx), dtype=complex)
    phi[0] = 1.0
    if len(idx) > 1:
        phi[1] = (value - sub[0, 0]) * phi[0] / sub[0, 1]
    for j in range(1, len(idx) - 1):
        phi[j + 1] = ((value - sub[j, j]) * phi[j]
                      - sub[j, j - 1] * phi[j - 1]) / sub[j, j + 1]
    full = np.zeros(dim, dtype=complex)
    full[idx] = phi / np.linalg.norm(phi)
    return full


def conditional_state_at_value(state: StateVector | DensityOperator, mode: int,
                               order: int, which: str, value: float,
                               sector: int | None = None,
                               ) -> tuple[DensityOperator, float]:
    """Condition on an exact quadrature value via the continuum eigenfunction.

    Unlike conditional_state, this does not need an eigenvalue of the
    truncated operator near the target: the sector recurrence constructs
    the formal eigenvector at the requested value directly, so the result
    is stable under cutoff changes. The outcome is a point of a continuous
    spectrum, so the returned weight is a relative density (the squared
    overlap with the unit-normalized formal eigenvector), not a probability.

    sector selects one residue class n = sector (mod order) of the measured
    mode; None mixes all sectors incoherently with their relative weights.
    """
    layout = state.layout
    layout.check_mode(mode)
    if layout.n_modes != 2:
        raise ValueError("conditioning is defined for two-mode states")
    single = HilbertLayout((layout.mode_dims[mode],))
    op = ho_quadrature(single, 0, order, which).dense()
    sectors = range(order) if sector is None else (sector,)
    da, db = layout.mode_dims
    other_dim = layout.mode_dims[1 - mode]
    mat = np.zeros((other_dim, other_dim), dtype=complex)
    weight = 0.0
    for s in sectors:
        phi = _sector_eigenvector(op, order, s, value)
        if isinstance(state, StateVector):
            psi = state.amplitudes.reshape(da, db)
            if mode == 1:
                psi = psi.T
            vec = phi.conj() @ psi
            block = np.outer(vec, vec.conj())
        else:
            rho = state.matrix.reshape(da, db, da, db)
            if mode == 1:
                rho = rho.transpose(1, 0, 3, 2)
            block = np.einsum("i,ijkl,k->jl", phi.conj(), rho, phi, optimize=True)
        mat += block
        weight += float(np.trace(block).real)
    if weight < PROB_FLOOR:
        raise ValueError("conditioning weight is negligible at this value")
    mat = 0.5 * (mat + mat.conj().T)
    other_layout = HilbertLayout((other_dim,))
    return DensityOperator(other_layout, mat / weight), weight


@dataclass(frozen=True)
class WignerGrid:
    x: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # shape (len(p), len(x))

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(self.values.sum() * dx * dp)

    def mean_x(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float((self.values * self.x[None, :]).sum() * dx * dp)

    def mean_p(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float((self.values * self.p[:, None]).sum() * dx * dp)


def wigner(state: DensityOperator | StateVector, x: np.ndarray, p: np.ndarray) -> WignerGrid:
    """Wigner function on a grid, Fock series with generalized Laguerre polynomials.

    Scaling matches X = (a + a^dag)/2: the vacuum is W = (2/pi) exp(-2(x^2+p^2))
    and the grid integral of W over dx dp is 1.
    """
    if isinstance(state, StateVector):
        state = state.to_density_operator()
    if state.layout.n_modes != 1:
        raise ValueError("Wigner grid is computed for single-mode states")
    d = state.layout.dim
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    alpha = x[None, :] + 1j * p[:, None]
    r2 = 4.0 * np.abs(alpha) ** 2
    gauss = (2.0 / np.pi) * np.exp(-0.5 * r2)
    w = np.zeros(alpha.shape, dtype=complex)
    rho = state.matrix
    for n in range(d):
        for m in range(n, d):
            if abs(rho[m, n]) < 1e-16:
                continue
            # <m|rho|n>-weighted term, m >= n
            pref = ((-1) ** n) * np.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
            lag = eval_genlaguerre(n, m - n, r2)
            term = pref * (2.0 * np.conj(alpha)) ** (m - n) * lag
            contrib = rho[m, n] * term
            if m > n:
                contrib = contrib + np.conj(rho[m, n] * term)
            w += contrib
    w = gauss * w
    return WignerGrid(x=x, p=p, values=w.real)


def fidelity(rho: DensityOperator | StateVector, target: StateVector) -> float:
    """<target|rho|target> for a pure target state."""
    if isinstance(rho, StateVector):
        overlap = np.vdot(target.amplitudes, rho.amplitudes)
        return float(abs(overlap) ** 2)
    if rho.layout != target.layout:
        raise ValueError("layout mismatch between state and target")
    val = np.vdot(target.amplitudes, rho.matrix @ target.amplitudes).real
    return float(val)
