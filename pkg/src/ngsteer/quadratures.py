"""High-order quadratures, their covariance matrix, and standard-form reduction.

Conventions: X^k = (a^k + a^dag^k)/2, P^k = -i(a^k - a^dag^k)/2, so the
vacuum variance of the order-1 quadratures is 1/4 and the commutator factor
q = <[a^k, a^dag^k]>/4 equals 1/4 at order 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    DensityOperator,
    HilbertLayout,
    ModeOperator,
    StateVector,
    TruncationWarning,
    TOP_LEVEL_TOL,
    expectation,
    ladder,
)

SYMMETRY_ATOL = 1e-10
FEASIBILITY_TOL = 1e-7


def ho_quadrature(layout: HilbertLayout, mode: int, order: int, which: str) -> ModeOperator:
    """Order-k amplitude ('X') or phase ('P') quadrature on one mode."""
    if order < 1:
        raise ValueError("order must be >= 1")
    layout.check_mode(mode)
    if order >= layout.mode_dims[mode]:
        raise ValueError(
            f"order {order} >= cutoff {layout.mode_dims[mode]}: operator fully truncated")
    ak = ladder(layout, mode).power(order)
    if which == "X":
        mat = 0.5 * (ak.matrix + ak.matrix.conj().T)
    elif which == "P":
        mat = -0.5j * (ak.matrix - ak.matrix.conj().T)
    else:
        raise ValueError("which must be 'X' or 'P'")
    return ModeOperator(layout, mat.tocsr(), hermitian=True)


def commutator_factor(state: StateVector | DensityOperator, mode: int, order: int) -> float:
    """q = <[a^k, a^dag^k]>/4 for the given mode and order."""
    layout = state.layout
    layout.check_mode(mode)
    tail = state.top_level_population()
    if tail[mode] > TOP_LEVEL_TOL:
        warnings.warn(
            f"top-level population {tail[mode]:.2e} on mode {mode}; "
            "commutator factor may be corrupted by truncation",
            TruncationWarning, stacklevel=2)
    ak = ladder(layout, mode).power(order)
    comm = ModeOperator(layout, (ak.matrix @ ak.matrix.conj().T
                                 - ak.matrix.conj().T @ ak.matrix).tocsr())
    return expectation(comm, state).real / 4.0


@dataclass(frozen=True)
class HighOrderCM:
    """4x4 covariance matrix of (X_A^k, P_A^k, X_B^l, P_B^l) plus commutator factors."""

    orders: tuple[int, int]
    matrix: np.ndarray = field(repr=False)
    q_a: float
    q_b: float
    means: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.matrix, dtype=float)
        if v.shape != (4, 4):
            raise ValueError("covariance matrix must be 4x4")
        if np.max(np.abs(v - v.T)) > SYMMETRY_ATOL:
            raise ValueError("covariance matrix must be symmetric within 1e-10")
        v = 0.5 * (v + v.T)
        v.setflags(write=False)
        object.__setattr__(self, "matrix", v)
        m = np.asarray(self.means, dtype=float).copy()
        m.setflags(write=False)
        object.__setattr__(self, "means", m)

    def feasibility_min_eig(self) -> float:
        """Min eigenvalue of V + i(Omega_qA (+) Omega_qB); >= ~0 for physical states."""
        return float(np.linalg.eigvalsh(
            self.matrix + 1j * _omega_direct_sum(self.q_a, self.q_b))[0])

    def swapped(self) -> "HighOrderCM":
        """Relabel the parties: basis reordered to (X_B, P_B, X_A, P_A)."""
        perm = [2, 3, 0, 1]
        return HighOrderCM(
            orders=(self.orders[1], self.orders[0]),
            matrix=self.matrix[np.ix_(perm, perm)],
            q_a=self.q_b, q_b=self.q_a,
            means=self.means[perm])


def _omega(q: float) -> np.ndarray:
    return np.array([[0.0, q], [-q, 0.0]])


def _omega_direct_sum(q_a: float, q_b: float) -> np.ndarray:
    out = np.zeros((4, 4))
    out[:2, :2] = _omega(q_a)
    out[2:, 2:] = _omega(q_b)
    return out


@dataclass(frozen=True)
class StandardFormCM:
    """Standard form diag blocks nI, mI, correlation diag(c1, c2)."""

    n: float
    m: float
    c1: float
    c2: float
    q_b: float

    def __post_init__(self):
        if self.n <= 0 or self.m <= 0:
            raise ValueError("diagonal block parameters must be positive")

    def matrix(self) -> np.ndarray:
        n, m, c1, c2 = self.n, self.m, self.c1, self.c2
        return np.array([
            [n, 0.0, c1, 0.0],
            [0.0, n, 0.0, c2],
            [c1, 0.0, m, 0.0],
            [0.0, c2, 0.0, m],
        ])

    def principal_minors_ok(self) -> bool:
        return self.n * self.m >= self.c1 ** 2 and self.n * self.m >= self.c2 ** 2


@dataclass(frozen=True)
class LocalTransformReport:
    """Rotations/squeezings applied to reach standard form, plus the residual."""

    rotation_a: np.ndarray
    rotation_b: np.ndarray
    squeeze_a: float
    squeeze_b: float
    correlation_rotation_a: np.ndarray
    correlation_rotation_b: np.ndarray
    residual: float
    used_squeezing: bool


def build_cm(state: StateVector | DensityOperator, k: int, l: int) -> HighOrderCM:
    """High-order covariance matrix of a two-mode state for orders (k, l)."""
    layout = state.layout
    if layout.n_modes != 2:
        raise ValueError("high-order CM is defined for two-mode states")
    tail = state.top_level_population()
    if tail.max() > TOP_LEVEL_TOL:
        warnings.warn(
            f"top-level population {tail.max():.2e}; CM entries may be corrupted",
            TruncationWarning, stacklevel=2)
    ops = [
        ho_quadrature(layout, 0, k, "X"),
        ho_quadrature(layout, 0, k, "P"),
        ho_quadrature(layout, 1, l, "X"),
        ho_quadrature(layout, 1, l, "P"),
    ]
    means = np.array([expectation(o, state).real for o in ops])
    v = np.zeros((4, 4))
    for i in range(4):
        for j in range(i, 4):
            prod = ops[i].matrix @ ops[j].matrix
            sym = 0.5 * (prod + prod.conj().T)
            moment = expectation(ModeOperator(layout, sym.tocsr(), hermitian=True),
                                 state).real
            v[i, j] = v[j, i] = moment - means[i] * means[j]
    return HighOrderCM(
        orders=(k, l), matrix=v,
        q_a=commutator_factor(state, 0, k),
        q_b=commutator_factor(state, 1, l),
        means=means)


def _signed_svd(c: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """c = R1 @ diag(c1, c2) @ R2.T with proper rotations; c1 >= |c2|."""
    u, s, vt = np.linalg.svd(c)
    v = vt.T
    du, dv = np.linalg.det(u), np.linalg.det(v)
    flip_u = np.diag([1.0, du])
    flip_v = np.diag([1.0, dv])
    r1 = u @ flip_u
    r2 = v @ flip_v
    diag = np.diag([s[0], du * dv * s[1]])
    return r1, diag, r2


def standard_form(cm: HighOrderCM) -> tuple[StandardFormCM, LocalTransformReport]:
    """Reduce to diag blocks nI, mI and diagonal correlation block.

    Local rotations diagonalize each party's block; if a block is not already
    proportional to the identity a local symplectic squeezing (det 1, leaving
    the commutator factors invariant) makes it isotropic. A final signed SVD
    diagonalizes the correlation block.
    """
    v = cm.matrix.copy()
    blocks = [v[:2, :2], v[2:, 2:]]
    rots, squeezes = [], []
    used_squeezing = False
    for blk in blocks:
        evals, evecs = np.linalg.eigh(blk)
        if np.linalg.det(evecs) < 0:
            evecs = evecs[:, ::-1]
            evals = evals[::-1]
        rots.append(evecs.T)
        if evals.min() <= 0:
            raise ValueError("party block of the CM is not positive definite")
        s = (evals[1] / evals[0]) ** 0.25 if abs(evals[1] - evals[0]) > 1e-14 else 1.0
        if s != 1.0:
            used_squeezing = True
        squeezes.append(s)
    t_a = np.diag([squeezes[0], 1.0 / squeezes[0]]) @ rots[0]
    t_b = np.diag([squeezes[1], 1.0 / squeezes[1]]) @ rots[1]
    big = np.zeros((4, 4))
    big[:2, :2] = t_a
    big[2:, 2:] = t_b
    v = big @ v @ big.T
    r1, diag, r2 = _signed_svd(v[:2, 2:])
    big2 = np.zeros((4, 4))
    big2[:2, :2] = r1.T
    big2[2:, 2:] = r2.T
    v = big2 @ v @ big2.T
    n = 0.5 * (v[0, 0] + v[1, 1])
    m = 0.5 * (v[2, 2] + v[3, 3])
    sf = StandardFormCM(n=n, m=m, c1=v[0, 2], c2=v[1, 3], q_b=cm.q_b)
    residual = float(np.max(np.abs(v - sf.matrix())))
    report = LocalTransformReport(
        rotation_a=rots[0], rotation_b=rots[1],
        squeeze_a=squeezes[0], squeeze_b=squeezes[1],
        correlation_rotation_a=r1.T, correlation_rotation_b=r2.T,
        residual=residual, used_squeezing=used_squeezing)
    if residual > 1e-8:
        warnings.warn(f"standard-form residual {residual:.2e} above 1e-8",
                      TruncationWarning, stacklevel=2)
    return sf, report
