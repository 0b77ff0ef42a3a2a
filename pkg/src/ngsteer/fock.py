"""Truncated Fock-space linear algebra.

States and operators live on a tensor product of single-mode Fock spaces,
each truncated at a caller-supplied cutoff. Mode 0 is the leftmost tensor
factor, so a two-mode amplitude vector reshapes to (dim_0, dim_1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

HERMITICITY_ATOL = 1e-10
NORM_RTOL = 1e-9
TOP_LEVEL_TOL = 1e-6


class LayoutMismatchError(ValueError):
    """Operands live on different Hilbert layouts."""


class TruncationWarning(UserWarning):
    """Significant population at the top Fock level of some mode."""


class ConvergenceError(RuntimeError):
    """Time stepping failed to conserve the norm within budget."""


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered per-mode truncation dimensions."""

    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        object.__setattr__(self, "mode_dims", dims)
        if len(dims) == 0:
            raise ValueError("layout needs at least one mode")
        if any(d < 2 for d in dims):
            raise ValueError(f"every mode dimension must be >= 2, got {dims}")

    @property
    def dim(self) -> int:
        return math.prod(self.mode_dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    def check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes}-mode layout")

    def embed(self, mat: sp.spmatrix | np.ndarray, mode: int) -> sp.csr_matrix:
        """Lift a single-mode matrix to the full tensor space (identity elsewhere)."""
        self.check_mode(mode)
        d = self.mode_dims[mode]
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match mode dim {d}")
        left = math.prod(self.mode_dims[:mode])
        right = math.prod(self.mode_dims[mode + 1:])
        out = sp.csr_matrix(mat)
        if left > 1:
            out = sp.kron(sp.identity(left, format="csr"), out, format="csr")
        if right > 1:
            out = sp.kron(out, sp.identity(right, format="csr"), format="csr")
        return out


def _check_same_layout(a, b):
    if a.layout != b.layout:
        raise LayoutMismatchError(f"layouts differ: {a.layout} vs {b.layout}")


@dataclass(frozen=True)
class StateVector:
    """Pure state on a truncated tensor-product Fock space."""

    layout: HilbertLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.layout.dim,):
            raise ValueError(f"amplitude length {amp.shape} != layout dim {self.layout.dim}")
        amp = amp.copy()
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n < 1e-15:
            raise ValueError("cannot normalize a (near-)zero vector")
        return StateVector(self.layout, self.amplitudes / n)

    def top_level_population(self) -> np.ndarray:
        """Summed probability of the top Fock level, per mode."""
        probs = np.abs(self.amplitudes) ** 2
        tensor = probs.reshape(self.layout.mode_dims)
        out = np.empty(self.layout.n_modes)
        for m in range(self.layout.n_modes):
            out[m] = np.take(tensor, -1, axis=m).sum()
        return out

    def to_density_operator(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Mixed state; Hermitian, unit trace when normalized."""

    layout: HilbertLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} != ({d}, {d})")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_ATOL:
            raise ValueError("density matrix is not Hermitian within 1e-10")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        t = self.trace
        if t < 1e-15:
            raise ValueError("cannot normalize a (near-)zero-trace operator")
        return DensityOperator(self.layout, self.matrix / t)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def top_level_population(self) -> np.ndarray:
        probs = np.abs(np.diag(self.matrix))
        tensor = probs.reshape(self.layout.mode_dims)
        out = np.empty(self.layout.n_modes)
        for m in range(self.layout.n_modes):
            out[m] = np.take(tensor, -1, axis=m).sum()
        return out


@dataclass(frozen=True)
class ModeOperator:
    """Sparse complex matrix acting on a declared Hilbert layout."""

    layout: HilbertLayout
    matrix: sp.csr_matrix = field(repr=False)
    hermitian: bool = False

    def __post_init__(self):
        mat = sp.csr_matrix(self.matrix, dtype=complex)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} != ({d}, {d})")
        if self.hermitian:
            drift = abs(mat - mat.conj().T)
            if drift.nnz and drift.max() > HERMITICITY_ATOL:
                raise ValueError("hermitian flag set but matrix is not Hermitian within 1e-10")
        object.__setattr__(self, "matrix", mat)

    def dagger(self) -> "ModeOperator":
        return ModeOperator(self.layout, self.matrix.conj().T.tocsr(), self.hermitian)

    def __matmul__(self, other: "ModeOperator") -> "ModeOperator":
        _check_same_layout(self, other)
        return ModeOperator(self.layout, self.matrix @ other.matrix)

    def __add__(self, other: "ModeOperator") -> "ModeOperator":
        _check_same_layout(self, other)
        return ModeOperator(self.layout, self.matrix + other.matrix,
                            self.hermitian and other.hermitian)

    def __sub__(self, other: "ModeOperator") -> "ModeOperator":
        _check_same_layout(self, other)
        return ModeOperator(self.layout, self.matrix - other.matrix,
                            self.hermitian and other.hermitian)

    def __mul__(self, scalar: complex) -> "ModeOperator":
        return ModeOperator(self.layout, self.matrix * scalar)

    __rmul__ = __mul__

    def power(self, k: int) -> "ModeOperator":
        if k < 1:
            raise ValueError("power must be >= 1")
        out = self.matrix
        for _ in range(k - 1):
            out = out @ self.matrix
        return ModeOperator(self.layout, out)

    def as_hermitian(self) -> "ModeOperator":
        return ModeOperator(self.layout, self.matrix, hermitian=True)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def destroy(dim: int) -> sp.csr_matrix:
    """Single-mode truncated annihilation matrix: <n-1|a|n> = sqrt(n)."""
    n = np.arange(1, dim)
    return sp.diags(np.sqrt(n), offsets=1, format="csr").astype(complex)


def ladder(layout: HilbertLayout, mode: int) -> ModeOperator:
    """Annihilation operator of one mode, embedded on the full tensor space."""
    layout.check_mode(mode)
    return ModeOperator(layout, layout.embed(destroy(layout.mode_dims[mode]), mode))


def number_op(layout: HilbertLayout, mode: int) -> ModeOperator:
    a = ladder(layout, mode)
    return (a.dagger() @ a).as_hermitian()


def identity_op(layout: HilbertLayout) -> ModeOperator:
    return ModeOperator(layout, sp.identity(layout.dim, format="csr", dtype=complex),
                        hermitian=True)


def basis_state(layout: HilbertLayout, occupations) -> StateVector:
    """Fock basis state |n_0, n_1, ...>."""
    occ = tuple(occupations)
    if len(occ) != layout.n_modes:
        raise ValueError("one occupation number per mode required")
    idx = 0
    for n, d in zip(occ, layout.mode_dims):
        if not 0 <= n < d:
            raise ValueError(f"occupation {n} exceeds cutoff {d}")
        idx = idx * d + n
    amp = np.zeros(layout.dim, dtype=complex)
    amp[idx] = 1.0
    return StateVector(layout, amp)


def vacuum(layout: HilbertLayout) -> StateVector:
    return basis_state(layout, (0,) * layout.n_modes)


def tensor(*states: StateVector) -> StateVector:
    """Tensor product of pure states, modes concatenated in argument order."""
    amp = states[0].amplitudes
    dims: tuple[int, ...] = states[0].layout.mode_dims
    for s in states[1:]:
        amp = np.kron(amp, s.amplitudes)
        dims = dims + s.layout.mode_dims
    return StateVector(HilbertLayout(dims), amp)


def tensor_density(*ops: DensityOperator) -> DensityOperator:
    mat = ops[0].matrix
    dims: tuple[int, ...] = ops[0].layout.mode_dims
    for o in ops[1:]:
        mat = np.kron(mat, o.matrix)
        dims = dims + o.layout.mode_dims
    return DensityOperator(HilbertLayout(dims), mat)


def expectation(op: ModeOperator, state: StateVector | DensityOperator) -> complex:
    """Tr[rho op], or <psi|op|psi>; real part only enforced by the caller."""
    _check_same_layout(op, state)
    if isinstance(state, StateVector):
        val = complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    else:
        # Tr[rho M] = sum_ij M_ij rho_ji
        val = complex(op.matrix.multiply(state.matrix.T).sum())
    if op.hermitian and abs(val.imag) > 1e-8:
        warnings.warn(f"Hermitian expectation has imaginary part {val.imag:.2e}",
                      TruncationWarning, stacklevel=2)
    return val


def real_expectation(op: ModeOperator, state) -> float:
    return expectation(op, state).real


def partial_trace(state: DensityOperator | StateVector, keep) -> DensityOperator:
    """Reduced density operator on the kept modes (order preserved)."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    layout = state.layout
    for m in keep:
        layout.check_mode(m)
    if isinstance(state, StateVector):
        rho = np.outer(state.amplitudes, state.amplitudes.conj())
    else:
        rho = state.matrix
    dims = layout.mode_dims
    n = layout.n_modes
    tensor_rho = rho.reshape(dims + dims)
    traced = [m for m in range(n) if m not in keep]
    for count, m in enumerate(traced):
        axis = m - sum(1 for t in traced[:count] if t < m)
        rank = tensor_rho.ndim // 2
        tensor_rho = np.trace(tensor_rho, axis1=axis, axis2=axis + rank)
    kept_dims = tuple(dims[m] for m in keep)
    d = math.prod(kept_dims)
    return DensityOperator(HilbertLayout(kept_dims), tensor_rho.reshape(d, d))


def hermitian_eig(op: ModeOperator) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and eigenvector columns of a Hermitian operator."""
    if not op.hermitian:
        raise ValueError("hermitian_eig requires the hermitian flag")
    vals, vecs = np.linalg.eigh(op.dense())
    return vals, vecs


def evolve(state: StateVector, generator: ModeOperator, duration: float,
           steps: int = 1, max_steps: int = 4096) -> StateVector:
    """Apply exp(duration * G) to the state for anti-Hermitian G.

    Uses the scipy polynomial-approximation action of the matrix exponential,
    doubling the substep count until the norm is conserved within 1e-9.
    """
    _check_same_layout(generator, state)
    g = generator.matrix
    drift = abs(g + g.conj().T)
    if drift.nnz and drift.max() > HERMITICITY_ATOL:
        raise ValueError("generator is not anti-Hermitian within 1e-10")
    if duration == 0:
        return state
    n0 = state.norm
    psi = state.amplitudes
    while steps <= max_steps:
        out = psi
        h = duration / steps
        for _ in range(steps):
            out = expm_multiply(g * h, out)
        if abs(np.linalg.norm(out) - n0) <= NORM_RTOL * n0:
            result = StateVector(state.layout, out)
            tail = result.top_level_population()
            if tail.max() > TOP_LEVEL_TOL:
                warnings.warn(
                    f"top-level population {tail.max():.2e} after evolution; "
                    "increase the cutoff", TruncationWarning, stacklevel=2)
            return result
        steps *= 2
    raise ConvergenceError(
        f"norm not conserved within {NORM_RTOL} after {max_steps} substeps")
