"""Constructors for the non-Gaussian state families and reference states.

Covers two-mode squeezed vacuum, products of single-mode squeezed vacua,
their convex mixtures, degenerate three-photon down-conversion under a
classical undepleted pump, and ideal multi-component cat states.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock import (
    DensityOperator,
    HilbertLayout,
    ModeOperator,
    StateVector,
    TruncationWarning,
    TOP_LEVEL_TOL,
    evolve,
    ladder,
    vacuum,
)


@dataclass(frozen=True)
class SpdcParams:
    """Effective coupling xi = alpha_p * g * t; pump amplitude kept for provenance.

    headroom enlarges the integration cutoffs by that factor before the
    result is restricted back to (cutoff_a, cutoff_b). The cubic generator
    reflects amplitude off a hard truncation boundary, so integrating with
    headroom and then truncating approximates the infinite-dimensional state
    much better than integrating at the storage cutoffs directly.
    """

    xi: float
    cutoff_a: int = 24
    cutoff_b: int = 48
    alpha_p: float = 5.0
    headroom: float = 3.0

    def __post_init__(self):
        if self.xi < 0:
            raise ValueError("coupling strength must be >= 0")
        if self.cutoff_a < 2 or self.cutoff_b < 2:
            raise ValueError("cutoffs must be >= 2")
        if self.headroom < 1.0:
            raise ValueError("headroom must be >= 1")


@dataclass(frozen=True)
class MixtureParams:
    p_tmsv: float
    r: float
    r_a: float
    r_b: float

    def __post_init__(self):
        if not 0.0 <= self.p_tmsv <= 1.0:
            raise ValueError("mixing probability must lie in [0, 1]")
        if min(self.r, self.r_a, self.r_b) < 0:
            raise ValueError("squeezing parameters must be >= 0")


def _leakage_guard(state: StateVector, what: str) -> StateVector:
    tail = state.top_level_population()
    if tail.max() > TOP_LEVEL_TOL:
        warnings.warn(
            f"{what}: top-level population {tail.max():.2e} exceeds {TOP_LEVEL_TOL}; "
            "increase the cutoff", TruncationWarning, stacklevel=3)
    return state


def tmsv(r: float, cutoffs: tuple[int, int]) -> StateVector:
    """Two-mode squeezed vacuum, |psi> ~ sum_m tanh(r)^m |m, m>."""
    if r < 0:
        raise ValueError("squeezing must be >= 0")
    da, db = cutoffs
    layout = HilbertLayout((da, db))
    amp = np.zeros(layout.dim, dtype=complex)
    t = np.tanh(r)
    for m in range(min(da, db)):
        amp[m * db + m] = t ** m
    amp /= np.linalg.norm(amp)
    return _leakage_guard(StateVector(layout, amp), f"tmsv(r={r})")


def smsv(r: float, cutoff: int) -> StateVector:
    """Single-mode squeezed vacuum with even Fock support."""
    if r < 0:
        raise ValueError("squeezing must be >= 0")
    amp = np.zeros(cutoff, dtype=complex)
    t = np.tanh(r)
    for m in range((cutoff + 1) // 2):
        if 2 * m >= cutoff:
            break
        # tanh^m r * sqrt((2m)!) / (2^m m!)
        log_c = 0.5 * gammaln(2 * m + 1) - m * np.log(2.0) - gammaln(m + 1)
        amp[2 * m] = (t ** m) * np.exp(log_c)
    amp /= np.linalg.norm(amp)
    return _leakage_guard(StateVector(HilbertLayout((cutoff,)), amp), f"smsv(r={r})")


def smsv_product(r_a: float, r_b: float, cutoffs: tuple[int, int]) -> StateVector:
    from .fock import tensor

    return tensor(smsv(r_a, cutoffs[0]), smsv(r_b, cutoffs[1]))


def mixture_state(params: MixtureParams, cutoffs: tuple[int, int]) -> DensityOperator:
    """P |TMSV><TMSV| + (1-P) |SMSV_A x SMSV_B><...|."""
    p = params.p_tmsv
    psi_t = tmsv(params.r, cutoffs)
    psi_s = smsv_product(params.r_a, params.r_b, cutoffs)
    mat = (p * np.outer(psi_t.amplitudes, psi_t.amplitudes.conj())
           + (1 - p) * np.outer(psi_s.amplitudes, psi_s.amplitudes.conj()))
    return DensityOperator(psi_t.layout, mat)


def spdc_generator(layout: HilbertLayout, strength: float = 1.0) -> ModeOperator:
    """Anti-Hermitian generator strength * (a^dag b^dag^2 - a b^2)."""
    a = ladder(layout, 0)
    b = ladder(layout, 1)
    term = a.dagger() @ b.dagger() @ b.dagger()
    return strength * (term - term.dagger())


def spdc_state(params: SpdcParams) -> StateVector:
    """Down-converted two-mode state exp(xi (a^dag b^dag^2 - a b^2)) |0,0>."""
    layout = HilbertLayout((params.cutoff_a, params.cutoff_b))
    if params.xi == 0:
        return vacuum(layout)
    big_a = int(np.ceil(params.headroom * params.cutoff_a))
    big_b = int(np.ceil(params.headroom * params.cutoff_b))
    big_layout = HilbertLayout((big_a, big_b))
    gen = spdc_generator(big_layout)
    # substep heuristic keeps each polynomial step well inside convergence
    steps = max(1, int(np.ceil(params.xi / 0.1)))
    big = evolve(vacuum(big_layout), gen, params.xi, steps=steps)
    if big_layout == layout:
        return big
    amp = big.amplitudes.reshape(big_a, big_b)[:params.cutoff_a, :params.cutoff_b]
    amp = amp.flatten()
    norm = np.linalg.norm(amp)
    return _leakage_guard(StateVector(layout, amp / norm),
                          f"spdc_state(xi={params.xi})")


def coherent(alpha: complex, cutoff: int) -> StateVector:
    n = np.arange(cutoff)
    log_fact = gammaln(n + 1)
    amp = np.exp(-0.5 * abs(alpha) ** 2) * np.power(complex(alpha), n) / np.exp(0.5 * log_fact)
    return StateVector(HilbertLayout((cutoff,)), amp)


def ideal_cat(alpha: float, components: int, cutoff: int) -> StateVector:
    """Normalized |a>+|-a> (2 components) or |a>+|-a>-|ia>-|-ia> (4)."""
    if alpha < 0:
        raise ValueError("amplitude must be >= 0")
    if components == 2:
        amp = coherent(alpha, cutoff).amplitudes + coherent(-alpha, cutoff).amplitudes
    elif components == 4:
        amp = (coherent(alpha, cutoff).amplitudes
               + coherent(-alpha, cutoff).amplitudes
               - coherent(1j * alpha, cutoff).amplitudes
               - coherent(-1j * alpha, cutoff).amplitudes)
    else:
        raise ValueError("components must be 2 or 4")
    norm = np.linalg.norm(amp)
    if norm < 1e-12:
        raise ValueError("degenerate cat superposition (zero vector)")
    return _leakage_guard(StateVector(HilbertLayout((cutoff,)), amp / norm),
                          f"ideal_cat(alpha={alpha}, components={components})")
