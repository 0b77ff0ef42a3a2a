"""Truncated Fock-space certification of non-Gaussian EPR steering."""

__version__ = "0.1.0"

from .fock import (
    DensityOperator,
    HilbertLayout,
    ModeOperator,
    StateVector,
    TruncationWarning,
    basis_state,
    evolve,
    expectation,
    hermitian_eig,
    ladder,
    number_op,
    partial_trace,
    tensor,
    tensor_density,
    vacuum,
)
from .states import (
    MixtureParams,
    SpdcParams,
    coherent,
    ideal_cat,
    mixture_state,
    smsv,
    smsv_product,
    spdc_generator,
    spdc_state,
    tmsv,
)
from .channels import coherent_subtract, pure_loss
from .quadratures import (
    HighOrderCM,
    StandardFormCM,
    build_cm,
    commutator_factor,
    ho_quadrature,
    standard_form,
)
from .criteria import (
    SteeringDirection,
    SteeringReport,
    hierarchy_check,
    s_cm,
    s_hz,
    s_lr,
    sample_standard_forms,
    steering_report,
    w_hz,
    w_lr,
)
from .conditioning import (
    ConditionalEnsemble,
    WignerGrid,
    conditional_state,
    conditional_state_at_value,
    fidelity,
    measure_ho_quadrature,
    s_cr,
    wigner,
)
