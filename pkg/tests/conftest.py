"""Shared fixtures; expensive states are built once per session."""

import warnings

import pytest

import ngsteer as ng
from ngsteer.fock import TruncationWarning


@pytest.fixture(scope="session")
def spdc_03():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return ng.spdc_state(ng.SpdcParams(xi=0.3))


@pytest.fixture(scope="session")
def spdc_06():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return ng.spdc_state(ng.SpdcParams(xi=0.6, cutoff_a=32, cutoff_b=64))


@pytest.fixture(scope="session")
def tmsv_r1():
    return ng.tmsv(1.0, (30, 30))


@pytest.fixture(scope="session")
def subtracted_07():
    from ngsteer.channels import coherent_subtract, pure_loss

    psi = ng.tmsv(1.0, (30, 30))
    rho = pure_loss(psi, 0, 0.7)
    rho = pure_loss(rho, 1, 0.7)
    out, _ = coherent_subtract(rho)
    return out


@pytest.fixture(scope="session")
def mixture_07():
    return ng.mixture_state(
        ng.MixtureParams(p_tmsv=0.7, r=0.5, r_a=0.5, r_b=0.5), (24, 24))
