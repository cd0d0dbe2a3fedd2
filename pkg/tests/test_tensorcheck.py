import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqsl3.core import Params, SpectralPoint
from uqsl3.tensorcheck import (
    CheckSummary,
    CoverageError,
    appendixB_checks,
    appendixC_checks,
    basic_limit_ratio,
    basic_rep_checks,
    coassociativity_residual,
    coproduct_image,
    e1x1_interchanged_residual,
    oscillator_identity_residual,
    oscillator_rep,
    tensor_rep,
)
from conftest import GOLDEN_HBAR, GOLDEN_PHI, TENSOR_ZETAS

Z3, Z2, Z1 = TENSOR_ZETAS


@pytest.fixture(scope="module")
def summary_b(params):
    return appendixB_checks(Z3, Z2, params, cutoff=5)


@pytest.fixture(scope="module")
def summary_c(params):
    return appendixC_checks(Z3, Z2, Z1, params, cutoff=3)


def test_four_oscillator_checks(summary_b):
    summary_b.require_coverage()
    assert summary_b.max_residual < 1e-10
    for key in ("generators", "cartan", "e0", "e1", "e2", "ex", "y", "movement", "serre"):
        assert summary_b.counts[key] > 0, key


def test_six_oscillator_checks(summary_c):
    summary_c.require_coverage()
    assert summary_c.max_residual < 1e-9
    for key in ("coassociativity", "z", "filtration", "quotient", "rebased_e0", "rescaled_e2"):
        assert summary_c.counts[key] > 0, key


@pytest.mark.slow
def test_six_oscillator_checks_larger_cutoff(params):
    assert appendixC_checks(Z3, Z2, Z1, params, cutoff=4).max_residual < 1e-9


def test_interchanged_intermediate_identity_fails(params):
    # the variant with z1 and z2 swapped is off at order one
    assert e1x1_interchanged_residual(Z3, Z2, Z1, params) > 0.5


def test_basic_representation(params):
    assert basic_rep_checks(params).max_residual < 1e-12


def test_limit_gap_shrinks_by_q_power_when_q_large():
    p = Params(hbar=-GOLDEN_HBAR.real + 1j * GOLDEN_HBAR.imag, phi=GOLDEN_PHI)
    ratio = basic_limit_ratio(p, 6, 8)
    np.testing.assert_allclose(ratio, abs(p.q) ** -4, rtol=1e-6)


def test_limit_gap_grows_when_q_small(params):
    assert basic_limit_ratio(params, 6, 8) > 1


def test_oscillator_power_identities(params):
    assert oscillator_identity_residual(params) < 1e-13


@given(st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=5, deadline=None)
def test_coproduct_is_coassociative(params, a, b):
    nu = complex(a, b)
    reps = [oscillator_rep(i, False, SpectralPoint(0.1 * i + 0.2j), params, cutoff=3) for i in (1, 2, 3)]
    assert coassociativity_residual(*reps, nu=nu) < 1e-13


def test_coproduct_of_cartan_is_product(params):
    a = oscillator_rep(1, False, Z3, params, cutoff=3)
    b = oscillator_rep(2, False, Z2, params, cutoff=3)
    ab = tensor_rep(a, b)
    direct = np.kron(a.qh(1, 0.4).toarray(), b.qh(1, 0.4).toarray())
    np.testing.assert_allclose(coproduct_image("h1", a, b, 0.4).data, direct, atol=1e-14)
    np.testing.assert_allclose(ab.qh_diag(1, 0.4), np.diag(direct), atol=1e-14)


def test_unknown_generator_label(params):
    with pytest.raises(ValueError):
        oscillator_rep(1, False, Z3, params, cutoff=3).image("f1")


def test_summary_coverage_and_nan_skips():
    s = CheckSummary()
    s.record("a", [1e-15, math.nan])
    s.record("b", [math.nan])
    assert s.counts == {"a": 1, "b": 0}
    assert s.max_residual == 1e-15
    with pytest.raises(CoverageError):
        s.require_coverage()
