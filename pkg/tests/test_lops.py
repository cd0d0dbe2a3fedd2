import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqsl3.core import SpectralPoint
from uqsl3.lops import (
    build_L,
    dual_L_residual,
    fundamental_loop_image,
    intertwining_residual,
    o_matrix,
    p_matrix,
    rho_osc_image,
    twist_exponents,
    twist_exponents_from_rho,
    zeta_D_matrix,
)
from conftest import ZETA


@pytest.mark.parametrize("i", [1, 2, 3])
@pytest.mark.parametrize("barred", [False, True])
def test_L_operator_intertwines(params, i, barred):
    assert intertwining_residual(i, barred, ZETA, params, cutoff=10) < 1e-9


@pytest.mark.parametrize("i", [1, 2, 3])
def test_dual_L_relation(params, i):
    assert dual_L_residual(i, ZETA, params, cutoff=10) < 1e-9


def test_dual_L_detects_wrong_shift(params):
    assert dual_L_residual(1, ZETA, params, cutoff=10, shift=-2.0) > 1e-2


@given(st.floats(-1, 1), st.floats(-3, 3))
@settings(max_examples=8, deadline=None)
def test_intertwining_for_any_spectral_point(params, re, im):
    assert intertwining_residual(2, False, SpectralPoint(complex(re, im)), params, cutoff=8) < 1e-9


@pytest.mark.parametrize("i", [1, 2, 3])
@pytest.mark.parametrize("barred", [False, True])
def test_twist_exponents_agree_with_rho_route(params, i, barred):
    np.testing.assert_allclose(twist_exponents(i, barred, params), twist_exponents_from_rho(i, barred, params),
                               atol=1e-12)


def test_o_matrix_has_order_three_up_to_scalar(params):
    O = o_matrix(params)
    O3 = O @ O @ O
    np.testing.assert_allclose(O3, O3[0, 0] * np.eye(3), atol=1e-14)


def test_o_matrix_realizes_cyclic_shift(params):
    O, Oinv = o_matrix(params), np.linalg.inv(o_matrix(params))
    for head in ("e", "h"):
        for j in range(3):
            lhs = O @ fundamental_loop_image(f"{head}{j}", params) @ Oinv
            rhs = fundamental_loop_image(f"{head}{(j + 1) % 3}", params)
            np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_p_matrix_is_skew_diagonal(params):
    P = p_matrix(params)
    np.testing.assert_array_equal(np.fliplr(P) == 0, np.eye(3) == 0)


def test_zeta_D_inverse(params):
    A = zeta_D_matrix(1, ZETA, params)
    B = zeta_D_matrix(1, ZETA, params, inverse=True)
    np.testing.assert_allclose(A @ B, np.eye(3), atol=1e-14)


def test_L_shape_and_scalar_prefactor(params):
    L = build_L(1, False, ZETA, params, cutoff=5)
    assert L.full().shape == (3, 3, 25, 25)
    assert L.as_block().shape == (75, 75)
    assert np.isfinite(L.prefactor)


def test_rho_cartan_image_is_diagonal(params):
    op = rho_osc_image(1, False, "h1", params, nu=0.3, cutoff=5)
    np.testing.assert_array_equal(op.data, np.diag(np.diag(op.data)))
