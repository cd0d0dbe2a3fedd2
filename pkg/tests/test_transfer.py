import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqsl3.core import SpectralPoint
from uqsl3.transfer import (
    Chain,
    RelationReport,
    antisymmetry_residual,
    bttot_residual,
    commutativity_residual,
    fusion_closure_residual,
    identity_residual,
    jacobi_trudi_residual,
    mixed_tq_residual,
    octct_residual,
    params_digest,
    perm_sign,
    t_from_q,
    t_polynomial_part,
    tls_residual,
    tq_residual,
    tt_residual,
    ttilde_from_q,
    twtt_residual,
    vanishing_residual,
    weight_block_residual,
    wronskian_residual,
)
from conftest import ZETA, ZETA_B, random_eta

TOL = 1e-7


def test_identity_from_Q_determinant(params, eta1):
    assert identity_residual(ZETA, eta1, params).residual < TOL
    assert identity_residual(ZETA, eta1, params, barred=True).residual < TOL


def test_printed_sign_gives_minus_identity(params, eta1):
    # the printed orientation of C_i flips the sign of T^(0,0,0)
    T0 = Chain(params, eta1, convention="printed").T((0, 0, 0), ZETA)
    np.testing.assert_allclose(T0, -np.eye(3), atol=1e-9)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_wronskian(params, eta1, i):
    assert wronskian_residual(i, ZETA, eta1, params).passed


def test_wronskian_control_with_wrong_shift(params, eta1):
    assert wronskian_residual(1, ZETA, eta1, params, shift=1.5).residual > 1e-2


@given(st.floats(-0.6, 0.6), st.floats(-3, 3))
@settings(max_examples=6, deadline=None)
def test_wronskian_at_random_points(params, eta1, re, im):
    assert wronskian_residual(2, SpectralPoint(complex(re, im)), eta1, params).residual < TOL


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("barred", [False, True])
def test_tq(params, eta1, k, barred):
    assert tq_residual(k, barred, ZETA, eta1, params).residual < TOL
    assert tq_residual(k, barred, ZETA, eta1, params, polynomial=True).residual < TOL


@pytest.mark.parametrize("variant", ["t100", "t110"])
def test_mixed_tq(params, eta1, variant):
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            if i != j:
                assert mixed_tq_residual(variant, i, j, ZETA, eta1, params).residual < TOL


@pytest.mark.parametrize("variant,data", [("fr1", 2), ("fr2", 3), ("fr3", (3, 1)), ("pjt1", (3, 2)),
                                          ("pjt2", 3), ("pjt3", 3), ("pjt4", 3)])
def test_tt_relations(params, eta1, variant, data):
    assert tt_residual(variant, data, ZETA, eta1, params).residual < TOL


def test_generic_weight_tt(params, eta1):
    rep = tt_residual("utt", (2.3, 1.1j, 0.4, -1, 3, 1.5), ZETA, eta1, params, barred=True)
    assert rep.residual < TOL


@pytest.mark.parametrize("l1,l2", [(1, 0), (1, 1), (2, 1), (2, 2)])
def test_jacobi_trudi(params, eta1, l1, l2):
    assert jacobi_trudi_residual(l1, l2, ZETA, eta1, params).residual < TOL


@pytest.mark.parametrize("which", ["row", "column"])
def test_barred_unbarred_link(params, eta1, which):
    assert bttot_residual(2, which, ZETA, eta1, params, polynomial=True).residual < TOL


def test_barred_unbarred_link_control(params, eta1):
    assert bttot_residual(1, "row", ZETA, eta1, params, shift_exponent=2).residual > 1e-2


@pytest.mark.parametrize("which", ["100", "110"])
def test_octct(params, eta1, which):
    assert octct_residual(which, ZETA, eta1, params).residual < TOL


def test_shift_and_weight_relations(params, eta1):
    assert tls_residual((1, 0, 0), 0.7 + 0.2j, ZETA, eta1, params).residual < TOL
    assert twtt_residual((1, 0.3, 0), ZETA, eta1, params).residual < TOL


def test_antisymmetry_and_equal_columns(params, eta1):
    assert antisymmetry_residual((1, 0, 0), (1, 0, 2), ZETA, eta1, params).residual < 1e-8
    assert vanishing_residual((0, 1, 0), ZETA, eta1, params).residual < 1e-8
    assert vanishing_residual((0, 1, 0), ZETA, eta1, params, barred=True).residual < 1e-8


def test_fusion_recursion_closes(params, eta1):
    assert fusion_closure_residual(3, ZETA, eta1, params).residual < TOL


def test_commutativity_and_weight_blocks(params, eta2):
    assert commutativity_residual([ZETA, ZETA_B], eta2, params).residual < TOL
    assert weight_block_residual([ZETA, ZETA_B], eta2, params).residual < 1e-9


def test_product_of_Q_is_order_independent(params, eta2):
    a = ttilde_from_q((1, 0, 0), ZETA, eta2, params).data
    b = ttilde_from_q((1, 0, 0), ZETA, eta2, params, order=(3, 1, 2)).data
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9 * np.linalg.norm(a))


def test_T_operator_carries_tail(params, eta1):
    T = t_from_q((1, 0, 0), ZETA, eta1, params)
    assert T.data.shape == (3, 3) and 0 < T.tail < 1e-10


def test_polynomial_part_of_T(params, eta1):
    fit = t_polynomial_part((1, 0, 0), eta1, params)
    assert fit.certified and fit.residual < 1e-8


@pytest.mark.parametrize("n", [1, 2])
def test_polynomial_part_of_T000_closed_form(params, n):
    # The three f3 factors telescope to 1/(1 - z), leaving
    # prod_k (eta_k^{s/2} x^{-1} - eta_k^{-s/2} x) times the identity.
    eta = random_eta(n)
    fit = t_polynomial_part((0, 0, 0), eta, params)
    assert fit.certified and fit.window == n
    poly = np.array([1.0 + 0j])
    for e in eta:
        a = np.exp(params.s_total * e.w / 2)
        poly = np.convolve(poly, [-1 / a, a])
    eye = np.eye(3**n)
    for k, c in zip(range(n, -n - 1, -2), poly):
        np.testing.assert_allclose(fit.coeffs[k], c * eye, atol=1e-10)
    for k in range(-n + 1, n, 2):
        np.testing.assert_allclose(fit.coeffs[k], 0, atol=1e-10)


def test_report_pass_requires_small_tail():
    assert RelationReport("x", "d", 1e-9, 1e-9, 1e-7).passed
    assert not RelationReport("x", "d", 1e-9, 1e-6, 1e-7).passed
    assert not RelationReport("x", "d", float("nan"), 0.0, 1e-7).passed


def test_digest_is_stable(params, eta1):
    assert params_digest(params, eta1) == params_digest(params, list(eta1))
    assert params_digest(params, eta1) != params_digest(params.replace(cutoff=18), eta1)


@given(st.permutations([0, 1, 2]))
def test_perm_sign_is_multiplicative(p):
    swap = [p[1], p[0], p[2]]
    assert perm_sign(swap) == -perm_sign(p)
