import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqsl3.core import ConvergenceError, SpectralPoint
from uqsl3.reps import (
    LOOP_LABELS,
    Weight,
    bgg_character_residual,
    finite_character,
    fundamental_images,
    map_label,
    mvdp_residual,
    oeqd_residual,
    pi_fund,
    verma_action,
    verma_character,
    verma_character_truncated,
    weyl_affine_orbit,
)
from conftest import ZETA, gl3_relation_defects


def _defect(lhs, rhs) -> float:
    if isinstance(lhs, np.ndarray):
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
        return float(np.linalg.norm(lhs - rhs) / scale) if scale else 0.0
    diff = lhs - rhs
    cols = diff.exact
    scale = max(np.linalg.norm(lhs.data[:, cols]), np.linalg.norm(rhs.data[:, cols]))
    return float(np.linalg.norm(diff.data[:, cols]) / scale) if scale else 0.0


@pytest.mark.parametrize("weight_id", [(1, 0, 0), (1, 1, 0)])
def test_fundamental_images_satisfy_gl3_relations(weight_id, params):
    pairs = gl3_relation_defects(lambda g, nu: pi_fund(weight_id, g, params, nu), params)
    for name, (lhs, rhs) in pairs.items():
        assert _defect(lhs, rhs) < 1e-14, name


@pytest.mark.parametrize("lam", [(0, 0, 0), (1.3 + 0.2j, 0.4, -0.5j), (2, 1, 0)])
def test_verma_action_satisfies_gl3_relations(lam, params):
    pairs = gl3_relation_defects(lambda g, nu: verma_action(lam, g, 4, params, nu), params)
    for name, (lhs, rhs) in pairs.items():
        assert _defect(lhs, rhs) < 1e-13, name


def test_verma_highest_vector_is_annihilated(params):
    for g in ("E1", "E2", "E3"):
        op = verma_action((0.3, -0.2, 0.1), g, 3, params)
        np.testing.assert_array_equal(op.data[:, 0], 0)


def test_fundamental_weight_table(params):
    q = params.q
    np.testing.assert_array_equal(pi_fund((1, 0, 0), "E1", params), np.outer(np.eye(3)[0], np.eye(3)[1]))
    np.testing.assert_allclose(np.diag(pi_fund((1, 1, 0), "qG3", params, 1.0)), [1, q, q])


def test_sigma_has_order_three_and_tau_is_involution():
    for lab in LOOP_LABELS:
        assert map_label(lab, 3) == lab
        assert map_label(map_label(lab, tau=True), tau=True) == lab


def test_dual_with_conjugation_reproduces_barred_images(params):
    assert oeqd_residual(params, ZETA) < 1e-12


@given(st.floats(-1, 1), st.floats(-3, 3))
@settings(max_examples=15, deadline=None)
def test_dual_identity_holds_for_any_spectral_point(params, re, im):
    assert oeqd_residual(params, SpectralPoint(complex(re, im))) < 1e-12


def test_inverse_partial_transpose_intertwines_dual(params):
    assert mvdp_residual(params, ZETA, SpectralPoint(-0.2 + 0.5j)) < 1e-10


def test_weyl_orbit_has_six_signed_terms():
    orbit = weyl_affine_orbit(Weight((1, 0, 0)))
    assert len(orbit) == 6
    assert sum(sign for sign, _ in orbit) == 0


@pytest.mark.parametrize("lam", [(1, 0, 0), (1, 1, 0), (2, 1, 0)])
def test_finite_character_dimension(params, lam):
    # at nu = 0 the character counts states: 3, 3, 8
    dims = {(1, 0, 0): 3, (1, 1, 0): 3, (2, 1, 0): 8}
    assert abs(finite_character(lam, (0, 0, 0), params) - dims[lam]) < 1e-12


def test_verma_character_matches_truncated_sum(params):
    nu = (0.1, 1.5, 3.0)
    closed = verma_character((0.2, 0.1, 0), nu, params)
    summed = verma_character_truncated((0.2, 0.1, 0), nu, params, 80)
    assert abs(closed - summed) < 1e-10 * abs(closed)


@given(
    st.sampled_from([(0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 0, 0), (2, 1, 0), (3, 1, 0)]),
    st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.floats(-1, 1),
)
@settings(max_examples=30, deadline=None)
def test_bgg_identity_property(params, lam, a, b, c):
    nu = (c, c + a, c + a + b)
    res = bgg_character_residual(lam, nu, params)
    assert abs(res) < 1e-9 * abs(finite_character(lam, nu, params))


def test_bgg_rejects_divergent_point(params):
    with pytest.raises(ConvergenceError):
        bgg_character_residual((1, 0, 0), (1.0, 0.0, -1.0), params)


def test_loop_images_are_complete(params):
    assert set(fundamental_images(params)) == set(LOOP_LABELS)
