import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqsl3.chain import (
    ChainOp,
    DegenerateTwistError,
    boxtimes,
    cartan_field,
    covariance_residual,
    homogeneous,
    mode_reps,
    q_operator,
    q_polynomial_part,
    qbar_operator,
)
from uqsl3.core import ConvergenceError, SpectralPoint
from conftest import ZETA, golden_params


@pytest.mark.parametrize("i", [1, 2, 3])
@pytest.mark.parametrize("barred", [False, True])
def test_cyclic_covariance(params, eta1, i, barred):
    assert covariance_residual(i, ZETA, eta1, params, barred=barred) < 1e-12


def test_covariance_two_sites(params, eta2):
    assert covariance_residual(1, ZETA, eta2, params) < 1e-11


@pytest.mark.parametrize("i", [1, 2, 3])
@pytest.mark.parametrize("barred", [False, True])
def test_polynomial_part_certifies(params, eta1, i, barred):
    fit = q_polynomial_part(i, eta1, params, barred=barred)
    assert fit.certified and fit.residual < 1e-8


@pytest.mark.parametrize("i", [1, 2, 3])
@pytest.mark.parametrize("barred", [False, True])
def test_keeping_f3_factors_breaks_certification(params, eta1, i, barred):
    window = q_polynomial_part(i, eta1, params, barred=barred).window
    fit = q_polynomial_part(i, eta1, params, barred=barred, strip_f3=False, window=window)
    assert not fit.certified and fit.residual > 1e-2


def test_trace_certificate_is_small(params, eta1):
    Q = q_operator(1, ZETA, eta1, params)
    assert Q.tail < 1e-12
    assert Q.data.shape == (3, 3)


def test_inadmissible_twist_raises(eta1):
    p = golden_params(phi=(0.31, -0.17))
    with pytest.raises(ConvergenceError):
        q_operator(1, ZETA, eta1, p)


def test_degenerate_twist_raises():
    p = golden_params(phi=(0.0, 0.0))
    with pytest.raises(DegenerateTwistError):
        cartan_field(1, p).C()


def test_mode_representations_are_opposite_for_barred(params):
    assert mode_reps(1, False, params) == tuple(-r for r in mode_reps(1, True, params))


def test_Q_and_Qbar_commute_at_two_points(params, eta2):
    A = q_operator(2, ZETA, eta2, params).data
    B = qbar_operator(3, SpectralPoint(-0.2 + 0.5j), eta2, params).data
    assert np.linalg.norm(A @ B - B @ A) < 1e-9 * np.linalg.norm(A) * np.linalg.norm(B)


@given(st.integers(1, 3))
@settings(max_examples=3, deadline=None)
def test_weight_labels_sum_to_site_count(n):
    labels = cartan_field(n, golden_params()).weight_labels()
    assert labels.shape == (3**n, 2)
    # h1 + h2 ranges over -n..n
    assert np.abs(labels.sum(axis=1)).max() <= n


def test_boxtimes_matches_kron_for_scalars():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3, 1, 1))
    b = rng.normal(size=(3, 3, 1, 1))
    np.testing.assert_allclose(boxtimes(a, b)[:, :, 0, 0], np.kron(a[:, :, 0, 0], b[:, :, 0, 0]))


def test_chain_op_tracks_tail():
    A = ChainOp(1, np.eye(3), 1e-10)
    B = ChainOp(1, 2 * np.eye(3), 2e-10)
    assert (A @ B).tail == pytest.approx(3e-10)
    with pytest.raises(ValueError):
        ChainOp(2, np.eye(3))


def test_homogeneous_points():
    assert all(e.w == 0 for e in homogeneous(3))
