import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqsl3.core import ConvergenceError
from uqsl3.fock import (
    OscOp,
    OscillatorSpace,
    axiom_residual,
    chi_minus_ops,
    chi_plus_ops,
    diagonal_tail,
    embed,
    trace_regularized,
)
from conftest import GOLDEN_HBAR

HBAR = GOLDEN_HBAR


@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([1, -1]), st.integers(3, 20))
@settings(max_examples=40, deadline=None)
def test_oscillator_relations_on_interior(re, im, rep, D):
    assert axiom_residual(D, complex(re, im), HBAR, rep) < 1e-13


def test_chi_plus_ladder_entries():
    b, bdag, qN = chi_plus_ops(5, 1.0, HBAR)
    q = cmath.exp(HBAR)
    assert bdag.data[3, 2] == 1
    np.testing.assert_allclose(b.data[1, 2], q + 1 / q)
    np.testing.assert_allclose(np.diag(qN.data), q ** np.arange(5))


def test_chi_minus_number_operator():
    _, _, qN = chi_minus_ops(4, 1.0, HBAR)
    q = cmath.exp(HBAR)
    np.testing.assert_allclose(np.diag(qN.data), q ** -(np.arange(4) + 1.0))


def _random_nus(count, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        target = complex(math.log(rng.uniform(0.05, 0.9)), rng.uniform(0, 2 * np.pi))
        out.append(target / HBAR)
    return out


@pytest.mark.parametrize("nu", _random_nus(10))
def test_plus_trace_within_tail_bound(nu):
    _, _, qN = chi_plus_ops(14, nu, HBAR)
    value, tail = trace_regularized(qN)
    exact = 1 / (1 - cmath.exp(nu * HBAR))
    assert abs(value - exact) <= tail


@pytest.mark.parametrize("nu", _random_nus(4, seed=3))
def test_minus_trace_is_negative_continuation(nu):
    # the chi- trace converges for |q^-nu| < 1; it equals -1/(1 - q^nu)
    _, _, qN = chi_minus_ops(400, -nu, HBAR)
    value, tail = trace_regularized(qN)
    assert tail < 1e-12
    np.testing.assert_allclose(value, -1 / (1 - cmath.exp(-nu * HBAR)), rtol=1e-10)


def test_non_decaying_trace_raises():
    _, _, qN = chi_plus_ops(14, -1.0, HBAR)
    with pytest.raises(ConvergenceError):
        trace_regularized(qN)


def test_tail_zero_for_zero_diagonal():
    assert diagonal_tail(np.zeros(9), (3, 3)) == 0.0


def test_embed_matches_kron():
    b, bdag, _ = chi_plus_ops(3, 1.0, HBAR)
    e = embed([b, bdag])
    np.testing.assert_array_equal(e.data, np.kron(b.data, bdag.data))
    assert e.dims == (3, 3)


def test_osc_op_dimension_mismatch():
    with pytest.raises(ValueError):
        OscOp.identity((3,)) @ OscOp.identity((4,))


def test_space_modes_commute():
    sp = OscillatorSpace((4, 4), (1, -1), HBAR)
    a = sp.b(0) @ sp.bdag(1)
    b = sp.bdag(1) @ sp.b(0)
    np.testing.assert_allclose(a, b)
