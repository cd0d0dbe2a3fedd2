import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqsl3.core import ConvergenceError, Params, SpectralPoint, b_eval, exp_f3, f3_eval, q_number
from conftest import GOLDEN_HBAR, golden_params

finite = st.floats(-2, 2, allow_nan=False)


def test_third_twist_component_is_derived():
    p = Params(hbar=GOLDEN_HBAR, phi=(1.0, 2.0))
    assert p.phi[2] == -3.0


def test_inconsistent_twist_rejected():
    with pytest.raises(ValueError):
        Params(hbar=GOLDEN_HBAR, phi=(1.0, 2.0, 0.5))


@pytest.mark.parametrize("bad", [dict(cutoff=1), dict(tol=0.0), dict(s=(0, 0, 0)), dict(s=(1, -1, 1))])
def test_invalid_params_rejected(bad):
    with pytest.raises(ValueError):
        Params(hbar=GOLDEN_HBAR, **bad)


def test_unit_modulus_q_rejected():
    with pytest.raises(ValueError):
        Params(hbar=0.3j)


def test_near_root_of_unity_warns():
    with pytest.warns(RuntimeWarning):
        Params(hbar=1e-9 + 2j * math.pi / 3 + 1e-9)


@given(finite, finite)
def test_q_number_is_odd_and_inversion_symmetric(re, im):
    q = cmath.exp(GOLDEN_HBAR)
    nu = complex(re, im)
    assert abs(q_number(-nu, q) + q_number(nu, q)) < 1e-12 * max(1, abs(q_number(nu, q)))
    assert abs(q_number(nu, 1 / q) - q_number(nu, q)) < 1e-10 * max(1, abs(q_number(nu, q)))


def test_small_q_numbers():
    q = cmath.exp(GOLDEN_HBAR)
    assert abs(q_number(1, q) - 1) < 1e-15
    assert abs(q_number(2, q) - (q + 1 / q)) < 1e-14
    assert abs(q_number(3, q) - (q**2 + 1 + q**-2)) < 1e-13


@given(st.floats(0, 0.85), st.floats(0, 2 * math.pi))
@settings(max_examples=40)
def test_exp_f3_product_matches_series(r, theta):
    p = golden_params()
    z = r * cmath.exp(1j * theta)
    series, tail = f3_eval(z, p.q, 400)
    assert tail < 1e-15
    np.testing.assert_allclose(exp_f3(z, p), cmath.exp(series), rtol=1e-12)


@given(st.floats(0.1, 3.0), st.floats(0, 2 * math.pi))
@settings(max_examples=30)
def test_exp_f3_is_invariant_under_q_inversion(r, theta):
    p = golden_params()
    inv = Params(hbar=-p.hbar)
    z = r * cmath.exp(1j * theta)
    np.testing.assert_allclose(exp_f3(z, p), exp_f3(z, inv), rtol=1e-12)


def test_exp_f3_difference_equation():
    # exp(f3(z)) / exp(f3(q^6 z)) = (1 - q^4 z) / (1 - q^2 z) from the product form
    p = golden_params()
    q = p.q
    for z in (0.3 + 0.1j, 2.5 - 1.0j):
        ratio = exp_f3(z, p) / exp_f3(q**6 * z, p)
        np.testing.assert_allclose(ratio, (1 - q**4 * z) / (1 - q**2 * z), rtol=1e-13)


def test_f3_series_diverges_outside_disc():
    with pytest.raises(ConvergenceError):
        f3_eval(1.2, 0.6, 10)


def test_b_function():
    assert b_eval(2.0) == 1.5
    with pytest.raises(ZeroDivisionError):
        b_eval(0)


@given(finite, finite, finite, finite)
def test_spectral_shift_composes(re, im, a, b):
    p = golden_params()
    z = SpectralPoint(complex(re, im))
    two = z.shift(a, p).shift(b, p)
    one = z.shift(a + b, p)
    assert abs(two.w - one.w) < 1e-12


def test_spectral_power():
    z = SpectralPoint(0.3 + 0.2j)
    np.testing.assert_allclose(z.power(2), z.zeta**2)
    np.testing.assert_allclose(z.times(z.over(z)).w, z.w)
