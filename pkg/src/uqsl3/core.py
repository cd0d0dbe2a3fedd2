"""Scalar arithmetic shared by every other module.

Spectral parameters are carried as logarithms (``SpectralPoint.w``) so that
fractional powers such as ``zeta**(s/2)`` and shifts ``q**(a/s) * zeta`` are
single valued. Powers of ``q`` with non-integer exponents are always formed
as ``exp(a * hbar)`` for the same reason.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "Params",
    "SpectralPoint",
    "ConvergenceError",
    "q_number",
    "f3_eval",
    "exp_f3",
    "b_eval",
    "spectral_shift",
]

_ROOT_OF_UNITY_ORDER = 24
_ROOT_OF_UNITY_GAP = 1e-6


class ConvergenceError(ArithmeticError):
    """Raised when a series or trace is evaluated outside its convergence region."""


def _as_triple(values: Sequence[complex], name: str) -> tuple:
    if len(values) != 3:
        raise ValueError(f"{name} must have three components, got {len(values)}")
    return tuple(values)


@dataclass(frozen=True)
class Params:
    """Global model data.

    Parameters
    ----------
    hbar : complex
        Deformation parameter, ``q = exp(hbar)``.
    s : tuple of int
        Gradation integers ``(s0, s1, s2)``; their sum must be positive.
    phi : sequence of complex
        Twist parameters. Two components may be given; a third is always
        recomputed as ``-(phi0 + phi1)``. A supplied third component must
        agree with that value.
    cutoff : int
        Number of Fock states kept per oscillator.
    tol : float
        Default pass threshold for relation residuals.
    series_terms : int
        Number of terms used by :func:`f3_eval`.
    """

    hbar: complex
    s: tuple = (1, 1, 1)
    phi: tuple = (0.0, 0.0, 0.0)
    cutoff: int = 14
    tol: float = 1e-7
    series_terms: int = 80

    def __post_init__(self) -> None:
        hbar = complex(self.hbar)
        object.__setattr__(self, "hbar", hbar)
        s = tuple(int(x) for x in _as_triple(self.s, "s"))
        if any(x < 0 for x in s) or sum(s) < 1:
            raise ValueError(f"gradation must be non-negative with positive sum, got {s}")
        object.__setattr__(self, "s", s)

        phi = [complex(x) for x in self.phi]
        if len(phi) == 2:
            phi.append(-(phi[0] + phi[1]))
        phi = list(_as_triple(phi, "phi"))
        third = -(phi[0] + phi[1])
        scale = max(1.0, abs(phi[0]) + abs(phi[1]))
        if abs(phi[2] - third) > 1e-12 * scale:
            raise ValueError("twist components must sum to zero")
        phi[2] = third
        object.__setattr__(self, "phi", tuple(phi))

        if int(self.cutoff) < 2:
            raise ValueError("cutoff must be at least 2")
        object.__setattr__(self, "cutoff", int(self.cutoff))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.series_terms) < 1:
            raise ValueError("series_terms must be positive")
        object.__setattr__(self, "series_terms", int(self.series_terms))

        if abs(abs(self.q) - 1.0) < 1e-12:
            raise ValueError("|q| = 1 is not supported")
        for m in range(1, _ROOT_OF_UNITY_ORDER + 1):
            if abs(cmath.exp(m * hbar) - 1.0) < _ROOT_OF_UNITY_GAP:
                warnings.warn(
                    f"q is within {_ROOT_OF_UNITY_GAP} of a root of unity of order {m}; "
                    "q-numbers may be badly conditioned",
                    RuntimeWarning,
                    stacklevel=2,
                )
                break

    # derived scalars -------------------------------------------------------
    @property
    def q(self) -> complex:
        return cmath.exp(self.hbar)

    @property
    def kappa(self) -> complex:
        """``q - 1/q``."""
        return self.q - 1.0 / self.q

    @property
    def s_total(self) -> int:
        return sum(self.s)

    @property
    def r_s(self) -> complex:
        """The fixed root ``exp(i pi / s)`` of ``-1``."""
        return cmath.exp(1j * math.pi / self.s_total)

    @property
    def Phi(self) -> tuple:
        """``((phi0-phi1)/3, (phi1-phi2)/3, (phi2-phi0)/3)``."""
        p0, p1, p2 = self.phi
        return ((p0 - p1) / 3, (p1 - p2) / 3, (p2 - p0) / 3)

    def qpow(self, a) -> complex | np.ndarray:
        """``q**a`` on the branch fixed by ``hbar`` (``a`` may be an array)."""
        if isinstance(a, np.ndarray):
            return np.exp(a * self.hbar)
        return cmath.exp(complex(a) * self.hbar)

    def qnum(self, nu) -> complex | np.ndarray:
        """The q-number ``[nu]`` on the branch fixed by ``hbar``."""
        if isinstance(nu, np.ndarray):
            return (np.exp(nu * self.hbar) - np.exp(-nu * self.hbar)) / self.kappa
        return (cmath.exp(nu * self.hbar) - cmath.exp(-nu * self.hbar)) / self.kappa

    def replace(self, **changes) -> "Params":
        """Return a copy with some fields changed."""
        data = dict(
            hbar=self.hbar,
            s=self.s,
            phi=self.phi[:2] if "phi" not in changes else changes.pop("phi"),
            cutoff=self.cutoff,
            tol=self.tol,
            series_terms=self.series_terms,
        )
        data.update(changes)
        return Params(**data)

    def as_dict(self) -> dict:
        """JSON-friendly echo of the parameters."""
        cx = lambda z: [float(complex(z).real), float(complex(z).imag)]  # noqa: E731
        return {
            "hbar": cx(self.hbar),
            "s": list(self.s),
            "phi": [cx(p) for p in self.phi],
            "cutoff": self.cutoff,
            "tol": self.tol,
            "series_terms": self.series_terms,
        }


@dataclass(frozen=True)
class SpectralPoint:
    """A spectral parameter ``zeta = exp(w)`` stored through its logarithm."""

    w: complex = field(default=0j)

    def __post_init__(self) -> None:
        object.__setattr__(self, "w", complex(self.w))

    @classmethod
    def from_value(cls, zeta: complex) -> "SpectralPoint":
        """Principal-branch logarithm of a nonzero value."""
        if zeta == 0:
            raise ValueError("spectral parameter must be nonzero")
        return cls(cmath.log(zeta))

    @property
    def zeta(self) -> complex:
        return cmath.exp(self.w)

    def power(self, alpha) -> complex:
        """``zeta**alpha`` evaluated as ``exp(alpha * w)``."""
        return cmath.exp(complex(alpha) * self.w)

    def shift(self, a, params: Params) -> "SpectralPoint":
        """The point ``q**(a/s) * zeta``."""
        return spectral_shift(self, a, params)

    def times(self, other: "SpectralPoint") -> "SpectralPoint":
        return SpectralPoint(self.w + other.w)

    def over(self, other: "SpectralPoint") -> "SpectralPoint":
        return SpectralPoint(self.w - other.w)

    def rotate(self, params: Params, k: int = 1) -> "SpectralPoint":
        """Multiply by ``r_s**k`` through the logarithm."""
        return SpectralPoint(self.w + 1j * math.pi * k / params.s_total)


def q_number(nu: complex, q: complex) -> complex:
    """``[nu]_q = (q**nu - q**-nu) / (q - 1/q)``.

    ``q**nu`` uses the principal branch of ``log q``; use
    :meth:`Params.qnum` when ``q`` is given through ``hbar``.
    """
    kappa = q - 1.0 / q
    if abs(kappa) < np.finfo(float).tiny:
        raise ZeroDivisionError("q - 1/q vanishes")
    return (q**nu - q ** (-nu)) / kappa


def f3_eval(z: complex, q: complex, K: int) -> tuple[complex, float]:
    """Partial sum of ``f3(z) = sum_k z**k / (k (q**2k + 1 + q**-2k))``.

    Returns
    -------
    value : complex
        Sum of the first ``K`` terms.
    tail : float
        Majorant ``|z|**(K+1) / ((K+1)(1-|z|))`` of the omitted terms.
    """
    if K < 1:
        raise ValueError("K must be positive")
    az = abs(z)
    if az >= 1:
        raise ConvergenceError(f"f3 series diverges for |z| = {az:.3g} >= 1")
    k = np.arange(1, K + 1)
    q2k = np.asarray(q, dtype=complex) ** (2 * k)
    terms = np.asarray(z, dtype=complex) ** k / (k * (q2k + 1.0 + 1.0 / q2k))
    value = complex(terms.sum())
    tail = az ** (K + 1) / ((K + 1) * (1.0 - az))
    return value, float(tail)


def exp_f3(z: complex, params: Params, rtol: float = 1e-17) -> complex:
    """``exp(f3(z))`` through its product form.

    The coefficient ``1/(q**2k + 1 + q**-2k)`` expands as a geometric series
    in ``q**6k``, which gives

        exp(f3(z)) = prod_{m >= 0} (1 - z q**(6m+4)) / (1 - z q**(6m+2))

    for ``|q| < 1``. The product converges for every ``z`` away from its
    poles, so it continues the series beyond ``|z| < 1``. The coefficients
    are invariant under ``q -> 1/q``, so ``|q| > 1`` uses the inverse.
    """
    hbar = params.hbar if abs(params.q) < 1 else -params.hbar
    r = abs(cmath.exp(hbar))
    z = complex(z)
    log_val = 0j
    m = 0
    while True:
        a = cmath.exp((6 * m + 2) * hbar)
        b = cmath.exp((6 * m + 4) * hbar)
        den = 1.0 - z * a
        if den == 0:
            raise ZeroDivisionError("exp(f3) evaluated at a pole")
        log_val += cmath.log((1.0 - z * b) / den)
        m += 1
        if abs(z) * r ** (6 * m + 2) < rtol:
            break
        if m > 100000:
            raise ConvergenceError("exp(f3) product did not converge")
    return cmath.exp(log_val)


def b_eval(z: complex) -> complex:
    """``b(z) = z - 1/z``."""
    if z == 0:
        raise ZeroDivisionError("b(z) is undefined at z = 0")
    return z - 1.0 / z


def spectral_shift(p: SpectralPoint, a, params: Params) -> SpectralPoint:
    """Return ``q**(a/s) * zeta`` as ``w + a * hbar / s``."""
    if isinstance(a, Fraction):
        a = float(a)
    return SpectralPoint(p.w + complex(a) * params.hbar / params.s_total)
