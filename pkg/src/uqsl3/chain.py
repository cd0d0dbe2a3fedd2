"""Q-operators of the inhomogeneous sl3 chain with fundamental local spaces.

``Q_i`` and ``Qbar_i`` are traces over two q-oscillators of site-ordered
products of L-operators, dressed by the diagonal ``zeta^{D_i}`` matrices and
the twist. For each oscillator the Fock representation (``chi+`` or
``chi-``) is picked so that the twisted trace converges; the two choices
differ by a sign that is compensated (``tr- = -tr+``).
"""

from __future__ import annotations

import cmath
import math
from collections import OrderedDict
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .core import Params, SpectralPoint, exp_f3
from .fock import OscillatorSpace, diagonal_tail
from .lops import build_L, o_matrix, twist_exponents

__all__ = [
    "ChainOp",
    "CartanField",
    "DegenerateTwistError",
    "boxtimes",
    "cartan_field",
    "mode_reps",
    "q_operator",
    "qbar_operator",
    "q_prefactor",
    "qbar_prefactor",
    "laurent_fit",
    "q_polynomial_part",
    "homogeneous",
    "clear_cache",
    "covariance_residual",
]


class DegenerateTwistError(ValueError):
    """Two Cartan exponents coincide, so some ``C_i`` is singular."""


@dataclass(frozen=True, eq=False)
class ChainOp:
    """An operator on ``(C^3)^{(x) n}``.

    Attributes
    ----------
    n : int
        Number of sites.
    data : ndarray
        ``3^n x 3^n`` complex matrix, sites ordered left to right.
    tail : float
        Relative truncation certificate (``0`` for exact objects).
    """

    n: int
    data: np.ndarray
    tail: float = 0.0

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (3**self.n, 3**self.n):
            raise ValueError(f"data shape {data.shape} does not fit {self.n} sites")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def identity(cls, n: int) -> "ChainOp":
        return cls(n, np.eye(3**n))

    def _combine(self, other: "ChainOp", data: np.ndarray, scale: float = 1.0) -> "ChainOp":
        if self.n != other.n:
            raise ValueError("site counts differ")
        return ChainOp(self.n, data, self.tail + other.tail * scale)

    def __matmul__(self, other: "ChainOp") -> "ChainOp":
        return self._combine(other, self.data @ other.data)

    def __add__(self, other: "ChainOp") -> "ChainOp":
        return self._combine(other, self.data + other.data)

    def __sub__(self, other: "ChainOp") -> "ChainOp":
        return self._combine(other, self.data - other.data)

    def __mul__(self, c) -> "ChainOp":
        if isinstance(c, np.ndarray):
            # diagonal vector acting from the left
            return ChainOp(self.n, c[:, None] * self.data, self.tail)
        return ChainOp(self.n, self.data * c, self.tail)

    __rmul__ = __mul__

    def __neg__(self) -> "ChainOp":
        return ChainOp(self.n, -self.data, self.tail)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


def boxtimes(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product over the chain indices with operator-valued entries.

    ``A`` has shape ``(a, a, N, N)`` and ``B`` shape ``(b, b, N, N)``; the
    result has entries ``(A (x) B)_{(ik),(jl)} = A_ij @ B_kl`` (this order).
    """
    if A.shape[2:] != B.shape[2:]:
        raise ValueError("oscillator dimensions differ")
    a, b, N = A.shape[0], B.shape[0], A.shape[-1]
    out = np.einsum("ijxy,klyz->ikjlxz", A, B)
    return out.reshape(a * b, a * b, N, N)


# ---------------------------------------------------------------- Cartan data

_SITE_H = (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -1.0, 0.0]), np.array([0.0, 1.0, -1.0]))


@dataclass(frozen=True, eq=False)
class CartanField:
    """Diagonal images of the Cartan generators on an ``n``-site chain.

    Attributes
    ----------
    n : int
    h : ndarray, shape (3, 3^n)
        Exponents of ``h_0, h_1, h_2`` (site sums).
    params : Params
    """

    n: int
    h: np.ndarray
    params: Params

    @property
    def h_prime(self) -> np.ndarray:
        """``h'_i = h_i + phi_i``."""
        return self.h + np.asarray(self.params.phi, dtype=complex)[:, None]

    @property
    def D(self) -> np.ndarray:
        """``D_1, D_2, D_3`` with ``D_1 = (h'_0 - h'_1) s / 6`` and cyclic."""
        hp = self.h_prime
        s = self.params.s_total
        return np.array([(hp[j] - hp[(j + 1) % 3]) * s / 6 for j in range(3)])

    def qD(self, i: int, a: complex) -> np.ndarray:
        """Diagonal of ``q^{a D_i / s}``."""
        return np.exp(a * self.D[i - 1] * self.params.hbar / self.params.s_total)

    def zeta_D(self, i: int, zeta: SpectralPoint, sign: int = 1) -> np.ndarray:
        """Diagonal of ``zeta^{sign * D_i}``."""
        return np.exp(sign * self.D[i - 1] * zeta.w)

    def C_i(self, i: int, convention: str = "derived") -> np.ndarray:
        """Diagonal of ``C_i``.

        ``convention="derived"`` gives ``q^{-D_i/s} (q^{2D_k/s} - q^{2D_j/s})^{-1}``,
        the form implied by the two-Q relation of the unredefined operators.
        ``convention="printed"`` gives the opposite sign, the orientation
        ``(q^{2D_j/s} - q^{2D_k/s})^{-1}``.
        """
        j, k = i % 3 + 1, (i + 1) % 3 + 1
        diff = self.qD(k, 2) - self.qD(j, 2)
        scale = np.abs(self.qD(k, 2)) + np.abs(self.qD(j, 2))
        bad = np.abs(diff) < 1e-12 * scale
        if np.any(bad):
            slot = int(np.flatnonzero(bad)[0])
            raise DegenerateTwistError(
                f"C_{i} is singular at chain basis state {slot}: q^(2D_{j}/s) = q^(2D_{k}/s)"
            )
        out = self.qD(i, -1) / diff
        if convention == "printed":
            return -out
        if convention != "derived":
            raise ValueError("convention must be 'derived' or 'printed'")
        return out

    def C(self, convention: str = "derived") -> np.ndarray:
        """Diagonal of ``C = C_1 C_2 C_3``."""
        return self.C_i(1, convention) * self.C_i(2, convention) * self.C_i(3, convention)

    def one_minus_inv(self, k: int) -> np.ndarray:
        """Diagonal of ``(1 - q^{-h'_k})^{-1}``."""
        return 1.0 / (1.0 - np.exp(-self.params.hbar * self.h_prime[k]))

    def weight_labels(self) -> np.ndarray:
        """Integer weight of each basis state, ``(h_1, h_2)`` per row."""
        return np.rint(self.h[1:].real).astype(int).T


def cartan_field(n: int, params: Params) -> CartanField:
    """Site sums of the fundamental Cartan exponents for ``n`` sites."""
    if n < 1:
        raise ValueError("n must be positive")
    h = np.zeros((3, 3**n))
    for k in range(n):
        for j in range(3):
            parts = [np.ones(3)] * n
            parts = list(parts)
            parts[k] = _SITE_H[j]
            h[j] += reduce(np.kron, parts)
    return CartanField(n, h, params)


# ----------------------------------------------------------------- Q-operators


def homogeneous(n: int) -> list:
    """Inhomogeneities all equal to one."""
    return [SpectralPoint(0.0)] * n


def mode_reps(i: int, barred: bool, params: Params) -> tuple:
    """Fock representation per oscillator for which the twisted trace converges.

    ``chi+`` needs ``|q^{x}| < 1`` for the twist coefficient ``x`` of that
    oscillator, ``chi-`` the opposite.
    """
    x1, x2 = twist_exponents(i, barred, params)
    return tuple(1 if (x * params.hbar).real < 0 else -1 for x in (x1, x2))


_CACHE: "OrderedDict[tuple, ChainOp]" = OrderedDict()
_CACHE_SIZE = 20000


def clear_cache() -> None:
    _CACHE.clear()


def _key(*items) -> tuple:
    return tuple(items)


def _raw_trace(
    i: int,
    barred: bool,
    ws: Sequence[complex],
    params: Params,
    cutoff: int,
    reps: tuple,
) -> tuple[np.ndarray, np.ndarray, complex]:
    """Traced L product, its per-state magnitude profile, and the scalar prefactor.

    ``ws`` holds the logarithms of the per-site L arguments.
    """
    n = len(ws)
    space = OscillatorSpace((cutoff, cutoff), reps, params.hbar)
    Ls = [build_L(i, barred, SpectralPoint(w), params, space=space) for w in ws]
    pref = np.prod([L.prefactor for L in Ls])
    M = Ls[0].entries
    for L in Ls[1:-1]:
        M = boxtimes(M, L.entries)
    tw = space.qdiag(twist_exponents(i, barred, params))
    if n == 1:
        diag = np.einsum("abxx->abx", M)
    else:
        last = Ls[-1].entries
        a, b = M.shape[0], last.shape[0]
        diag = np.einsum("ABxy,abyx->AaBbx", M, last).reshape(a * b, a * b, -1)
    diag = diag * tw
    sign = reps[0] * reps[1]
    traced = sign * diag.sum(axis=-1)
    profile = np.abs(diag).sum(axis=(0, 1))
    return traced, profile, pref


def _q_generic(
    i: int,
    barred: bool,
    zeta: SpectralPoint,
    eta: Sequence[SpectralPoint] | None,
    params: Params,
    primed: bool,
    cutoff: int | None,
    reps: tuple | None,
) -> ChainOp:
    if i not in (1, 2, 3):
        raise ValueError("index i must be 1, 2 or 3")
    if eta is None:
        eta = homogeneous(1)
    n = len(eta)
    D = params.cutoff if cutoff is None else int(cutoff)
    reps = mode_reps(i, barred, params) if reps is None else tuple(reps)
    key = _key(i, barred, zeta.w, tuple(e.w for e in eta), params, primed, D, reps)
    hit = _CACHE.get(key)
    if hit is not None:
        _CACHE.move_to_end(key)
        return hit

    rot = 1j * math.pi / params.s_total if (barred and not primed) else 0.0
    ws = [zeta.w + rot - e.w for e in eta]
    traced, profile, pref = _raw_trace(i, barred, ws, params, D, reps)
    mat = pref * traced
    scale = abs(pref)
    if not primed:
        cf = cartan_field(n, params)
        dress = cf.zeta_D(i, zeta, -1 if barred else 1)
        mat = dress[:, None] * mat
        scale *= float(np.abs(dress).max())
    tail_abs = diagonal_tail(profile, (D, D), margin=n // 2 + 2) * scale
    nrm = np.linalg.norm(mat)
    tail = tail_abs / nrm if nrm > 0 else tail_abs
    out = ChainOp(n, mat, float(tail))
    _CACHE[key] = out
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return out


def q_operator(
    i: int,
    zeta: SpectralPoint,
    eta: Sequence[SpectralPoint] | None,
    params: Params,
    primed: bool = False,
    cutoff: int | None = None,
    reps: Sequence[int] | None = None,
) -> ChainOp:
    """``Q_i(zeta | eta_1, ..., eta_n)`` on the chain.

    Parameters
    ----------
    i : {1, 2, 3}
    zeta : SpectralPoint
    eta : list of SpectralPoint or None
        Inhomogeneities, one per site (``None`` means one homogeneous site).
    params : Params
    primed : bool
        Return ``Q'_i(zeta)`` without the ``zeta^{D_i}`` dressing.
    cutoff : int, optional
        Fock cutoff override.
    reps : pair of {+1, -1}, optional
        Force the Fock representation per oscillator (the sign is still
        compensated). By default the convergent choice is made.

    Raises
    ------
    ConvergenceError
        If the twisted trace diagonal does not decay.
    """
    return _q_generic(i, False, zeta, eta, params, primed, cutoff, None if reps is None else tuple(reps))


def qbar_operator(
    i: int,
    zeta: SpectralPoint,
    eta: Sequence[SpectralPoint] | None,
    params: Params,
    primed: bool = False,
    cutoff: int | None = None,
    reps: Sequence[int] | None = None,
) -> ChainOp:
    """``Qbar_i(zeta | eta)``, built from ``Lbar'_i(r_s zeta / eta_k)`` and ``zeta^{-D_i}``.

    With ``primed=True`` this is ``Qbar'_i(zeta)`` (no rotation by ``r_s``,
    no dressing).
    """
    return _q_generic(i, True, zeta, eta, params, primed, cutoff, None if reps is None else tuple(reps))


def covariance_residual(i: int, zeta: SpectralPoint, eta, params: Params, barred: bool = False) -> float:
    """Relative residual of ``Q_{i+1} = O^{(x)n} Q_i O^{-(x)n}`` after ``phi -> sigma(phi)``.

    ``sigma(phi)`` cycles ``phi_0 -> phi_1 -> phi_2 -> phi_0`` in the
    relabelling sense: the right-hand side is evaluated at ``phi' = (phi_1, phi_2, phi_0)``.
    """
    n = len(eta)
    p0, p1, p2 = params.phi
    cyc = params.replace(phi=(p1, p2, p0))
    fn = qbar_operator if barred else q_operator
    lhs = fn(i % 3 + 1, zeta, eta, params).data
    O = reduce(np.kron, [o_matrix(params)] * n)
    rhs = O @ fn(i, zeta, eta, cyc).data @ np.linalg.inv(O)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))


# ---------------------------------------------------------- polynomial parts


def q_prefactor(i: int, zeta: SpectralPoint, eta, params: Params) -> complex:
    """``zeta^{s Phi_i / 2 + n s / 6} prod_k exp(f3((zeta/eta_k)^s))``."""
    s = params.s_total
    n = len(eta)
    out = cmath.exp(zeta.w * (s * params.Phi[i - 1] / 2 + n * s / 6))
    for e in eta:
        out *= exp_f3(cmath.exp(s * (zeta.w - e.w)), params)
    return out


def qbar_prefactor(i: int, zeta: SpectralPoint, eta, params: Params) -> complex:
    """``zeta^{-s Phi_i / 2 + n s / 3} prod_k exp(f3(z/q) + f3(q z))`` with ``z = (zeta/eta_k)^s``."""
    s = params.s_total
    n = len(eta)
    q = params.q
    out = cmath.exp(zeta.w * (-s * params.Phi[i - 1] / 2 + n * s / 3))
    for e in eta:
        z = cmath.exp(s * (zeta.w - e.w))
        out *= exp_f3(z / q, params) * exp_f3(q * z, params)
    return out


@dataclass(frozen=True)
class LaurentFit:
    """Laurent coefficients in ``x = zeta^{s/2}``.

    Attributes
    ----------
    coeffs : dict
        Degree ``m`` to coefficient matrix, for ``|m| <= window``.
    window : int
        Certified (or last attempted) degree window ``W``.
    residual : float
        Relative mass of the sampled spectrum outside ``[-W, W]``.
    certified : bool
    """

    coeffs: dict
    window: int
    residual: float
    certified: bool


def laurent_fit(
    func,
    W0: int,
    W_max: int,
    radius: float = 0.8,
    tol: float = 1e-8,
    phase: float = 0.1234,
) -> LaurentFit:
    """Fit ``func(x)`` (matrix valued) as a Laurent polynomial in ``x``.

    Samples ``K = 4W + 1`` points on the circle ``|x| = radius`` and
    inverts the discrete Fourier transform. ``W`` starts at ``W0`` and
    doubles until the spectrum outside ``[-W, W]`` is below ``tol``
    relative to the whole spectrum, or ``W`` exceeds ``W_max``.
    """
    W = max(1, int(W0))
    while True:
        K = 4 * W + 1
        xs = radius * np.exp(1j * (2 * np.pi * np.arange(K) / K + phase))
        vals = np.array([np.asarray(func(x)) for x in xs])
        spec = np.fft.fft(vals, axis=0) / K
        m = np.fft.fftfreq(K, 1.0 / K).astype(int)
        inner = np.abs(m) <= W
        total = np.linalg.norm(spec)
        outer = np.linalg.norm(spec[~inner])
        res = float(outer / total) if total > 0 else 0.0
        # undo the radius and phase of the sampling circle
        coeffs = {
            int(mm): spec[j] / (radius**mm * np.exp(1j * phase * mm)) for j, mm in enumerate(m) if abs(mm) <= W
        }
        if res < tol or 2 * W > W_max:
            return LaurentFit(coeffs, W, res, res < tol)
        W *= 2


def _x_to_point(x: complex, params: Params) -> SpectralPoint:
    return SpectralPoint(2 * cmath.log(x) / params.s_total)


def q_polynomial_part(
    i: int,
    eta,
    params: Params,
    barred: bool = False,
    strip_f3: bool = True,
    radius: float = 0.8,
    tol: float = 1e-8,
    window: int | None = None,
) -> LaurentFit:
    """Laurent coefficients of ``Q^p_i`` (or ``Qbar^p_i``) in ``x = zeta^{s/2}``.

    ``strip_f3=False`` removes only the power prefactor and keeps the
    ``exp(f3)`` factors, a control that must fail certification. ``window``
    fixes the degree window instead of widening it until the fit certifies.
    """
    n = len(eta)
    s = params.s_total

    def func(x):
        z = _x_to_point(x, params)
        if barred:
            Q = qbar_operator(i, z, eta, params).data
            pref = qbar_prefactor(i, z, eta, params)
            power = cmath.exp(z.w * (-s * params.Phi[i - 1] / 2 + n * s / 3))
        else:
            Q = q_operator(i, z, eta, params).data
            pref = q_prefactor(i, z, eta, params)
            power = cmath.exp(z.w * (s * params.Phi[i - 1] / 2 + n * s / 6))
        return Q / (pref if strip_f3 else power)

    if window is not None:
        return laurent_fit(func, window, window, radius=radius, tol=tol)
    return laurent_fit(func, n + 1, 8 * n, radius=radius, tol=tol)
