"""Truncated q-oscillator algebra.

Two Fock representations of the oscillator algebra are available:

``chi+``  ``b† v_n = v_{n+1}``, ``b v_n = [n] v_{n-1}``, ``q^{nu N} v_n = q^{nu n} v_n``
``chi-``  ``b v_n = v_{n+1}``, ``b† v_n = -[n] v_{n-1}``, ``q^{nu N} v_n = q^{-nu (n+1)} v_n``

Only the lowest ``D`` states are kept. For ``|q| < 1`` a trace over ``chi+``
converges when the twisted diagonal decays like ``q^{x n}`` with
``Re(x hbar) < 0`` and a trace over ``chi-`` when ``Re(x hbar) > 0``. The two
analytically continued traces differ by a sign, ``tr- = -tr+``, which lets a
caller pick whichever representation converges for each oscillator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .core import ConvergenceError

__all__ = [
    "OscOp",
    "OscillatorSpace",
    "chi_plus_ops",
    "chi_minus_ops",
    "embed",
    "trace_regularized",
    "diagonal_tail",
    "axiom_residual",
]


@dataclass(frozen=True, eq=False)
class OscOp:
    """A linear operator on a tensor product of truncated Fock spaces.

    Attributes
    ----------
    dims : tuple of int
        Per-factor truncation sizes, in tensor order.
    data : ndarray
        Dense ``(prod(dims), prod(dims))`` complex matrix.
    """

    dims: tuple
    data: np.ndarray

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        data = np.asarray(self.data, dtype=complex)
        size = int(np.prod(dims)) if dims else 1
        if data.shape != (size, size):
            raise ValueError(f"data shape {data.shape} does not match dims {dims}")
        object.__setattr__(self, "data", data)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "OscOp":
        size = int(np.prod(dims))
        return cls(tuple(dims), np.eye(size, dtype=complex))

    def _check(self, other: "OscOp") -> None:
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")

    def __matmul__(self, other: "OscOp") -> "OscOp":
        self._check(other)
        return OscOp(self.dims, self.data @ other.data)

    def __add__(self, other: "OscOp") -> "OscOp":
        self._check(other)
        return OscOp(self.dims, self.data + other.data)

    def __sub__(self, other: "OscOp") -> "OscOp":
        self._check(other)
        return OscOp(self.dims, self.data - other.data)

    def __mul__(self, scalar: complex) -> "OscOp":
        return OscOp(self.dims, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "OscOp":
        return OscOp(self.dims, -self.data)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.data).copy()

    def kron(self, other: "OscOp") -> "OscOp":
        return OscOp(self.dims + other.dims, np.kron(self.data, other.data))


def _shift_up(D: int) -> np.ndarray:
    """Matrix of ``v_n -> v_{n+1}`` on the lowest ``D`` states."""
    return np.diag(np.ones(D - 1, dtype=complex), -1)


def _qnum_vec(n: np.ndarray, hbar: complex) -> np.ndarray:
    kappa = np.exp(hbar) - np.exp(-hbar)
    return (np.exp(n * hbar) - np.exp(-n * hbar)) / kappa


def _single_mode(D: int, rep: int, hbar: complex):
    """Dense ``(b, bdag, exponent)`` for one oscillator.

    ``exponent`` is the vector ``e`` with ``q^{nu N} = diag(q^{nu e})``.
    """
    if D < 2:
        raise ValueError("a Fock cutoff below 2 cannot carry b and b†")
    n = np.arange(D)
    if rep == 1:
        bdag = _shift_up(D)
        b = np.diag(_qnum_vec(n[1:], hbar), 1)
        expo = n.astype(float)
    elif rep == -1:
        b = _shift_up(D)
        bdag = np.diag(-_qnum_vec(n[1:], hbar), 1)
        expo = -(n + 1).astype(float)
    else:
        raise ValueError("representation label must be +1 (chi+) or -1 (chi-)")
    return b, bdag, expo


def chi_plus_ops(D: int, nu: complex, hbar: complex):
    """``(b, b†, q^{nu N})`` in the ``chi+`` representation."""
    b, bdag, expo = _single_mode(D, 1, hbar)
    qN = np.diag(np.exp(nu * hbar * expo))
    return OscOp((D,), b), OscOp((D,), bdag), OscOp((D,), qN)


def chi_minus_ops(D: int, nu: complex, hbar: complex):
    """``(b, b†, q^{nu N})`` in the ``chi-`` representation."""
    b, bdag, expo = _single_mode(D, -1, hbar)
    qN = np.diag(np.exp(nu * hbar * expo))
    return OscOp((D,), b), OscOp((D,), bdag), OscOp((D,), qN)


def axiom_residual(D: int, nu: complex, hbar: complex, rep: int = 1) -> float:
    """Largest relative defect of the oscillator relations on interior states.

    Checks ``q^{nu N} b q^{-nu N} = q^{-nu} b``, ``q^{nu N} b† q^{-nu N} = q^{nu} b†``,
    ``b† b = [N]`` and ``b b† = [N+1]`` on every state but the top one.
    """
    b, bdag, expo = _single_mode(D, rep, hbar)
    q = np.exp(hbar)
    qN = np.exp(hbar * expo)
    kappa = q - 1.0 / q
    qnum_N = lambda a: np.diag((qN * q**a - 1.0 / (qN * q**a)) / kappa)  # noqa: E731
    conj = np.diag(np.exp(nu * hbar * expo))
    conj_inv = np.diag(np.exp(-nu * hbar * expo))
    q_nu = np.exp(nu * hbar)
    pairs = [
        (conj @ b @ conj_inv, b / q_nu),
        (conj @ bdag @ conj_inv, q_nu * bdag),
        (bdag @ b, qnum_N(0)),
        (b @ bdag, qnum_N(1)),
    ]
    worst = 0.0
    for lhs, rhs in pairs:
        lhs, rhs = lhs[:, : D - 1], rhs[:, : D - 1]
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(lhs - rhs) / scale))
    return worst


def embed(factor_ops: Sequence) -> OscOp:
    """Kronecker product in factor order.

    Each entry is an :class:`OscOp` or an ``int`` standing for the identity
    on a factor of that size.
    """
    if not factor_ops:
        raise ValueError("embed needs at least one factor")
    pieces = []
    for op in factor_ops:
        if isinstance(op, OscOp):
            pieces.append(op)
        else:
            pieces.append(OscOp.identity((int(op),)))
    return reduce(lambda a, b: a.kron(b), pieces)


class OscillatorSpace:
    """Generators of several independent oscillators on a joint Fock space.

    Parameters
    ----------
    dims : sequence of int
        Cutoff per oscillator.
    reps : sequence of {+1, -1}
        Representation (``chi+`` or ``chi-``) per oscillator.
    hbar : complex
        Deformation parameter.
    sparse : bool
        Build ``scipy.sparse`` CSR matrices instead of dense arrays.
    """

    def __init__(self, dims: Sequence[int], reps: Sequence[int], hbar: complex, sparse: bool = False):
        if len(dims) != len(reps):
            raise ValueError("dims and reps must have equal length")
        self.dims = tuple(int(d) for d in dims)
        self.reps = tuple(int(r) for r in reps)
        self.hbar = complex(hbar)
        self.sparse = sparse
        self.size = int(np.prod(self.dims))
        self._modes = [_single_mode(d, r, self.hbar) for d, r in zip(self.dims, self.reps)]
        # exponent vectors of each N_k on the joint space
        self._expo = []
        for k, (_, _, e) in enumerate(self._modes):
            vecs = [np.ones(d) for d in self.dims]
            vecs[k] = e
            self._expo.append(reduce(np.kron, vecs))
        self._cache: dict = {}

    @property
    def sign(self) -> int:
        """``+1`` or ``-1``: the factor turning a trace here into the ``chi+`` trace."""
        return int(np.prod(self.reps))

    def _lift(self, k: int, mat: np.ndarray):
        if self.sparse:
            parts = [sp.identity(d, dtype=complex, format="csr") for d in self.dims]
            parts[k] = sp.csr_matrix(mat)
            return reduce(lambda a, b: sp.kron(a, b, format="csr"), parts)
        parts = [np.eye(d, dtype=complex) for d in self.dims]
        parts[k] = mat
        return reduce(np.kron, parts)

    def b(self, k: int):
        key = ("b", k)
        if key not in self._cache:
            self._cache[key] = self._lift(k, self._modes[k][0])
        return self._cache[key]

    def bdag(self, k: int):
        key = ("bd", k)
        if key not in self._cache:
            self._cache[key] = self._lift(k, self._modes[k][1])
        return self._cache[key]

    def number_exponent(self, k: int) -> np.ndarray:
        """Diagonal of the formal ``N_k`` (``n`` for chi+, ``-(n+1)`` for chi-)."""
        return self._expo[k]

    def occupation(self) -> np.ndarray:
        """Integer occupation numbers, shape ``(size, n_modes)``."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1)
        return grids.T

    def qdiag(self, coeffs: Sequence[complex], const: complex = 0) -> np.ndarray:
        """Diagonal vector of ``q^{const + sum_k coeffs[k] N_k}``."""
        expo = np.full(self.size, complex(const))
        for c, e in zip(coeffs, self._expo):
            if c != 0:
                expo = expo + complex(c) * e
        return np.exp(self.hbar * expo)

    def qN(self, coeffs: Sequence[complex], const: complex = 0):
        """Matrix of ``q^{const + sum_k coeffs[k] N_k}``."""
        d = self.qdiag(coeffs, const)
        if self.sparse:
            return sp.diags(d, format="csr")
        return np.diag(d)

    def identity(self):
        if self.sparse:
            return sp.identity(self.size, dtype=complex, format="csr")
        return np.eye(self.size, dtype=complex)

    def zeros(self):
        if self.sparse:
            return sp.csr_matrix((self.size, self.size), dtype=complex)
        return np.zeros((self.size, self.size), dtype=complex)


def _axis_ratio(m: np.ndarray, margin: int) -> float:
    """Largest per-step decay ratio of a nonnegative sequence, boundary excluded."""
    D = len(m)
    stop = D - margin
    start = max(0, stop // 3)
    best = 0.0
    for k in range(start, stop):
        if m[k] <= 0:
            continue
        for j in (1, 2):
            if k + j < stop:
                best = max(best, (m[k + j] / m[k]) ** (1.0 / j))
    return best


def diagonal_tail(diag: np.ndarray, dims: Sequence[int], margin: int = 2) -> float:
    """Tail certificate for a truncated trace from its diagonal.

    For each oscillator the diagonal magnitudes are summed over the other
    factors, giving a sequence ``m_k``. Its decay ratio ``r`` is measured
    away from the top ``margin`` states (which truncation corrupts). The
    certificate adds the mass in those boundary states to the geometric
    estimate ``m_{D-margin-1} r^(margin+1) / (1 - r)`` of the omitted states.

    Raises
    ------
    ConvergenceError
        When some oscillator shows ``r >= 1``.
    """
    dims = tuple(int(d) for d in dims)
    mags = np.abs(np.asarray(diag)).reshape(dims)
    if not np.any(mags):
        return 0.0
    tail = 0.0
    for axis, D in enumerate(dims):
        other = tuple(a for a in range(len(dims)) if a != axis)
        m = mags.sum(axis=other) if other else mags
        margin_eff = min(margin, max(D - 3, 0))
        r = _axis_ratio(m, margin_eff)
        if r >= 1.0:
            raise ConvergenceError(
                f"trace diagonal does not decay along oscillator {axis} (ratio {r:.3g}); "
                "the twist is outside the admissible region"
            )
        boundary = float(m[D - margin_eff:].sum()) if margin_eff else 0.0
        anchor = m[D - margin_eff - 1]
        tail += boundary + float(anchor * r ** (margin_eff + 1) / (1.0 - r))
    return tail


def trace_regularized(A: OscOp, margin: int = 2) -> tuple[complex, float]:
    """Plain truncated trace and a geometric tail certificate.

    Parameters
    ----------
    A : OscOp
        Operator whose diagonal decays geometrically along every factor.
    margin : int
        Number of top states per factor treated as truncation-corrupted.

    Returns
    -------
    value : complex
        ``sum(diag(A))``.
    tail : float
        Estimated modulus of the omitted part (see :func:`diagonal_tail`).
    """
    d = A.diagonal()
    return complex(d.sum()), diagonal_tail(d, A.dims, margin)
