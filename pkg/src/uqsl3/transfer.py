"""Transfer matrices from Q-operators and residuals of their functional relations.

Transfer matrices ``T^lambda`` and ``Tbar^lambda`` are built as
``C^{-1}`` times 3x3 determinants of shifted Q-operators. All relations are
checked as relative residuals ``||lhs - rhs|| / max(||term||)``; every report
also carries the accumulated truncation certificate of the Q-operators used
and the commutator floor of the determinant entries.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chain import (
    ChainOp,
    cartan_field,
    q_operator,
    q_prefactor,
    qbar_operator,
    qbar_prefactor,
)
from .core import Params, SpectralPoint, b_eval, exp_f3

__all__ = [
    "RelationReport",
    "Chain",
    "params_digest",
    "perm_sign",
    "t_from_q",
    "tbar_from_q",
    "ttilde_from_q",
    "wronskian_residual",
    "tq_residual",
    "mixed_tq_residual",
    "tt_residual",
    "tt_polynomial_residual",
    "jacobi_trudi_residual",
    "bttot_residual",
    "octct_residual",
    "tls_residual",
    "twtt_residual",
    "antisymmetry_residual",
    "vanishing_residual",
    "identity_residual",
    "fusion_closure_residual",
    "commutativity_residual",
    "weight_block_residual",
    "t_polynomial_part",
]

RHO = (1, 0, -1)


def params_digest(params: Params, eta: Sequence[SpectralPoint]) -> str:
    """Short stable hash of the model data."""
    payload = params.as_dict()
    payload["eta"] = [[e.w.real, e.w.imag] for e in eta]
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class RelationReport:
    """Outcome of one relation check.

    Attributes
    ----------
    relation_id : str
    params_digest : str
    residual : float
        Relative residual.
    tail_certificate : float
        Sum of truncation certificates and commutator floors involved.
    tol : float
        Pass threshold applied to ``residual``.
    detail : dict
        Extra context (spectral point, indices, ...).
    """

    relation_id: str
    params_digest: str
    residual: float
    tail_certificate: float
    tol: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        ok = np.isfinite(self.residual) and self.residual < self.tol
        return bool(ok and self.tail_certificate < self.tol)

    def to_dict(self) -> dict:
        return {
            "relation_id": self.relation_id,
            "params_digest": self.params_digest,
            "residual": float(self.residual),
            "tail_certificate": float(self.tail_certificate),
            "tol": float(self.tol),
            "pass": self.passed,
            "detail": self.detail,
        }


def perm_sign(p: Sequence[int]) -> int:
    """Sign of a permutation given as a sequence of distinct integers."""
    p = list(p)
    sign = 1
    for a in range(len(p)):
        for b in range(a + 1, len(p)):
            if p[a] > p[b]:
                sign = -sign
    return sign


def _rel(terms_lhs: Sequence[np.ndarray], terms_rhs: Sequence[np.ndarray]) -> float:
    diff = sum(terms_lhs) - sum(terms_rhs)
    scale = max(np.linalg.norm(t) for t in list(terms_lhs) + list(terms_rhs))
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(diff) / scale)


def _commutator_floor(mats: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for A, B in itertools.combinations(mats, 2):
        scale = np.linalg.norm(A) * np.linalg.norm(B)
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(A @ B - B @ A) / scale))
    return worst


class Chain:
    """Q-operators and transfer matrices of one chain.

    Parameters
    ----------
    params : Params
    eta : list of SpectralPoint
        Inhomogeneities; their number sets the chain length.
    cutoff : int, optional
        Fock cutoff override.
    convention : {"derived", "printed"}
        Sign convention of ``C_i`` (see :meth:`uqsl3.chain.CartanField.C_i`).
    """

    def __init__(
        self,
        params: Params,
        eta: Sequence[SpectralPoint],
        cutoff: int | None = None,
        convention: str = "derived",
    ):
        self.params = params
        self.eta = list(eta)
        self.n = len(self.eta)
        self.cutoff = params.cutoff if cutoff is None else int(cutoff)
        self.convention = convention
        self.cartan = cartan_field(self.n, params)
        self._C = self.cartan.C(convention)
        self.digest = params_digest(params, self.eta)
        self.tail = 0.0

    # ----------------------------------------------------------- building blocks
    def at(self, zeta: SpectralPoint, a: complex) -> SpectralPoint:
        """``q^{a/s} zeta``."""
        return zeta.shift(a, self.params)

    def Q(self, i: int, zeta: SpectralPoint) -> np.ndarray:
        op = q_operator(i, zeta, self.eta, self.params, cutoff=self.cutoff)
        self.tail = max(self.tail, op.tail)
        return op.data

    def Qbar(self, i: int, zeta: SpectralPoint) -> np.ndarray:
        op = qbar_operator(i, zeta, self.eta, self.params, cutoff=self.cutoff)
        self.tail = max(self.tail, op.tail)
        return op.data

    def C_i(self, i: int) -> np.ndarray:
        return self.cartan.C_i(i, self.convention)

    def _det(self, entry: Callable[[int, int], np.ndarray]) -> tuple[np.ndarray, float]:
        mats = {(a, b): entry(a, b) for a in range(3) for b in range(3)}
        out = np.zeros_like(mats[0, 0])
        for p in itertools.permutations(range(3)):
            out = out + perm_sign(p) * mats[p[0], 0] @ mats[p[1], 1] @ mats[p[2], 2]
        return out, _commutator_floor(list(mats.values()))

    def T(self, lam: Sequence[complex], zeta: SpectralPoint, barred: bool = False) -> np.ndarray:
        """``T^lambda(zeta)`` or ``Tbar^lambda(zeta)``.

        ``C T^lambda = det(Q_i(q^{-2(lambda+rho)_j/s} zeta))`` and
        ``C Tbar^lambda = det(Qbar_i(q^{2(lambda+rho)_j/s} zeta))``.
        """
        sgn = 1 if barred else -1
        shifts = [sgn * 2 * (complex(lam[j]) + RHO[j]) for j in range(3)]
        fn = self.Qbar if barred else self.Q

        def entry(a, b):
            return fn(a + 1, self.at(zeta, shifts[b]))

        det, floor = self._det(entry)
        self.tail = max(self.tail, floor)
        return det / self._C[:, None]

    def Tbar(self, lam, zeta) -> np.ndarray:
        return self.T(lam, zeta, barred=True)

    def Ttilde(self, lam: Sequence[complex], zeta: SpectralPoint) -> np.ndarray:
        """``C^{-1} Q_1(q^{-2(lambda+rho)_1/s} zeta) Q_2(...) Q_3(...)``."""
        out = np.eye(3**self.n, dtype=complex)
        for j in range(3):
            out = out @ self.Q(j + 1, self.at(zeta, -2 * (complex(lam[j]) + RHO[j])))
        return out / self._C[:, None]

    # ---------------------------------------------------------- normalizations
    def _x(self, zeta: SpectralPoint) -> list:
        """``(zeta/eta_k)^{s/2}`` for every site."""
        s = self.params.s_total
        return [np.exp(s * (zeta.w - e.w) / 2) for e in self.eta]

    def bprod(self, zeta: SpectralPoint, *qexps: complex) -> complex:
        """``prod_k prod_a b(q^{a} (zeta/eta_k)^{-s/2})``."""
        out = 1.0 + 0j
        for x in self._x(zeta):
            for a in qexps:
                out *= b_eval(self.params.qpow(a) / x)
        return out

    def Qp(self, i: int, zeta: SpectralPoint) -> np.ndarray:
        return self.Q(i, zeta) / q_prefactor(i, zeta, self.eta, self.params)

    def Qbarp(self, i: int, zeta: SpectralPoint) -> np.ndarray:
        return self.Qbar(i, zeta) / qbar_prefactor(i, zeta, self.eta, self.params)

    def t_prefactor(self, lam: Sequence[complex], zeta: SpectralPoint, barred: bool = False) -> complex:
        """Scalar dividing ``T^lambda`` (or ``Tbar^lambda``) to give its polynomial part."""
        p = self.params
        s = p.s_total
        l1, l2, l3 = (complex(x) for x in lam)
        tot = l1 + l2 + l3
        out = p.qpow((2 * tot * self.n / 3) if barred else (-tot * self.n / 3))
        for e in self.eta:
            z = np.exp(s * (zeta.w - e.w))
            if barred:
                out *= z
                for c in (2 * (l1 + 1), 2 * l2, 2 * (l3 - 1)):
                    out *= exp_f3(p.qpow(c - 1) * z, p) * exp_f3(p.qpow(c + 1) * z, p)
            else:
                out *= np.exp(s * (zeta.w - e.w) / 2)
                for c in (-2 * (l1 + 1), -2 * l2, -2 * (l3 - 1)):
                    out *= exp_f3(p.qpow(c) * z, p)
        return out

    def Tp(self, lam, zeta, barred: bool = False) -> np.ndarray:
        return self.T(lam, zeta, barred) / self.t_prefactor(lam, zeta, barred)

    # ---------------------------------------------------------------- reports
    def report(self, relation_id: str, residual: float, tol: float | None = None, **detail) -> RelationReport:
        rep = RelationReport(
            relation_id,
            self.digest,
            float(residual),
            float(self.tail),
            self.params.tol if tol is None else float(tol),
            detail,
        )
        self.tail = 0.0
        return rep


# ------------------------------------------------------------------ operators


def _chain(eta, params, cutoff, convention="derived") -> Chain:
    return Chain(params, eta, cutoff=cutoff, convention=convention)


def t_from_q(lam, zeta: SpectralPoint, eta, params: Params, cutoff: int | None = None) -> ChainOp:
    """``T^lambda(zeta)`` from the determinant of shifted ``Q_i``."""
    ch = _chain(eta, params, cutoff)
    data = ch.T(lam, zeta)
    return ChainOp(ch.n, data, ch.tail)


def tbar_from_q(lam, zeta: SpectralPoint, eta, params: Params, cutoff: int | None = None) -> ChainOp:
    """``Tbar^lambda(zeta)`` from the determinant of shifted ``Qbar_i``."""
    ch = _chain(eta, params, cutoff)
    data = ch.Tbar(lam, zeta)
    return ChainOp(ch.n, data, ch.tail)


def ttilde_from_q(
    lam, zeta: SpectralPoint, eta, params: Params, cutoff: int | None = None, order: Sequence[int] = (1, 2, 3)
) -> ChainOp:
    """``C^{-1} Q_1 Q_2 Q_3`` at the shifts set by ``lambda + rho``; ``order`` permutes the factors."""
    ch = _chain(eta, params, cutoff)
    out = np.eye(3**ch.n, dtype=complex)
    for j in order:
        out = out @ ch.Q(j, ch.at(zeta, -2 * (complex(lam[j - 1]) + RHO[j - 1])))
    return ChainOp(ch.n, out / ch._C[:, None], ch.tail)


# ------------------------------------------------------------------ residuals


def wronskian_residual(
    i: int,
    zeta: SpectralPoint,
    eta,
    params: Params,
    family: str = "both",
    shift: float = 1.0,
    convention: str = "derived",
    cutoff: int | None = None,
    tol: float | None = None,
) -> RelationReport:
    """Two-Q determinant relations.

    ``family="qbar"``: ``C_i Qbar_i(z) = Q_j(q^{1/s}z) Q_k(q^{-1/s}z) - Q_j(q^{-1/s}z) Q_k(q^{1/s}z)``.
    ``family="q"``: ``C_i Q_i(z) = Qbar_j(q^{-1/s}z) Qbar_k(q^{1/s}z) - Qbar_j(q^{1/s}z) Qbar_k(q^{-1/s}z)``.
    ``family="both"`` reports the larger residual. ``shift`` replaces the
    unit shift exponent (a negative control when not ``1``).
    """
    ch = _chain(eta, params, cutoff, convention)
    j, k = i % 3 + 1, (i + 1) % 3 + 1
    Ci = ch.C_i(i)[:, None]
    res = []
    if family in ("qbar", "both"):
        lhs = Ci * ch.Qbar(i, zeta)
        a = ch.Q(j, ch.at(zeta, shift)) @ ch.Q(k, ch.at(zeta, -shift))
        b = ch.Q(j, ch.at(zeta, -shift)) @ ch.Q(k, ch.at(zeta, shift))
        res.append(_rel([lhs], [a, -b]))
    if family in ("q", "both"):
        lhs = Ci * ch.Q(i, zeta)
        a = ch.Qbar(j, ch.at(zeta, -shift)) @ ch.Qbar(k, ch.at(zeta, shift))
        b = ch.Qbar(j, ch.at(zeta, shift)) @ ch.Qbar(k, ch.at(zeta, -shift))
        res.append(_rel([lhs], [a, -b]))
    if not res:
        raise ValueError("family must be 'q', 'qbar' or 'both'")
    return ch.report(f"wronskian_{i}", max(res), tol, family=family, shift=shift, convention=convention)


def tq_residual(
    k: int,
    barred: bool,
    zeta: SpectralPoint,
    eta,
    params: Params,
    polynomial: bool = False,
    cutoff: int | None = None,
    tol: float | None = None,
) -> RelationReport:
    """Third-order difference equations satisfied by ``Q_k`` and ``Qbar_k``."""
    ch = _chain(eta, params, cutoff)
    z = zeta
    at = ch.at
    if not polynomial:
        if not barred:
            Q = lambda a: ch.Q(k, at(z, a))  # noqa: E731
            terms = [Q(2), -ch.T((1, 1, 0), z) @ Q(0), ch.T((1, 0, 0), z) @ Q(-2), -Q(-4)]
        else:
            Q = lambda a: ch.Qbar(k, at(z, a))  # noqa: E731
            terms = [Q(-2), -ch.Tbar((1, 1, 0), z) @ Q(0), ch.Tbar((1, 0, 0), z) @ Q(2), -Q(4)]
    else:
        qPhi = params.qpow(params.Phi[k - 1])
        if not barred:
            Q = lambda a: ch.Qp(k, at(z, a))  # noqa: E731
            terms = [
                qPhi * ch.bprod(z, 1) * Q(2),
                -ch.Tp((1, 1, 0), z) @ Q(0),
                ch.Tp((1, 0, 0), z) @ Q(-2) / qPhi,
                -ch.bprod(z, 0) * Q(-4) / qPhi**2,
            ]
        else:
            Q = lambda a: ch.Qbarp(k, at(z, a))  # noqa: E731
            terms = [
                qPhi * ch.bprod(z, -1.5, -0.5) * Q(-2),
                -ch.Tp((1, 1, 0), z, barred=True) @ Q(0),
                ch.Tp((1, 0, 0), z, barred=True) @ Q(2) / qPhi,
                -ch.bprod(z, -0.5, 0.5) * Q(4) / qPhi**2,
            ]
    name = ("btq" if barred else "tq") + ("_poly" if polynomial else "")
    return ch.report(f"{name}_{k}", _rel(terms, []), tol, k=k)


def mixed_tq_residual(
    variant: str,
    i: int,
    j: int,
    zeta: SpectralPoint,
    eta,
    params: Params,
    polynomial: bool = False,
    cutoff: int | None = None,
    tol: float | None = None,
) -> RelationReport:
    """Relations linking ``T^{(1,0,0)}`` or ``T^{(1,1,0)}`` with ``Q_i Qbar_j`` (``i != j``)."""
    if i == j:
        raise ValueError("mixed relations need i != j")
    ch = _chain(eta, params, cutoff)
    z = zeta
    at = ch.at
    if polynomial:
        Qi = lambda a: ch.Qp(i, at(z, a))  # noqa: E731
        Qj = lambda a: ch.Qbarp(j, at(z, a))  # noqa: E731
        qi = params.qpow(params.Phi[i - 1])
        qj = params.qpow(params.Phi[j - 1])
        b0, b1 = ch.bprod(z, 0), ch.bprod(z, 1)
        if variant == "t100":
            lhs = ch.Tp((1, 0, 0), z) @ Qi(-2) @ Qj(-1)
            rhs = [
                b0 / qi * Qi(-4) @ Qj(-1),
                b0 * qi * qj * Qi(0) @ Qj(-3),
                b1 / qj * Qi(-2) @ Qj(1),
            ]
        elif variant == "t110":
            lhs = ch.Tp((1, 1, 0), z) @ Qi(0) @ Qj(-1)
            rhs = [
                b1 * qi * Qi(2) @ Qj(-1),
                b1 / (qi * qj) * Qi(-2) @ Qj(1),
                b0 * qj * Qi(0) @ Qj(-3),
            ]
        else:
            raise ValueError("variant must be 't100' or 't110'")
    else:
        Qi = lambda a: ch.Q(i, at(z, a))  # noqa: E731
        Qj = lambda a: ch.Qbar(j, at(z, a))  # noqa: E731
        if variant == "t100":
            lhs = ch.T((1, 0, 0), z) @ Qi(-2) @ Qj(-1)
            rhs = [Qi(-4) @ Qj(-1), Qi(0) @ Qj(-3), Qi(-2) @ Qj(1)]
        elif variant == "t110":
            lhs = ch.T((1, 1, 0), z) @ Qi(0) @ Qj(-1)
            rhs = [Qi(2) @ Qj(-1), Qi(-2) @ Qj(1), Qi(0) @ Qj(-3)]
        else:
            raise ValueError("variant must be 't100' or 't110'")
    name = f"{variant}qq" + ("_poly" if polynomial else "")
    return ch.report(f"{name}_{i}{j}", _rel([lhs], rhs), tol, i=i, j=j)


def _tt_terms(variant: str, data, ch: Chain, z: SpectralPoint, barred: bool):
    sg = -1 if barred else 1

    def T(lam, a=0):
        return ch.T(lam, ch.at(z, sg * a), barred)

    if variant == "fr1":
        ell = int(data)
        return [T((ell - 1, 0, 0), -2) @ T((ell + 1, 0, 0))], [
            T((ell, 0, 0), -2) @ T((ell, 0, 0)),
            -T((ell, ell, 0), -2),
        ]
    if variant == "fr2":
        ell = int(data)
        return [T((ell - 1, ell - 1, 0), -2) @ T((ell + 1, ell + 1, 0))], [
            T((ell, ell, 0), -2) @ T((ell, ell, 0)),
            -T((ell, 0, 0)),
        ]
    if variant == "fr3":
        l1, l2 = (int(x) for x in data)
        return [T((l1, l2, 0))], [
            T((l1, 0, 0)) @ T((l2, 0, 0), 2),
            -T((l1 + 1, 0, 0), 2) @ T((l2 - 1, 0, 0)),
        ]
    if variant == "pjt1":
        l1, l2 = (int(x) for x in data)
        return [T((l1, l2, 0))], [
            T((1, 1, 0)) @ T((l1 - 1, l2 - 1, 0), -2),
            -T((1, 0, 0)) @ T((l1 - 2, l2 - 2, 0), -4),
            T((l1 - 3, l2 - 3, 0), -6),
        ]
    if variant == "pjt2":
        ell = int(data)
        return [T((ell, 2, 0))], [
            T((1, 1, 0)) @ T((ell - 1, 1, 0), -2),
            -T((1, 0, 0)) @ T((ell - 2, 0, 0), -4),
        ]
    if variant == "pjt3":
        ell = int(data)
        return [T((ell, 1, 0))], [T((1, 1, 0)) @ T((ell - 1, 0, 0), -2), -T((ell - 2, 0, 0), -4)]
    if variant == "pjt4":
        ell = int(data)
        return [T((ell, 0, 0))], [T((1, 0, 0)) @ T((ell - 1, 0, 0), -2), -T((ell - 1, 1, 0), -2)]
    if variant == "utt":
        l1, l2, l3, l4, l5, l6 = data
        terms = [
            T((l1 - 1, l2, l3 + 1)) @ T((l4 - 1, l5, l6 + 1)),
            -T((l1 - 1, l2, l4 + 1)) @ T((l3 - 1, l5, l6 + 1)),
            T((l1 - 1, l3, l4 + 1)) @ T((l2 - 1, l5, l6 + 1)),
            -T((l2 - 1, l3, l4 + 1)) @ T((l1 - 1, l5, l6 + 1)),
        ]
        return terms, []
    raise ValueError(f"unknown TT relation {variant!r}")


def tt_residual(
    variant: str,
    data,
    zeta: SpectralPoint,
    eta,
    params: Params,
    barred: bool = False,
    cutoff: int | None = None,
    tol: float | None = None,
) -> RelationReport:
    """Fusion-type relations among transfer matrices.

    ``variant`` is one of ``fr1, fr2, fr3, pjt1, pjt2, pjt3, pjt4, utt``.
    ``data`` is ``l`` (fr1, fr2, pjt2-4), ``(l1, l2)`` (fr3, pjt1) or six
    complex numbers (utt). ``barred=True`` checks the relation for
    ``Tbar`` with ``q`` replaced by ``1/q`` in every shift.
    """
    ch = _chain(eta, params, cutoff)
    lhs, rhs = _tt_terms(variant, data, ch, zeta, barred)
    if variant == "utt":
        scale = max(np.linalg.norm(t) for t in lhs)
        res = float(np.linalg.norm(sum(lhs)) / scale) if scale > 0 else 0.0
    else:
        res = _rel(lhs, rhs)
    name = ("bar_" if barred else "") + variant
    return ch.report(name, res, tol, data=[str(x) for x in np.atleast_1d(data)])


def tt_polynomial_residual(
    variant: str,
    data,
    zeta: SpectralPoint,
    eta,
    params: Params,
    barred: bool = False,
    cutoff: int | None = None,
    tol: float | None = None,
) -> RelationReport:
    """``fr2`` and ``fr3`` in the polynomial normalization, with their b-product coefficients."""
    ch = _chain(eta, params, cutoff)
    z = zeta
    sg = -1 if barred else 1

    def T(lam, a=0):
        return ch.Tp(lam, ch.at(z, sg * a), barred)

    if variant == "fr3":
        l1, l2 = (int(x) for x in data)
        coef = ch.bprod(z, 1.5, 0.5) if barred else ch.bprod(z, -1)
        lhs = [coef * T((l1, l2, 0))]
        rhs = [T((l1, 0, 0)) @ T((l2, 0, 0), 2), -T((l1 + 1, 0, 0), 2) @ T((l2 - 1, 0, 0))]
    elif variant == "fr2":
        ell = int(data)
        coef = ch.bprod(z, -ell - 1.5, -ell - 0.5) if barred else ch.bprod(z, ell + 1)
        lhs = [T((ell - 1, ell - 1, 0), -2) @ T((ell + 1, ell + 1, 0))]
        rhs = [T((ell, ell, 0), -2) @ T((ell, ell, 0)), -coef * T((ell, 0, 0))]
    else:
        raise ValueError("polynomial TT forms are available for 'fr2' and 'fr3'")
    name = ("bar_" if barred else "") + variant + "_poly"
    return ch.report(name, _rel(lhs, rhs), tol)


def _jt_matrix_det(ch: Chain, l1: int, l2: int, z: SpectralPoint, barred: bool) -> np.ndarray:
    sg = -1 if barred else 1
    N = 3**ch.n
    lt = [2 if i <= l2 else 1 for i in range(1, l1 + 1)]
    cache: dict = {}

    def E(k, j):
        if k in (0, 3):
            return np.eye(N, dtype=complex)
        if k == 1 or k == 2:
            key = (k, j)
            if key not in cache:
                lam = (1, 0, 0) if k == 1 else (1, 1, 0)
                cache[key] = ch.T(lam, ch.at(z, sg * (-2) * (j - 1)), barred)
            return cache[key]
        return None

    out = np.zeros((N, N), dtype=complex)
    for p in itertools.permutations(range(l1)):
        term = np.eye(N, dtype=complex)
        for row in range(l1):
            col = p[row]
            e = E(lt[row] - (row + 1) + (col + 1), col + 1)
            if e is None:
                term = None
                break
            term = term @ e
        if term is not None:
            out = out + perm_sign(p) * term
    return out


def jacobi_trudi_residual(
    l1: int,
    l2: int,
    zeta: SpectralPoint,
    eta,
    params: Params,
    barred: bool = False,
    cutoff: int | None = None,
    tol: float | None = None,
) -> RelationReport:
    """``T^{(l1,l2,0)}`` against the determinant over ``E_k`` (``E_1 = T^{(1,0,0)}``, ``E_2 = T^{(1,1,0)}``)."""
    if not l1 >= l2 >= 0:
        raise ValueError("need l1 >= l2 >= 0")
    if l1 > 4:
        raise ValueError("l1 is capped at 4")
    ch = _chain(eta, params, cutoff)
    if l1 == 0:
        lhs = ch.T((0, 0, 0), zeta, barred)
        rhs = np.eye(3**ch.n, dtype=complex)
    else:
        lhs = ch.T((l1, l2, 0), zeta, barred)
        rhs = _jt_matrix_det(ch, l1, l2, zeta, barred)
    name = ("bar_" if barred else "") + "jt"
    return ch.report(name, _rel([lhs], [rhs]), tol, l1=l1, l2=l2)


def bttot_residual(
    ell: int,
    which: str,
    zeta: SpectralPoint,
    eta,
    params: Params,
    polynomial: bool = True,
    shift_exponent: complex | None = None,
    cutoff: int | None = None,
    tol: float | None = None,
) -> RelationReport:
    """``Tbar^{(l,0,0)}`` (``which="row"``) or ``Tbar^{(l,l,0)}`` (``"column"``) as shifted ``T``.

    Row: shift ``(2l+1)/s`` and coefficient ``prod b(q^{1/2} x^{-1})``.
    Column: shift ``(2l-1)/s`` and coefficient ``prod b(q^{-(2l+1)/2} x^{-1})``.
    The coefficients apply in the polynomial normalization only.
    ``shift_exponent`` overrides the shift (negative control).
    """
    ch = _chain(eta, params, cutoff)
    if which == "row":
        lam, a, c = (ell, 0, 0), 2 * ell + 1, 0.5
    elif which == "column":
        lam, a, c = (ell, ell, 0), 2 * ell - 1, -(2 * ell + 1) / 2
    else:
        raise ValueError("which must be 'row' or 'column'")
    if shift_exponent is not None:
        a = shift_exponent
    if polynomial:
        lhs = ch.Tp(lam, zeta, barred=True)
        rhs = ch.bprod(zeta, c) * ch.Tp(lam, ch.at(zeta, a))
    else:
        lhs = ch.Tbar(lam, zeta)
        rhs = ch.T(lam, ch.at(zeta, a))
    name = f"bttot_{which}" + ("_poly" if polynomial else "")
    return ch.report(name, _rel([lhs], [rhs]), tol, ell=ell, shift=str(a))


def octct_residual(
    which: str, zeta: SpectralPoint, eta, params: Params, cutoff: int | None = None, tol: float | None = None
) -> RelationReport:
    """``Tbar^{(1,0,0)}(z) = T^{(1,0,0)}(q^{3/s}z)`` (``"100"``) or ``Tbar^{(1,1,0)}(z) = T^{(1,1,0)}(q^{1/s}z)`` (``"110"``)."""
    ch = _chain(eta, params, cutoff)
    lam, a = {"100": ((1, 0, 0), 3), "110": ((1, 1, 0), 1)}[which]
    return ch.report(f"octct_{which}", _rel([ch.Tbar(lam, zeta)], [ch.T(lam, ch.at(zeta, a))]), tol)


def tls_residual(
    lam, nu: complex, zeta: SpectralPoint, eta, params: Params, barred: bool = False,
    cutoff: int | None = None, tol: float | None = None,
) -> RelationReport:
    """``T^{lambda + nu}(q^{2nu/s} z) = T^lambda(z)`` (``q -> 1/q`` for ``Tbar``)."""
    ch = _chain(eta, params, cutoff)
    sg = -1 if barred else 1
    shifted = tuple(complex(x) + nu for x in lam)
    lhs = ch.T(shifted, ch.at(zeta, sg * 2 * nu), barred)
    rhs = ch.T(lam, zeta, barred)
    return ch.report(("bar_" if barred else "") + "tls", _rel([lhs], [rhs]), tol, nu=str(nu))


def twtt_residual(
    lam, zeta: SpectralPoint, eta, params: Params, cutoff: int | None = None, tol: float | None = None
) -> RelationReport:
    """``T^lambda`` against the alternating Weyl sum of single Q products."""
    ch = _chain(eta, params, cutoff)
    lr = [complex(lam[j]) + RHO[j] for j in range(3)]
    total = np.zeros((3**ch.n,) * 2, dtype=complex)
    for p in itertools.permutations(range(3)):
        mu = [lr[p[j]] - RHO[j] for j in range(3)]
        total = total + perm_sign(p) * ch.Ttilde(mu, zeta)
    return ch.report("twtt", _rel([ch.T(lam, zeta)], [total]), tol)


def antisymmetry_residual(
    lam, perm: Sequence[int], zeta: SpectralPoint, eta, params: Params, barred: bool = False,
    cutoff: int | None = None, tol: float | None = None,
) -> RelationReport:
    """``T^{p(lambda+rho)-rho} = sgn(p) T^lambda``."""
    ch = _chain(eta, params, cutoff)
    lr = [complex(lam[j]) + RHO[j] for j in range(3)]
    mu = [lr[perm[j]] - RHO[j] for j in range(3)]
    lhs = ch.T(mu, zeta, barred)
    rhs = perm_sign(perm) * ch.T(lam, zeta, barred)
    return ch.report("antisymmetry", _rel([lhs], [rhs]), tol)


def vanishing_residual(
    lam, zeta: SpectralPoint, eta, params: Params, barred: bool = False,
    cutoff: int | None = None, tol: float | None = None,
) -> RelationReport:
    """The Q-determinant for a weight with two equal entries of ``lambda + rho``.

    Two equal columns make the determinant vanish; the residual is its norm
    relative to the largest single Leibniz term.
    """
    ch = _chain(eta, params, cutoff)
    sgn = 1 if barred else -1
    fn = ch.Qbar if barred else ch.Q
    shifts = [sgn * 2 * (complex(lam[j]) + RHO[j]) for j in range(3)]
    mats = {(a, b): fn(a + 1, ch.at(zeta, shifts[b])) for a in range(3) for b in range(3)}
    total = np.zeros_like(mats[0, 0])
    scale = 0.0
    for p in itertools.permutations(range(3)):
        term = perm_sign(p) * mats[p[0], 0] @ mats[p[1], 1] @ mats[p[2], 2]
        total = total + term
        scale = max(scale, float(np.linalg.norm(term)))
    return ch.report("equal_columns", float(np.linalg.norm(total)) / scale, tol, lam=str(tuple(lam)))


def identity_residual(
    zeta: SpectralPoint, eta, params: Params, barred: bool = False, convention: str = "derived",
    cutoff: int | None = None, tol: float | None = None,
) -> RelationReport:
    """``T^{(0,0,0)} = 1`` (or ``Tbar``), as a relative Frobenius distance from the identity."""
    ch = _chain(eta, params, cutoff, convention)
    T0 = ch.T((0, 0, 0), zeta, barred)
    eye = np.eye(3**ch.n)
    res = float(np.linalg.norm(T0 - eye) / np.linalg.norm(eye))
    return ch.report(("bar_" if barred else "") + "t000", res, tol, convention=convention)


def fusion_closure_residual(
    ell: int, zeta: SpectralPoint, eta, params: Params, cutoff: int | None = None, tol: float | None = None
) -> RelationReport:
    """Build ``T^{(l,0,0)}`` by iterating the ``pjt3``/``pjt4`` recursions from ``T^{(1,0,0)}``, ``T^{(1,1,0)}``.

    The recursion is run on point values: ``T^{(m,0,0)}`` and
    ``T^{(m,1,0)}`` are needed at the shifts ``q^{-2k/s} z``.
    """
    ch = _chain(eta, params, cutoff)
    N = 3**ch.n
    eye = np.eye(N, dtype=complex)
    z = zeta
    memo: dict = {}

    def T1(lam, k):
        return ch.T(lam, ch.at(z, -2 * k))

    def row(m, k):
        # T^{(m,0,0)}(q^{-2k/s} z)
        if m == 0:
            return eye
        if m < 0:
            return np.zeros((N, N), dtype=complex)
        key = ("r", m, k)
        if key not in memo:
            if m == 1:
                memo[key] = T1((1, 0, 0), k)
            else:
                memo[key] = T1((1, 0, 0), k) @ row(m - 1, k + 1) - hook(m - 1, k + 1)
        return memo[key]

    def hook(m, k):
        # T^{(m,1,0)}(q^{-2k/s} z)
        if m == 1:
            return T1((1, 1, 0), k)
        key = ("h", m, k)
        if key not in memo:
            memo[key] = T1((1, 1, 0), k) @ row(m - 1, k + 1) - row(m - 2, k + 2)
        return memo[key]

    built = row(ell, 0)
    direct = ch.T((ell, 0, 0), z)
    return ch.report("fusion_closure", _rel([built], [direct]), tol, ell=ell)


def commutativity_residual(
    zetas: Sequence[SpectralPoint], eta, params: Params, cutoff: int | None = None, tol: float | None = None
) -> RelationReport:
    """Largest relative commutator among ``Q_i``, ``Qbar_i``, ``T^{(1,0,0)}``, ``T^{(1,1,0)}`` at the given points."""
    ch = _chain(eta, params, cutoff)
    mats = []
    for z in zetas:
        for i in (1, 2, 3):
            mats.append(ch.Q(i, z))
            mats.append(ch.Qbar(i, z))
        mats.append(ch.T((1, 0, 0), z))
        mats.append(ch.T((1, 1, 0), z))
    return ch.report("commutativity", _commutator_floor(mats), tol, points=len(zetas))


def weight_block_residual(
    zetas: Sequence[SpectralPoint], eta, params: Params, cutoff: int | None = None, tol: float | None = None
) -> RelationReport:
    """Largest relative mass of ``Q_i``, ``Qbar_i``, ``T^{(1,0,0)}``, ``T^{(1,1,0)}`` outside the weight blocks."""
    ch = _chain(eta, params, cutoff)
    labels = ch.cartan.weight_labels()
    same = np.all(labels[:, None, :] == labels[None, :, :], axis=-1)
    worst = 0.0
    for z in zetas:
        mats = [ch.Q(i, z) for i in (1, 2, 3)] + [ch.Qbar(i, z) for i in (1, 2, 3)]
        mats += [ch.T((1, 0, 0), z), ch.T((1, 1, 0), z)]
        for M in mats:
            worst = max(worst, float(np.linalg.norm(M[~same]) / np.linalg.norm(M)))
    return ch.report("weight_blocks", worst, tol, points=len(zetas))


def t_polynomial_part(
    lam,
    eta,
    params: Params,
    barred: bool = False,
    f3_shifts: Sequence[complex] | None = None,
    radius: float = 0.8,
    tol: float = 1e-8,
    cutoff: int | None = None,
    window: int | None = None,
):
    """Laurent coefficients of ``T^{p lambda}`` (or ``Tbar^{p lambda}``) in ``x = zeta^{s/2}``.

    ``f3_shifts`` overrides the three exponents ``c`` of the unbarred
    ``exp(f3(q^c z))`` dressing (a negative control). ``window`` fixes the
    degree window instead of widening it until the fit certifies.
    """
    from .chain import _x_to_point, laurent_fit

    ch = _chain(eta, params, cutoff)
    p = params
    s = p.s_total

    def func(x):
        z = _x_to_point(x, p)
        T = ch.T(lam, z, barred)
        if f3_shifts is None:
            return T / ch.t_prefactor(lam, z, barred)
        tot = sum(complex(v) for v in lam)
        pref = p.qpow(-tot * ch.n / 3)
        for e in ch.eta:
            zz = np.exp(s * (z.w - e.w))
            pref *= np.exp(s * (z.w - e.w) / 2)
            for c in f3_shifts:
                pref *= exp_f3(p.qpow(c) * zz, p)
        return T / pref

    if window is not None:
        return laurent_fit(func, window, window, radius=radius, tol=tol)
    return laurent_fit(func, ch.n, 8 * max(ch.n, 1) + 8, radius=radius, tol=tol)
