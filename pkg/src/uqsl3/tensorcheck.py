"""Exact checks of tensor-product modules of the Borel subalgebra.

Three families of Uq(b+) modules realized on oscillator spaces are checked
against closed-form action lists:

* the product of two oscillator representations (four oscillators A1 A2 B1 B2),
* the product of three oscillator representations (six oscillators, adding C1 C2),
* the basic two-oscillator representation, its three-index parent and the
  Verma module it is obtained from by a limit.

Truncated Fock spaces carry these modules only in part. Every vector is
therefore carried together with an exactness flag: when an operator that
raises some oscillator meets a vector with weight on that oscillator's top
state, the flag is cleared. Only exact vectors enter comparisons, so every
residual reported here is rounding noise unless a formula is wrong.

Generator images come from two routes that are compared against each other:
the explicit oscillator formulas, and the coproduct
``Delta(e_i) = e_i (x) 1 + q^{-h_i} (x) e_i`` applied to the two-oscillator
images of :mod:`uqsl3.lops`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .core import Params, SpectralPoint
from .fock import OscOp, OscillatorSpace, chi_minus_ops, chi_plus_ops
from .lops import _RHO_H, _rho_base, loop_label
from .reps import evaluate_gl3, jimbo_image, verma_action, verma_basis

__all__ = [
    "CoverageError",
    "BorelRep",
    "TrackedBlock",
    "CheckSummary",
    "oscillator_rep",
    "tensor_rep",
    "coproduct_image",
    "coassociativity_residual",
    "two_factor_rep",
    "three_factor_rep",
    "appendixB_checks",
    "appendixB_residual",
    "appendixC_checks",
    "appendixC_residual",
    "basic_rep_checks",
    "basic_rep_residual",
    "basic_limit_deviation",
    "basic_limit_ratio",
    "oscillator_identity_residual",
    "e1x1_interchanged_residual",
]

# Modes of the six-oscillator space, in tensor order.
A1, A2, B1, B2, C1, C2 = range(6)

# Cartan images on the four- and six-oscillator spaces: coefficients of N_k in h_i.
_H_TWO = np.array([[2, 1, -1, 1], [-1, 1, -1, -2], [-1, -2, 2, 1]], dtype=float)
_H_THREE = np.array(
    [[2, 1, -1, 1, -1, -2], [-1, 1, -1, -2, 2, 1], [-1, -2, 2, 1, -1, 1]], dtype=float
)

# Affine sl3 Cartan matrix, a_ij = alpha_j(h_i).
_CARTAN = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])

_EXACT_THRESHOLD = 1e-13
_FOUR_FACTOR_MIN_CUTOFF = 5
_SIX_FACTOR_CUTOFFS = (3, 4)


class CoverageError(ValueError):
    """Raised when a check finds no state on which it can be evaluated exactly."""


# ----------------------------------------------------------------- representations


@dataclass(eq=False)
class BorelRep:
    """Images of ``e_i`` and ``q^{nu h_i}`` on a joint oscillator space.

    Attributes
    ----------
    space : OscillatorSpace
        Sparse oscillator space the images act on.
    e : tuple of scipy.sparse matrices
        ``e_0, e_1, e_2``.
    h : ndarray, shape (3, n_modes)
        ``h_i = h_const[i] + sum_k h[i, k] N_k``.
    h_const : ndarray, shape (3,)
    """

    space: OscillatorSpace
    e: tuple
    h: np.ndarray
    h_const: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def dims(self) -> tuple:
        return self.space.dims

    @property
    def reps(self) -> tuple:
        return self.space.reps

    @property
    def hbar(self) -> complex:
        return self.space.hbar

    def qh_diag(self, i: int, nu: complex = 1.0) -> np.ndarray:
        """Diagonal of ``q^{nu h_i}``."""
        return self.space.qdiag(nu * self.h[i], nu * self.h_const[i])

    def qh(self, i: int, nu: complex = 1.0):
        return sp.diags(self.qh_diag(i, nu), format="csr")

    def image(self, generator: str, nu: complex = 1.0):
        """Sparse image of ``"e0".."e2"`` or ``"h0".."h2"`` (meaning ``q^{nu h}``)."""
        if len(generator) != 2 or generator[0] not in "eh" or generator[1] not in "012":
            raise ValueError(f"unknown Borel generator label {generator!r}")
        j = int(generator[1])
        return self.e[j] if generator[0] == "e" else self.qh(j, nu)


def _sparse_space(dims: Sequence[int], reps: Sequence[int], hbar: complex) -> OscillatorSpace:
    return OscillatorSpace(dims, reps, hbar, sparse=True)


def oscillator_rep(
    i: int,
    barred: bool,
    zeta: SpectralPoint,
    params: Params,
    reps: Sequence[int] = (1, 1),
    cutoff: int | None = None,
) -> BorelRep:
    """The graded two-oscillator representation ``(rho_i)_zeta`` or its barred form.

    The gradation multiplies ``e_j`` by ``zeta^{s_j}``.
    """
    D = params.cutoff if cutoff is None else int(cutoff)
    space = _sparse_space((D, D), reps, params.hbar)
    es, hs = [], []
    for j in range(3):
        m = loop_label(i, barred, j)
        es.append(sp.csr_matrix(_rho_base(m, "e", space)) * zeta.power(params.s[j]))
        hs.append(_RHO_H[m])
    return BorelRep(space, tuple(es), np.array(hs, dtype=float))


def tensor_rep(left: BorelRep, right: BorelRep) -> BorelRep:
    """``left (x)_Delta right`` with ``Delta(e_i) = e_i (x) 1 + q^{-h_i} (x) e_i``."""
    if left.hbar != right.hbar:
        raise ValueError("tensor factors must share the deformation parameter")
    space = _sparse_space(left.dims + right.dims, left.reps + right.reps, left.hbar)
    eye_r = sp.identity(right.space.size, dtype=complex, format="csr")
    es = tuple(
        sp.kron(left.e[i], eye_r, format="csr") + sp.kron(left.qh(i, -1.0), right.e[i], format="csr")
        for i in range(3)
    )
    h = np.hstack([left.h, right.h])
    return BorelRep(space, es, h, left.h_const + right.h_const)


def coproduct_image(generator: str, left: BorelRep, right: BorelRep, nu: complex = 1.0) -> OscOp:
    """Image of a Borel generator under ``left (x)_Delta right`` as a dense operator.

    ``"hK"`` labels give ``q^{nu hK} (x) q^{nu hK}``.
    """
    rep = tensor_rep(left, right)
    return OscOp(rep.dims, rep.image(generator, nu).toarray())


def _sparse_rel(a, b) -> float:
    den = max(sp.linalg.norm(a), sp.linalg.norm(b))
    return float(sp.linalg.norm(a - b) / den) if den > 0 else 0.0


def coassociativity_residual(a: BorelRep, b: BorelRep, c: BorelRep, nu: complex = 0.37 + 0.21j) -> float:
    """Largest relative gap between the two bracketings of a triple coproduct."""
    left = tensor_rep(tensor_rep(a, b), c)
    right = tensor_rep(a, tensor_rep(b, c))
    worst = 0.0
    for g in ("e0", "e1", "e2", "h0", "h1", "h2"):
        worst = max(worst, _sparse_rel(left.image(g, nu), right.image(g, nu)))
    return worst


def _explicit_rep(space: OscillatorSpace, terms: Sequence[Sequence], h: np.ndarray) -> BorelRep:
    """Build ``e_i`` from lists of ``(coef, factors)`` with factors applied as written."""
    es = []
    for generator_terms in terms:
        acc = space.zeros()
        for coef, factors in generator_terms:
            acc = acc + coef * reduce(lambda x, y: x @ y, factors)
        es.append(sp.csr_matrix(acc))
    return BorelRep(space, tuple(es), h)


def two_factor_rep(zeta3: SpectralPoint, zeta2: SpectralPoint, params: Params, cutoff: int = 5) -> BorelRep:
    """Explicit images on ``A1 A2 B1 B2`` (reps ``chi+ chi+ chi- chi+``)."""
    sp_ = _sparse_space((cutoff,) * 4, (1, 1, -1, 1), params.hbar)
    return _explicit_rep(sp_, _two_factor_terms(sp_, zeta3, zeta2, params), _H_TWO)


def _two_factor_terms(space, zeta3, zeta2, params, pad: int = 0):
    """Explicit generator terms of the four-oscillator module.

    ``pad`` extra zero coefficients are appended to every ``N`` vector so the
    same terms can live on the six-oscillator space.
    """
    s0, s1, s2 = params.s
    kap = params.kappa
    b, bd = space.b, space.bdag

    def qN(coeffs, const=0):
        return space.qN(tuple(coeffs) + (0,) * pad, const)

    e0 = [
        (zeta3.power(s0), [bd(A1), qN((0, -1, 0, 0))]),
        (-zeta2.power(s0), [b(B1), bd(B2), qN((-2, -1, -1, 1), 1)]),
    ]
    e1 = [
        (-zeta3.power(s1), [b(A1), bd(A2), qN((-1, 1, 0, 0), 1)]),
        (zeta2.power(s1) / kap, [b(B2), qN((1, -1, 0, -1))]),
    ]
    e2 = [
        (zeta3.power(s2) / kap, [b(A2), qN((0, -1, 0, 0))]),
        (zeta2.power(s2), [bd(B1), qN((1, 2, 0, -1))]),
    ]
    return [e0, e1, e2]


def three_factor_rep(
    zeta3: SpectralPoint, zeta2: SpectralPoint, zeta1: SpectralPoint, params: Params, cutoff: int = 3
) -> BorelRep:
    """Explicit images on ``A1 A2 B1 B2 C1 C2`` (reps ``chi+ chi+ chi- chi+ chi- chi-``)."""
    space = _sparse_space((cutoff,) * 6, (1, 1, -1, 1, -1, -1), params.hbar)
    s0, s1, s2 = params.s
    kap = params.kappa
    b, bd, qN = space.b, space.bdag, space.qN
    e0, e1, e2 = _two_factor_terms(space, zeta3, zeta2, params, pad=2)
    e0 = e0 + [(zeta1.power(s0) / kap, [b(C2), qN((-2, -1, 1, -1, 0, -1))])]
    e1 = e1 + [(zeta1.power(s1), [bd(C1), qN((1, -1, 1, 2, 0, -1))])]
    e2 = e2 + [(-zeta1.power(s2), [b(C1), bd(C2), qN((1, 2, -2, -1, -1, 1), 1)])]
    return _explicit_rep(space, [e0, e1, e2], _H_THREE)


def _generator_residual(explicit: BorelRep, routes: Sequence[BorelRep], nu: complex) -> float:
    """Gap between explicit images and every coproduct route, plus Cartan conjugation."""
    worst = 0.0
    for route in routes:
        for g in ("e0", "e1", "e2", "h0", "h1", "h2"):
            worst = max(worst, _sparse_rel(explicit.image(g, nu), route.image(g, nu)))
    # q^{nu h_i} e_j q^{-nu h_i} = q^{nu a_ij} e_j
    q_nu = np.exp(explicit.hbar * nu)
    for i in range(3):
        for j in range(3):
            lhs = explicit.qh(i, nu) @ explicit.e[j] @ explicit.qh(i, -nu)
            worst = max(worst, _sparse_rel(lhs, explicit.e[j] * q_nu ** _CARTAN[i, j]))
    return worst


# ------------------------------------------------------------ tracked application

Word = tuple
Expr = dict


def _gen(*names: str) -> Expr:
    return {tuple(names): 1.0 + 0j}


def _lin(*terms) -> Expr:
    """Linear combination of ``(coef, expr)`` pairs."""
    out: dict = {}
    for coef, expr in terms:
        for w, c in expr.items():
            out[w] = out.get(w, 0) + coef * c
    return {w: c for w, c in out.items() if c != 0}


def _mul(*exprs: Expr) -> Expr:
    def two(a, b):
        out: dict = {}
        for wa, ca in a.items():
            for wb, cb in b.items():
                out[wa + wb] = out.get(wa + wb, 0) + ca * cb
        return out

    return reduce(two, exprs)


def _pow(expr: Expr, n: int) -> Expr:
    out = {(): 1.0 + 0j}
    for _ in range(n):
        out = _mul(out, expr)
    return out


@dataclass(frozen=True, eq=False)
class TrackedBlock:
    """Columns of vectors with per-column exactness and magnitude scale.

    Attributes
    ----------
    vecs : ndarray, shape (size, m)
    exact : ndarray of bool, shape (m,)
        ``False`` once truncation may have corrupted the column.
    scale : ndarray, shape (m,)
        Largest norm of an individual term that entered the column; used as
        the denominator of relative residuals so cancellations are not
        mistaken for large errors.
    """

    vecs: np.ndarray
    exact: np.ndarray
    scale: np.ndarray

    @classmethod
    def from_vecs(cls, vecs: np.ndarray) -> "TrackedBlock":
        vecs = np.asarray(vecs, dtype=complex)
        if vecs.ndim == 1:
            vecs = vecs[:, None]
        return cls(vecs, np.ones(vecs.shape[1], dtype=bool), np.linalg.norm(vecs, axis=0))

    def column(self, c: int) -> "TrackedBlock":
        return TrackedBlock(self.vecs[:, c : c + 1], self.exact[c : c + 1], self.scale[c : c + 1])

    @staticmethod
    def stack(blocks: Sequence["TrackedBlock"]) -> "TrackedBlock":
        return TrackedBlock(
            np.hstack([b.vecs for b in blocks]),
            np.concatenate([b.exact for b in blocks]),
            np.concatenate([b.scale for b in blocks]),
        )

    @staticmethod
    def combine(terms: Iterable, size: int) -> "TrackedBlock":
        """Single-column linear combination of ``(coef, TrackedBlock | None)``.

        A ``None`` block with a nonzero coefficient marks the result inexact.
        """
        vec = np.zeros(size, dtype=complex)
        exact = True
        scale = 0.0
        for coef, blk in terms:
            if coef == 0:
                continue
            if blk is None:
                exact = False
                continue
            part = coef * blk.vecs[:, 0]
            vec += part
            exact = exact and bool(blk.exact[0])
            scale = max(scale, float(np.linalg.norm(part)))
        return TrackedBlock(vec[:, None], np.array([exact]), np.array([scale]))


class _Engine:
    """Applies words of named sparse operators with exactness tracking."""

    def __init__(self, space: OscillatorSpace, ops: Mapping[str, object]):
        self.space = space
        self.ops = {k: sp.csr_matrix(v) for k, v in ops.items()}
        occ = space.occupation()
        self._top = [occ[:, m] == space.dims[m] - 1 for m in range(len(space.dims))]
        self._raises = {}
        for name, mat in self.ops.items():
            coo = mat.tocoo()
            nz = np.abs(coo.data) > 0
            r, c = coo.row[nz], coo.col[nz]
            self._raises[name] = [m for m in range(len(space.dims)) if np.any(occ[r, m] > occ[c, m])]

    def _step(self, name: str, v: np.ndarray, exact: np.ndarray) -> tuple:
        thr = _EXACT_THRESHOLD * np.max(np.abs(v), axis=0)
        for m in self._raises[name]:
            if self._top[m].any():
                exact = exact & ~(np.max(np.abs(v[self._top[m]]), axis=0) > thr)
        return self.ops[name] @ v, exact

    def apply_word(self, word: Word, blk: TrackedBlock, memo: dict | None = None) -> TrackedBlock:
        """Apply ``word`` (rightmost letter first); ``memo`` caches suffixes per block."""
        memo = {} if memo is None else memo
        start = len(word)
        while start > 0 and word[start - 1 :] in memo:
            start -= 1
        if start < len(word):
            v, exact = memo[word[start:]]
        else:
            v, exact = blk.vecs, blk.exact
        for pos in range(start - 1, -1, -1):
            v, exact = self._step(word[pos], v, exact)
            memo[word[pos:]] = (v, exact)
        return TrackedBlock(v, exact, blk.scale)

    def apply(self, expr: Expr, blk: TrackedBlock, memo: dict | None = None) -> TrackedBlock:
        memo = {} if memo is None else memo
        acc = np.zeros_like(blk.vecs)
        exact = blk.exact.copy()
        scale = np.zeros(blk.vecs.shape[1])
        for word, coef in expr.items():
            res = self.apply_word(word, blk, memo) if word else blk
            part = coef * res.vecs
            acc += part
            exact &= res.exact
            scale = np.maximum(scale, np.linalg.norm(part, axis=0))
        return TrackedBlock(acc, exact, scale)


def _rel_cols(lhs: TrackedBlock, rhs: TrackedBlock) -> np.ndarray:
    """Per-column relative gap, NaN where either side is inexact."""
    diff = np.linalg.norm(lhs.vecs - rhs.vecs, axis=0)
    den = np.maximum.reduce(
        [lhs.scale, rhs.scale, np.linalg.norm(lhs.vecs, axis=0), np.linalg.norm(rhs.vecs, axis=0)]
    )
    out = np.where(den > 0, diff / np.where(den > 0, den, 1.0), 0.0)
    return np.where(lhs.exact & rhs.exact, out, np.nan)


@dataclass
class CheckSummary:
    """Largest residual and number of exactly evaluated cases per check."""

    residuals: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def record(self, name: str, values) -> None:
        vals = np.atleast_1d(np.asarray(values, dtype=float))
        vals = vals[~np.isnan(vals)]
        self.counts[name] = self.counts.get(name, 0) + int(vals.size)
        prev = self.residuals.get(name, 0.0)
        self.residuals[name] = max(prev, float(vals.max())) if vals.size else prev

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def require_coverage(self) -> None:
        empty = sorted(k for k, v in self.counts.items() if v == 0)
        if empty:
            raise CoverageError(f"no exactly representable state for: {', '.join(empty)}")


# ---------------------------------------------------------------- module helpers


class _TensorModule:
    """Shared machinery for the four- and six-oscillator modules."""

    def __init__(self, rep: BorelRep, params: Params, extra_ops: Mapping[str, object] | None = None):
        self.rep = rep
        self.params = params
        self.q = params.q
        self.kappa = params.kappa
        ops = {"e0": rep.e[0], "e1": rep.e[1], "e2": rep.e[2]}
        ops.update(extra_ops or {})
        self.engine = _Engine(rep.space, ops)
        self.size = rep.space.size
        q = self.q
        e0, e1, e2 = _gen("e0"), _gen("e1"), _gen("e2")
        self.E = (e0, e1, e2)
        self.x0 = _lin((1, _mul(e1, e2)), (-1 / q, _mul(e2, e1)))
        self.x1 = _lin((1, _mul(e2, e0)), (-1 / q, _mul(e0, e2)))
        self.x2 = _lin((1, _mul(e0, e1)), (-1 / q, _mul(e1, e0)))
        self.y0 = _lin((1, _mul(e0, self.x0)), (-1, _mul(self.x0, e0)))
        self.y1 = _lin((1, _mul(e1, self.x1)), (-1, _mul(self.x1, e1)))
        self.y2 = _lin((1, _mul(e2, self.x2)), (-1, _mul(self.x2, e2)))

    def vacuum(self) -> TrackedBlock:
        v = np.zeros(self.size, dtype=complex)
        v[0] = 1.0
        return TrackedBlock.from_vecs(v)

    def probe_block(self) -> TrackedBlock:
        """Fock basis states at most ``cutoff - 3`` deep in every oscillator."""
        occ = self.rep.space.occupation()
        top = np.array(self.rep.space.dims) - 1
        cols = np.flatnonzero(np.all(occ <= top - 2, axis=1))
        vecs = np.zeros((self.size, len(cols)), dtype=complex)
        vecs[cols, np.arange(len(cols))] = 1.0
        return TrackedBlock.from_vecs(vecs)

    def identity(self, summary: CheckSummary, name: str, lhs: Expr, rhs: Expr, blocks: Sequence[TrackedBlock]):
        for blk in blocks:
            memo: dict = {}
            summary.record(name, _rel_cols(self.engine.apply(lhs, blk, memo), self.engine.apply(rhs, blk, memo)))

    def cartan_check(self, summary: CheckSummary, basis: Mapping, eigen: Callable, nu: complex) -> None:
        for key, w in basis.items():
            if not w.exact[0]:
                continue
            for i in range(3):
                lhs = TrackedBlock(self.rep.qh_diag(i, nu)[:, None] * w.vecs, w.exact, w.scale)
                rhs = TrackedBlock(np.exp(self.params.hbar * nu * eigen(i, *key)) * w.vecs, w.exact, w.scale)
                summary.record("cartan", _rel_cols(lhs, rhs))

    def action_check(self, summary: CheckSummary, name: str, basis: Mapping, gen: int, formula: Callable) -> None:
        """Compare ``e_gen w`` with ``formula(key)``, a list of ``(coef, key)``."""
        for key, w in basis.items():
            if not w.exact[0]:
                continue
            lhs = self.engine.apply(self.E[gen], w)
            rhs = TrackedBlock.combine(((c, basis.get(k)) for c, k in formula(*key)), self.size)
            summary.record(name, _rel_cols(lhs, rhs))


def _build_basis(engine: _Engine, keys: Iterable, seed: Callable, steps: Sequence[tuple]) -> dict:
    """Vectors ``P_1^{n_1} P_2^{n_2} P_3^{n_3} seed(k)``, built outward from ``n = 0``.

    ``steps[j]`` is the expression ``P_{j+1}``; the leftmost nonzero index is
    peeled first so each vector is one application away from a stored one.
    """
    basis: dict = {}
    for n, k in sorted(keys, key=lambda nk: (sum(nk[0]), nk[0][::-1], nk[1])):
        if n == (0, 0, 0):
            basis[(n, k)] = seed(k)
            continue
        j = next(i for i in range(3) if n[i] > 0)
        prev = list(n)
        prev[j] -= 1
        parent = basis.get((tuple(prev), k))
        if parent is None or not parent.exact[0]:
            basis[(n, k)] = TrackedBlock(np.zeros((engine.space.size, 1), complex), np.array([False]), np.zeros(1))
            continue
        basis[(n, k)] = engine.apply(steps[j], parent)
    return basis


def _shift(t: tuple, d: tuple) -> tuple:
    return tuple(a + b for a, b in zip(t, d))


def _ok(*idx) -> bool:
    return all(i >= 0 for t in idx for i in (t if isinstance(t, tuple) else (t,)))


# ------------------------------------------------------------------ four factors


def appendixB_checks(
    zeta3: SpectralPoint, zeta2: SpectralPoint, params: Params, cutoff: int = 5, nu: complex = 0.37 + 0.21j
) -> CheckSummary:
    """All checks on the product of the ``++`` and ``-+`` oscillator modules.

    Parameters
    ----------
    zeta3, zeta2 : SpectralPoint
        Spectral parameters of the two tensor factors.
    params : Params
    cutoff : int
        Fock cutoff per oscillator (at least 5).
    nu : complex
        Exponent used for the Cartan checks.

    Returns
    -------
    CheckSummary
        Keys: ``generators`` (explicit images against the coproduct route and
        Cartan conjugation), ``cartan``, ``e0``, ``e1``, ``e2`` (action list on
        the basis ``w^k_n``), ``ex``, ``y``, ``movement``, ``terminators``,
        ``serre``.
    """
    if cutoff < _FOUR_FACTOR_MIN_CUTOFF:
        raise ValueError(f"four-factor checks need cutoff >= {_FOUR_FACTOR_MIN_CUTOFF}")
    D = cutoff
    explicit = two_factor_rep(zeta3, zeta2, params, D)
    route = tensor_rep(
        oscillator_rep(3, False, zeta3, params, (1, 1), D), oscillator_rep(2, False, zeta2, params, (-1, 1), D)
    )
    summary = CheckSummary()
    summary.record("generators", _generator_residual(explicit, [route], nu))

    space = route.space
    mod = _TensorModule(route, params, {"bB1": space.b(B1)})
    q, kap, qn = params.q, params.kappa, params.qnum
    s, s2 = params.s_total, params.s[2]
    z3s, z2s, z2s2 = zeta3.power(s), zeta2.power(s), zeta2.power(s2)
    eng = mod.engine
    E0, E1, E2 = mod.E
    x0, x1, x2, y0, y1, y2 = mod.x0, mod.x1, mod.x2, mod.y0, mod.y1, mod.y2
    bB1 = _gen("bB1")

    def seed(k):
        return eng.apply(_pow(bB1, k), mod.vacuum())

    keys = [(n, k) for n in itertools.product(range(D), repeat=3) for k in range(D)]
    basis = _build_basis(eng, keys, seed, (x1, E0, x2))

    def eig(i, n, k):
        n1, n2, n3 = n
        return (n1 + 2 * n2 + n3 + k + 1, -2 * n1 - n2 + n3 + k + 1, n1 - n2 - 2 * n3 - 2 * k - 2)[i]

    mod.cartan_check(summary, basis, eig, nu)

    def f0(n, k):
        return [(q ** (-n[0]), (_shift(n, (0, 1, 0)), k))]

    def f1(n, k):
        n1, n2, n3 = n
        out = [(-q * qn(n2), (_shift(n, (0, -1, 1)), k))]
        out.append((z2s / kap * q ** (-n1 + 2 * n3 + 1) * qn(n1), (_shift(n, (-1, 0, 0)), k)))
        out.append((z2s2 * kap * q ** (-n1 + 2 * n3 + 2) * qn(n1) * qn(k), (_shift(n, (-1, 0, 1)), k - 1)))
        return out

    def f2(n, k):
        n1, n2, n3 = n
        out = [((q ** (-n3) * z3s - q**n3 * z2s) / kap * q ** (n1 - n2 - 1) * qn(n3), (_shift(n, (0, 0, -1)), k))]
        out.append((q ** (n1 - n2 + 1) * qn(n2), (_shift(n, (1, -1, 0)), k)))
        out.append((-z2s2 * q ** (n1 - n2 + 2 * n3) * qn(k), (n, k - 1)))
        return out

    for g, f in ((0, f0), (1, f1), (2, f2)):
        mod.action_check(summary, f"e{g}", basis, g, f)

    blocks = [TrackedBlock.stack([mod.probe_block()] + [w for w in basis.values() if w.exact[0]])]
    ident = lambda name, l, r: mod.identity(summary, name, l, r, blocks)  # noqa: E731
    ident("ex", _mul(E0, x1), _lin((1 / q, _mul(x1, E0))))
    ident("ex", _mul(E1, x2), _lin((1 / q, _mul(x2, E1))))
    ident("ex", _mul(E2, x0), _lin((1 / q, _mul(x0, E2))))
    ident("ex", _mul(E0, x2), _lin((q, _mul(x2, E0))))
    ident("ex", _mul(E1, x0), _lin((q, _mul(x0, E1))))
    ident("ex", _mul(E2, x1), _lin((q, _mul(x1, E2))))
    ident("y", _mul(y1, x1), _lin((q**-2, _mul(x1, y1))))
    ident("y", _mul(y1, E0), _mul(E0, y1))
    ident("y", _mul(y1, x2), _lin((q**2, _mul(x2, y1))))
    ident("y", _mul(y0, x2), _lin((q**-2, _mul(x2, y0))))
    ident("y", y2, _lin((-1, y0), (-1, y1)))
    for m in (1, 2, 3):
        ident("movement", _mul(E1, _pow(x1, m)),
              _lin((1, _mul(_pow(x1, m), E1)), (q ** (-m + 1) * qn(m), _mul(_pow(x1, m - 1), y1))))
        ident("movement", _mul(E1, _pow(E0, m)),
              _lin((q**m, _mul(_pow(E0, m), E1)), (-q * qn(m), _mul(_pow(E0, m - 1), x2))))
        ident("movement", _mul(E2, _pow(x1, m)), _lin((q**m, _mul(_pow(x1, m), E2))))
        ident("movement", _mul(E2, _pow(E0, m)),
              _lin((q**-m, _mul(_pow(E0, m), E2)), (q ** (-m + 1) * qn(m), _mul(x1, _pow(E0, m - 1)))))
        ident("movement", _mul(E2, _pow(x2, m)),
              _lin((1, _mul(_pow(x2, m), E2)), (-(q ** (-m + 1)) * qn(m), _mul(_pow(x2, m - 1), y0)),
                   (-(q ** (m - 1)) * qn(m), _mul(_pow(x2, m - 1), y1))))
        ident("movement", _mul(y1, _pow(x2, m)), _lin((q ** (2 * m), _mul(_pow(x2, m), y1))))

    for k in range(D):
        wk = basis[((0, 0, 0), k)]
        prev = basis.get(((0, 0, 0), k - 1))
        x2prev = eng.apply(x2, prev) if prev is not None else None
        checks = [
            (E1, []),
            (E2, [(-z2s2 * qn(k), prev)]),
            (y0, [(-z3s / kap * q**-2, wk)]),
            (y1, [(z2s / kap, wk), (z2s2 * kap * q * qn(k), x2prev)]),
        ]
        for op, rhs in checks:
            summary.record("terminators", _rel_cols(eng.apply(op, wk), TrackedBlock.combine(rhs, mod.size)))

    _serre(mod, summary, blocks)
    summary.require_coverage()
    return summary


def _serre(mod: _TensorModule, summary: CheckSummary, blocks: Sequence[TrackedBlock]) -> None:
    E = mod.E
    two = mod.params.qnum(2)
    for i in range(3):
        for j in range(3):
            if i != j:
                lhs = _lin((1, _mul(E[i], E[i], E[j])), (-two, _mul(E[i], E[j], E[i])), (1, _mul(E[j], E[i], E[i])))
                mod.identity(summary, "serre", lhs, {}, blocks)


def appendixB_residual(zeta3: SpectralPoint, zeta2: SpectralPoint, params: Params, cutoff: int = 5) -> float:
    """Largest relative deviation over every four-oscillator check."""
    return appendixB_checks(zeta3, zeta2, params, cutoff).max_residual


# ------------------------------------------------------------------- six factors


def _colex_key(k: tuple) -> tuple:
    return (k[2], k[1], k[0])


def appendixC_checks(
    zeta3: SpectralPoint,
    zeta2: SpectralPoint,
    zeta1: SpectralPoint,
    params: Params,
    cutoff: int = 3,
    nu: complex = 0.37 + 0.21j,
    lam: Sequence[complex] = (0.43 + 0.11j, -0.27 + 0.05j, 0.19 - 0.08j),
    zeta: SpectralPoint | None = None,
) -> CheckSummary:
    """All checks on the product of the ``++``, ``-+`` and ``--`` oscillator modules.

    Parameters
    ----------
    zeta3, zeta2, zeta1 : SpectralPoint
        Spectral parameters of the three tensor factors (generic checks).
    params : Params
    cutoff : {3, 4}
        Fock cutoff per oscillator; the ambient dimension is ``cutoff**6``.
    nu : complex
        Exponent used for the Cartan checks.
    lam, zeta
        Weight and spectral parameter for the rescaled basis. The specialized
        checks set ``zeta_j = q^{-2 (lam + rho)_j / s} zeta``.

    Returns
    -------
    CheckSummary
        Keys: ``generators``, ``coassociativity``, ``cartan``, ``e0``, ``e1``,
        ``e2``, ``ex``, ``z``, ``movement``, ``terminators``, ``filtration``,
        ``serre``, ``rescaled_e*`` (rescaled basis, generic parameters),
        ``rebased_e*`` (after the index-dependent renormalization, specialized
        parameters) and ``quotient`` (top filtration layer against the Verma
        module).
    """
    if cutoff not in _SIX_FACTOR_CUTOFFS:
        raise ValueError(f"six-factor checks support cutoff in {_SIX_FACTOR_CUTOFFS} (memory guard)")
    zeta = SpectralPoint(0.21 - 0.13j) if zeta is None else zeta
    summary = CheckSummary()
    _appendix_c_generic(summary, zeta3, zeta2, zeta1, params, cutoff, nu)
    spec = _specialized_points(lam, zeta, params)
    _appendix_c_rescaled(summary, "rescaled", (zeta3, zeta2, zeta1), lam, zeta, params, cutoff, quotient=False)
    _appendix_c_rescaled(summary, "rebased", spec, lam, zeta, params, cutoff, quotient=True)
    summary.require_coverage()
    return summary


def _specialized_points(lam, zeta: SpectralPoint, params: Params) -> tuple:
    """``(zeta_3, zeta_2, zeta_1)`` with ``zeta_j = q^{-2 (lam + rho)_j / s} zeta``."""
    rho = (1, 0, -1)
    pts = [SpectralPoint(zeta.w - 2 * params.hbar * (lam[j] + rho[j]) / params.s_total) for j in range(3)]
    return pts[2], pts[1], pts[0]


def _six_factor_module(zeta3, zeta2, zeta1, params, cutoff, extra=None):
    D = cutoff
    explicit = three_factor_rep(zeta3, zeta2, zeta1, params, D)
    r3 = oscillator_rep(3, False, zeta3, params, (1, 1), D)
    r2 = oscillator_rep(2, False, zeta2, params, (-1, 1), D)
    r1 = oscillator_rep(1, False, zeta1, params, (-1, -1), D)
    space = explicit.space
    ops = {"bB1": space.b(B1), "bC1": space.b(C1), "bC2": space.b(C2)}
    ops.update(extra(space) if extra else {})
    return explicit, (r3, r2, r1), _TensorModule(explicit, params, ops)


def _six_basis(mod: _TensorModule, D: int, steps) -> dict:
    eng = mod.engine
    bB1, bC1, bC2 = _gen("bB1"), _gen("bC1"), _gen("bC2")

    def seed(k):
        return eng.apply(_mul(_pow(bB1, k[0]), _pow(bC1, k[1]), _pow(bC2, k[2])), mod.vacuum())

    rng = range(D)
    keys = [(n, k) for n in itertools.product(rng, repeat=3) for k in itertools.product(rng, repeat=3)]
    return _build_basis(eng, keys, seed, steps)


def _z3_matrix(space: OscillatorSpace, zeta3, zeta2, zeta1, params: Params):
    s0, s1, s2 = params.s
    s = params.s_total
    q, kap = params.q, params.kappa
    b, bd, qN = space.b, space.bdag, space.qN
    terms = [
        (-zeta1.power(s0) * zeta2.power(s1) * zeta3.power(s2) / kap * q,
         [b(A2), b(B2), b(C2), qN((-1, -3, 1, -2, 0, -1))]),
        (-zeta2.power(s0 + s1) * zeta3.power(s2) / kap, [b(A2), b(B1), qN((-1, -3, -1, -1, 0, 0))]),
        (-zeta1.power(s0) * zeta3.power(s1 + s2) / kap, [b(A1), b(C2), qN((-3, -2, 1, -1, 0, -1))]),
        (zeta2.power(s0) * zeta3.power(s1 + s2) * q, [b(A1), b(B1), bd(B2), qN((-3, -2, -1, 1, 0, 0))]),
        (zeta3.power(s) / kap * q**-2, [qN((-2, -2, 0, 0, 0, 0))]),
    ]
    acc = space.zeros()
    for coef, factors in terms:
        acc = acc + coef * reduce(lambda x, y: x @ y, factors)
    return acc


def _appendix_c_generic(summary, zeta3, zeta2, zeta1, params, D, nu):
    explicit, (r3, r2, r1), mod = _six_factor_module(
        zeta3, zeta2, zeta1, params, D, extra=lambda space: {"z3": _z3_matrix(space, zeta3, zeta2, zeta1, params)}
    )
    routes = [tensor_rep(tensor_rep(r3, r2), r1), tensor_rep(r3, tensor_rep(r2, r1))]
    summary.record("generators", _generator_residual(explicit, routes, nu))
    summary.record("coassociativity", coassociativity_residual(r3, r2, r1, nu))

    q, kap, qn = params.q, params.kappa, params.qnum
    s = params.s_total
    _, s1, s2 = params.s
    z1s, z2s, z3s = zeta1.power(s), zeta2.power(s), zeta3.power(s)
    z1s1, z1s2, z2s2, z1s12 = zeta1.power(s1), zeta1.power(s2), zeta2.power(s2), zeta1.power(s1 + s2)
    eng = mod.engine
    E0, E1, E2 = mod.E
    x0, x1, x2, y0, y1, y2 = mod.x0, mod.x1, mod.x2, mod.y0, mod.y1, mod.y2
    basis = _six_basis(mod, D, (x1, E0, x2))

    def eig(i, n, k):
        n1, n2, n3 = n
        k1, k2, k3 = k
        return (
            n1 + 2 * n2 + n3 + k1 + k2 + 2 * k3 + 4,
            -2 * n1 - n2 + n3 + k1 - 2 * k2 - k3 - 2,
            n1 - n2 - 2 * n3 - 2 * k1 + k2 - k3 - 2,
        )[i]

    mod.cartan_check(summary, basis, eig, nu)

    def f0(n, k):
        return [(q ** (-n[0]), (_shift(n, (0, 1, 0)), k))]

    def f1(n, k):
        n1, n2, n3 = n
        k1, k2, k3 = k
        return [
            (qn(n1) / kap * q ** (n2 + n3) * (q ** (-n1 - n2 + n3 + 1) * z2s - q ** (n1 + n2 - n3 + 1) * z1s),
             (_shift(n, (-1, 0, 0)), k)),
            (-q * qn(n2), (_shift(n, (0, -1, 1)), k)),
            (-z1s1 * q ** (2 * n1 + n2 - n3 - k1 + k3) * qn(k2), (n, _shift(k, (0, -1, 0)))),
            (-z1s2 * kap * q ** (-n1 + 2 * n3 + 2 * k1 + k2 - k3 + 5) * qn(n1) * qn(k3),
             (_shift(n, (-1, 0, 1)), _shift(k, (0, 1, -1)))),
            (z2s2 * kap * q ** (-n1 + 2 * n3 + 2) * qn(n1) * qn(k1), (_shift(n, (-1, 0, 1)), _shift(k, (-1, 0, 0)))),
            (-z1s12 * kap * q ** (n1 + 2 * n2 + n3 + k1 + 2) * qn(n1) * qn(k3),
             (_shift(n, (-1, 1, 0)), _shift(k, (0, 0, -1)))),
        ]

    def f2(n, k):
        n1, n2, n3 = n
        k1, k2, k3 = k
        return [
            (qn(n3) / kap * q ** (n1 - n2) * (q ** (-n3 - 1) * z3s - q ** (n3 - 1) * z2s), (_shift(n, (0, 0, -1)), k)),
            (q ** (n1 - n2 + 1) * qn(n2), (_shift(n, (1, -1, 0)), k)),
            (-z2s2 * q ** (n1 - n2 + 2 * n3) * qn(k1), (n, _shift(k, (-1, 0, 0)))),
            (z1s2 * q ** (n1 - n2 + 2 * n3 + 2 * k1 + k2 - k3 + 3) * qn(k3), (n, _shift(k, (0, 1, -1)))),
        ]

    for g, f in ((0, f0), (1, f1), (2, f2)):
        mod.action_check(summary, f"e{g}", basis, g, f)

    z3 = _gen("z3")
    z1 = _lin((1, y0), (1, z3))
    z2 = _lin((-1, y2), (1, z3))
    r3 = _lin((1, _mul(z1, x2)), (-(q**2), _mul(x2, z1)))
    p3 = _lin((1, _mul(x1, x2)), (-(q**3), _mul(x2, x1)))

    blocks = [TrackedBlock.stack([mod.probe_block()] + [w for w in basis.values() if w.exact[0]])]

    def ident(name, lhs, rhs):
        mod.identity(summary, name, lhs, rhs, blocks)

    ident("ex", _mul(E0, x1), _lin((1 / q, _mul(x1, E0))))
    ident("ex", _mul(E1, x2), _lin((1 / q, _mul(x2, E1))))
    ident("ex", _mul(E2, x0), _lin((1 / q, _mul(x0, E2))))
    ident("ex", _mul(E0, x2), _lin((q, _mul(x2, E0))))
    ident("ex", _mul(E1, x0), _lin((q, _mul(x0, E1))))
    ident("ex", _mul(E2, x1), _lin((q, _mul(x1, E2))))
    ident("z", y2, _lin((-1, y0), (-1, y1)))
    ident("z", y1, _lin((1, z2), (-1, z1)))
    ident("z", _mul(z1, x1), _lin((q**2, _mul(x1, z1))))
    ident("z", _mul(z2, x1), _lin((q**-2, _mul(x1, z2))))
    ident("z", _mul(z1, E0), _lin((q**2, _mul(E0, z1))))
    ident("z", _mul(z2, E0), _mul(E0, z2))
    ident("z", _mul(z2, x2), _lin((q**2, _mul(x2, z2))))
    ident("z", _mul(r3, x2), _mul(x2, r3))
    ident("z", _mul(p3, x2), _lin((q, _mul(x2, p3))))
    for m in (1, 2):
        ident("movement", _mul(E1, _pow(x1, m)), _e1x1_movement(m, q, qn, x1, E1, z1, z2))
        ident("movement", _mul(E1, _pow(x2, m)), _lin((q**-m, _mul(_pow(x2, m), E1))))
        ident("movement", _mul(z1, _pow(x2, m)),
              _lin((q ** (2 * m), _mul(_pow(x2, m), z1)), (q ** (m - 1) * qn(m), _mul(_pow(x2, m - 1), r3))))
        ident("movement", _mul(x1, _pow(x2, m)),
              _lin((q ** (3 * m), _mul(_pow(x2, m), x1)), (q ** (2 * (m - 1)) * qn(m), _mul(_pow(x2, m - 1), p3))))

    def phi(n):
        if min(n) < 0:
            return {}
        return _mul(_pow(x1, n[0]), _pow(E0, n[1]), _pow(x2, n[2]))

    for n in itertools.product(range(2), repeat=3):
        n1, n2, n3 = n
        ident("movement", _mul(E1, phi(n)), _lin(
            (q ** (n2 - n3), _mul(phi(n), E1)),
            (-q * qn(n2), phi(_shift(n, (0, -1, 1)))),
            (-(q ** (n1 + 2 * n2 + 2 * n3 - 1)) * qn(n1), _mul(phi(_shift(n, (-1, 0, 0))), z1)),
            (q ** (-n1 + 2 * n3 + 1) * qn(n1), _mul(phi(_shift(n, (-1, 0, 0))), z2)),
            (-(q ** (n1 + 2 * n2 + n3 - 2)) * qn(n1) * qn(n3), _mul(phi(_shift(n, (-1, 0, -1))), r3)),
        ))
        ident("movement", _mul(E2, phi(n)), _lin(
            (q ** (n1 - n2), _mul(phi(n), E2)),
            (q ** (n1 - n2 + 1) * qn(n2), phi(_shift(n, (1, -1, 0)))),
            (-(q ** (n1 - n2 + n3 - 1)) * qn(n3), _mul(phi(_shift(n, (0, 0, -1))), z2)),
            (q ** (n1 - n2 - n3 + 1) * qn(n3), _mul(phi(_shift(n, (0, 0, -1))), z3)),
        ))

    zero = (0, 0, 0)
    for k in itertools.product(range(D), repeat=3):
        k1, k2, k3 = k
        w = basis[(zero, k)]
        if not w.exact[0]:
            continue

        def at(dk):
            return basis.get((zero, _shift(k, dk))) if _ok(_shift(k, dk)) else None

        def op_at(expr, dk):
            blk = at(dk)
            return eng.apply(expr, blk) if blk is not None else None

        checks = [
            (E1, [(-z1s1 * q ** (-k1 + k3) * qn(k2), at((0, -1, 0)))]),
            (z1, [(z1s / kap * q**2, w),
                  (z1s1 * kap * q ** (-k1 + k3 + 1) * qn(k2), op_at(x1, (0, -1, 0))),
                  (z1s12 * kap * q ** (k1 + 3) * qn(k3), op_at(E0, (0, 0, -1)))]),
            (z2, [(z2s / kap, w),
                  (z2s2 * kap * q * qn(k1), op_at(x2, (-1, 0, 0))),
                  (-z1s2 * kap * q ** (2 * k1 + k2 - k3 + 4) * qn(k3), op_at(x2, (0, 1, -1)))]),
            (r3, [(z1s1 * kap * q ** (-k1 + k3) * qn(k2), op_at(p3, (0, -1, 0))),
                  (-z1s * q**3, op_at(x2, (0, 0, 0)))]),
            (E2, [(-z2s2 * qn(k1), at((-1, 0, 0))),
                  (z1s2 * q ** (2 * k1 + k2 - k3 + 3) * qn(k3), at((0, 1, -1)))]),
            (z3, [(z3s / kap * q**-2, w)]),
        ]
        for op, rhs in checks:
            summary.record("terminators", _rel_cols(eng.apply(op, w), TrackedBlock.combine(rhs, mod.size)))

    _filtration(mod, summary, basis, (f0, f1, f2), eig)
    _serre(mod, summary, blocks)


def _e1x1_movement(m: int, q, qn, x1, E1, z1, z2, printed: bool = False) -> Expr:
    """Right side of ``e1 x1^m = x1^m e1 + ...`` in terms of ``z1, z2``.

    Summing ``x1^j y1 x1^(m-1-j)`` with ``y1 = z2 - z1`` gives the coefficient
    ``q^(1-m) [m]`` on ``z2`` and ``-q^(m-1) [m]`` on ``z1``. ``printed=True``
    returns the variant with ``z1`` and ``z2`` interchanged, which reduces to
    ``-y1`` at ``m = 1`` and is kept only to document that it fails.
    """
    a, b = (z1, z2) if printed else (z2, z1)
    return _lin(
        (1, _mul(_pow(x1, m), E1)),
        (q ** (-m + 1) * qn(m), _mul(_pow(x1, m - 1), a)),
        (-(q ** (m - 1)) * qn(m), _mul(_pow(x1, m - 1), b)),
    )


def e1x1_interchanged_residual(
    zeta3: SpectralPoint, zeta2: SpectralPoint, zeta1: SpectralPoint, params: Params, cutoff: int = 3
) -> float:
    """Residual of ``e1 x1 = x1 e1 + z1 - z2`` (``z1``, ``z2`` interchanged).

    The consistent form is ``e1 x1 = x1 e1 + z2 - z1``; this variant is
    expected to fail at order one.
    """
    _, _, mod = _six_factor_module(
        zeta3, zeta2, zeta1, params, cutoff,
        extra=lambda space: {"z3": _z3_matrix(space, zeta3, zeta2, zeta1, params)},
    )
    z3 = _gen("z3")
    z1 = _lin((1, mod.y0), (1, z3))
    z2 = _lin((-1, mod.y2), (1, z3))
    summary = CheckSummary()
    lhs = _mul(mod.E[1], mod.x1)
    rhs = _e1x1_movement(1, params.q, params.qnum, mod.x1, mod.E[1], z1, z2, printed=True)
    mod.identity(summary, "interchanged", lhs, rhs, [mod.probe_block()])
    summary.require_coverage()
    return summary.max_residual


def _filtration(mod: _TensorModule, summary: CheckSummary, basis: Mapping, formulas, eig: Callable) -> None:
    """``e_i`` keeps ``span{w^l_n : l <= k}`` (colexicographic) invariant.

    The image of each exact ``w^k_n`` is fitted by least squares against
    every exact basis vector of the same weight with ``l <= k``; the relative
    fit residual is recorded. The action list only decides representability:
    images whose expansion involves a vector outside the tracked range are
    skipped.
    """
    exact = {key: w for key, w in basis.items() if w.exact[0]}
    weight = {key: tuple(eig(i, *key) for i in range(2)) for key in exact}
    roots = ((2, -1), (-1, 2), (-1, -1))
    for key, w in exact.items():
        for g in range(3):
            support = [k2 for c, k2 in formulas[g](*key) if c != 0]
            if any(k2 not in exact for k2 in support):
                continue
            img = mod.engine.apply(mod.E[g], w)
            if not img.exact[0]:
                continue
            target = img.vecs[:, 0]
            nrm = max(float(np.linalg.norm(target)), float(img.scale[0]))
            if nrm == 0:
                summary.record("filtration", 0.0)
                continue
            wt = tuple(a + b for a, b in zip(weight[key], roots[g]))
            cands = [k2 for k2 in exact if weight[k2] == wt and _colex_key(k2[1]) <= _colex_key(key[1])]
            if not cands:
                summary.record("filtration", float(np.linalg.norm(target)) / nrm)
                continue
            sub = np.hstack([exact[k2].vecs for k2 in cands])
            coef, *_ = np.linalg.lstsq(sub, target, rcond=None)
            summary.record("filtration", float(np.linalg.norm(sub @ coef - target)) / nrm)


def _appendix_c_rescaled(summary, tag, zetas, lam, zeta: SpectralPoint, params: Params, D: int, quotient: bool):
    """Checks in the basis built from ``x~1, e~0, x~2``.

    With ``quotient=False`` the rescaled action list is compared directly.
    With ``quotient=True`` each vector is divided by
    ``q^{-(k1+k3) n1 + (k1-k2) n2 + (k2+k3) n3}`` and the parameters are
    specialized; the k-preserving part of the action is then compared with
    the graded Verma module as well.
    """
    zeta3, zeta2, zeta1 = zetas
    q, kap, qn, hbar = params.q, params.kappa, params.qnum, params.hbar
    l1, l2, l3 = (complex(x) for x in lam)
    m1, m2 = l1 - l2, l2 - l3
    s = params.s_total
    s0, s1, s2 = params.s
    zp = zeta.power
    qp = params.qpow

    def extra(space):
        return {
            "H20": space.qN((-1, -1, 1, 0, 0, 1)),
            "H01": space.qN((1, 0, 0, 1, -1, -1)),
            "H12": space.qN((0, 1, -1, -1, 1, 0)),
        }

    _, _, mod = _six_factor_module(zeta3, zeta2, zeta1, params, D, extra)
    E0, E1, E2 = mod.E
    xt1 = _lin((zp(-s0 - s2) * qp(l1 + l2 + 2), _mul(mod.x1, _gen("H20"))))
    xt2 = _lin((zp(-s0 - s1) * qp(l2 + l3 - 2), _mul(mod.x2, _gen("H01"))))
    et0 = _lin((zp(-s0) * qp(l1 + l3), _mul(E0, _gen("H12"))))
    raw = _six_basis(mod, D, (xt1, et0, xt2))

    def norm(n, k):
        if not quotient:
            return 1.0
        n1, n2, n3 = n
        k1, k2, k3 = k
        # the printed rule w -> q^(...) w replaces each old vector by q^(...) times the new one
        return qp((k1 + k3) * n1 - (k1 - k2) * n2 - (k2 + k3) * n3)

    basis = {key: TrackedBlock(w.vecs * norm(*key), w.exact, w.scale * abs(norm(*key))) for key, w in raw.items()}
    z1s, z2s, z3s = zeta1.power(s), zeta2.power(s), zeta3.power(s)
    z1s1, z1s2, z2s2, z1s12 = zeta1.power(s1), zeta1.power(s2), zeta2.power(s2), zeta1.power(s1 + s2)

    def f0(n, k):
        n1, n2, n3 = n
        k1, k2, _ = k
        extra_k = 0 if quotient else -k1 + k2
        return [(zp(s0) * qp(-l1 - l3 - n3 + extra_k), (_shift(n, (0, 1, 0)), k))]

    def f1(n, k):
        n1, n2, n3 = n
        k1, k2, k3 = k
        if quotient:
            return [
                (zp(s1 - s) / kap * qp(l1 + l2) * (q ** (-n1 - n2 + n3 + 1) * z2s - q ** (n1 + n2 - n3 + 1) * z1s)
                 * qn(n1), (_shift(n, (-1, 0, 0)), k)),
                (-zp(s1) * qp(m1 - n2 + n3 + 2) * qn(n2), (_shift(n, (0, -1, 1)), k)),
                (-z1s1 * q ** (2 * n1 + n2 - n3 - k1 + k3) * qn(k2), (n, _shift(k, (0, -1, 0)))),
                (-zp(s1 - s2) * z1s2 * kap * qp(m1 + m2 - 2 * n2 + n3 + 2 * k1 + k2 - k3 + 4) * qn(n1) * qn(k3),
                 (_shift(n, (-1, 0, 1)), _shift(k, (0, 1, -1)))),
                (zp(s1 - s2) * z2s2 * kap * qp(m1 + m2 - 2 * n2 + n3 + 1) * qn(n1) * qn(k1),
                 (_shift(n, (-1, 0, 1)), _shift(k, (-1, 0, 0)))),
                (-zp(-s2) * zeta1.power(s1 + s2) * kap * qp(m2 + 2 * n1 + n2 - n3 + k1 + 1) * qn(n1) * qn(k3),
                 (_shift(n, (-1, 1, 0)), _shift(k, (0, 0, -1)))),
            ]
        return [
            (zp(s1 - s) / kap * qp(l1 + l2 - k1 - k3) * (q ** (-n1 - n2 + n3 + 1) * z2s - q ** (n1 + n2 - n3 + 1) * z1s)
             * qn(n1), (_shift(n, (-1, 0, 0)), k)),
            (-zp(s1) * qp(m1 - n2 + n3 + k1 - 2 * k2 - k3 + 2) * qn(n2), (_shift(n, (0, -1, 1)), k)),
            (-z1s1 * q ** (2 * n1 - k1 + k3) * qn(k2), (n, _shift(k, (0, -1, 0)))),
            (-zp(s1 - s2) * z1s2 * kap * qp(m1 + m2 - n1 - n2 + n3 + k1 - 3 * k3 + 5) * qn(n1) * qn(k3),
             (_shift(n, (-1, 0, 1)), _shift(k, (0, 1, -1)))),
            (zp(s1 - s2) * z2s2 * kap * qp(m1 + m2 - n1 - n2 + n3 - k1 - k2 - 2 * k3 + 2) * qn(n1) * qn(k1),
             (_shift(n, (-1, 0, 1)), _shift(k, (-1, 0, 0)))),
            (-zp(-s2) * z1s12 * kap * qp(m2 + n1 + n2 - k1 + k2 - k3 + 2) * qn(n1) * qn(k3),
             (_shift(n, (-1, 1, 0)), _shift(k, (0, 0, -1)))),
        ]

    def f2(n, k):
        n1, n2, n3 = n
        k1, k2, k3 = k
        if quotient:
            return [
                (zp(s2 - s) / kap * qp(l2 + l3) * (q ** (-n3 - 1) * z3s - q ** (n3 - 1) * z2s) * qn(n3),
                 (_shift(n, (0, 0, -1)), k)),
                (zp(s2) * qp(-m2 + 2 * n3) * qn(n2), (_shift(n, (1, -1, 0)), k)),
                (-z2s2 * q ** (n1 - n2 + 2 * n3) * qn(k1), (n, _shift(k, (-1, 0, 0)))),
                (z1s2 * q ** (n1 - n2 + 2 * n3 + 2 * k1 + k2 - k3 + 3) * qn(k3), (n, _shift(k, (0, 1, -1)))),
            ]
        return [
            (zp(s2 - s) / kap * qp(l2 + l3 + k2 + k3) * (q ** (-n3 - 1) * z3s - q ** (n3 - 1) * z2s) * qn(n3),
             (_shift(n, (0, 0, -1)), k)),
            (zp(s2) * qp(-m2 + 2 * n3 + 2 * k1 - k2 + k3) * qn(n2), (_shift(n, (1, -1, 0)), k)),
            (-z2s2 * q ** (2 * n3) * qn(k1), (n, _shift(k, (-1, 0, 0)))),
            (z1s2 * q ** (2 * n3 + 2 * k1 + k2 - k3 + 3) * qn(k3), (n, _shift(k, (0, 1, -1)))),
        ]

    def eig(i, n, k):
        n1, n2, n3 = n
        k1, k2, k3 = k
        return (
            n1 + 2 * n2 + n3 + k1 + k2 + 2 * k3 + 4,
            -2 * n1 - n2 + n3 + k1 - 2 * k2 - k3 - 2,
            n1 - n2 - 2 * n3 - 2 * k1 + k2 - k3 - 2,
        )[i]

    for g, f in ((0, f0), (1, f1), (2, f2)):
        mod.action_check(summary, f"{tag}_e{g}", basis, g, f)
    if not quotient:
        return
    mod.cartan_check(summary, basis, eig, 0.37 + 0.21j)
    _quotient_against_verma(summary, (f0, f1, f2), basis, lam, zeta, params, D)


def _verma_loop_images(lam, zeta: SpectralPoint, params: Params, M: int) -> list:
    """``e_0, e_1, e_2`` on the graded Verma module through the Jimbo map."""

    def rep(label, nu):
        return verma_action(lam, label, M, params, nu)

    return [evaluate_gl3(jimbo_image(f"e{j}"), rep) * zeta.power(params.s[j]) for j in range(3)]


def _quotient_against_verma(summary, formulas, basis, lam, zeta, params, D) -> None:
    """The k-preserving coefficients match the graded Verma module action.

    For each index pair whose basis vectors are representable, the
    coefficient of ``w^k_m`` in ``e_i w^k_n`` (read off the action list that
    has just been verified numerically) must equal the matrix element
    ``<v_m | e_i v_n>`` of the Verma module of highest weight ``lam``.
    """
    M = D + 1
    images = _verma_loop_images(tuple(complex(x) for x in lam), zeta, params, M)
    index = {n: c for c, n in enumerate(verma_basis(M))}
    for (n, k), w in basis.items():
        if not w.exact[0] or max(n) >= M - 1:
            continue
        col = index[n]
        for g in range(3):
            if not images[g].exact[col]:
                continue
            printed = {}
            for coef, (m, kk) in formulas[g](n, k):
                if kk == k and coef != 0 and _ok(m):
                    printed[m] = printed.get(m, 0) + coef
            vcol = images[g].data[:, col]
            want = np.array([printed.get(m, 0) for m in verma_basis(M)])
            den = max(np.linalg.norm(vcol), np.linalg.norm(want), 1e-300)
            summary.record("quotient", np.linalg.norm(vcol - want) / den)


def appendixC_residual(
    zeta3: SpectralPoint, zeta2: SpectralPoint, zeta1: SpectralPoint, params: Params, cutoff: int = 3
) -> float:
    """Largest relative deviation over every six-oscillator check."""
    return appendixC_checks(zeta3, zeta2, zeta1, params, cutoff).max_residual


# ------------------------------------------------------------ basic representation


def _grid_matrix(shape: tuple, rule: Callable) -> tuple[np.ndarray, np.ndarray]:
    """Matrix on a truncated index grid from ``rule(n) -> [(coef, target)]``.

    Returns the matrix and a per-column flag that is ``False`` when some
    nonzero image falls outside the grid.
    """
    idx = list(itertools.product(*(range(d) for d in shape)))
    pos = {n: c for c, n in enumerate(idx)}
    mat = np.zeros((len(idx), len(idx)), dtype=complex)
    exact = np.ones(len(idx), dtype=bool)
    for c, n in enumerate(idx):
        for coef, target in rule(n):
            if coef == 0:
                continue
            r = pos.get(target)
            if r is None:
                exact[c] = False
            else:
                mat[r, c] += coef
    return mat, exact


def _col_rel(a: np.ndarray, b: np.ndarray, cols: np.ndarray) -> float:
    if not np.any(cols):
        return np.nan
    diff = np.linalg.norm(a[:, cols] - b[:, cols], axis=0)
    den = np.maximum(np.linalg.norm(a[:, cols], axis=0), np.linalg.norm(b[:, cols], axis=0))
    return float(np.max(np.where(den > 0, diff / np.where(den > 0, den, 1), 0)))


def _rho_prime_rules(params: Params):
    q, kap, qn = params.q, params.kappa, params.qnum
    return [
        lambda n: [(q ** (-n[1]), (n[0] + 1, n[1]))],
        lambda n: [(-(q ** (-n[0] + n[1] + 1)) * qn(n[0]), (n[0] - 1, n[1] + 1))],
        lambda n: [(q ** (-n[1]) * qn(n[1]) / kap, (n[0], n[1] - 1))],
    ]


def _rho_pp_rules(params: Params, zt: SpectralPoint | None = None, mu: tuple | None = None):
    """Three-index action; ``mu=None`` gives the limit, else the finite-``mu`` form."""
    q, kap, qn = params.q, params.kappa, params.qnum
    qp = params.qpow
    s0, s1, s2 = params.s
    g = (1, 1, 1) if zt is None else (zt.power(s0), zt.power(s1), zt.power(s2))
    a1 = 0 if mu is None else 1
    m1, m2 = (0, 0) if mu is None else mu

    def e1(n):
        n1, n2, n3 = n
        lead = q ** (-n1 - n2 + n3) - a1 * qp(-2 * m1 + n1 + n2 - n3 - 2)
        return [
            (g[1] * lead / kap * qn(n1), (n1 - 1, n2, n3)),
            (-g[1] * q ** (-n2 + n3 + 1) * qn(n2), (n1, n2 - 1, n3 + 1)),
        ]

    def e2(n):
        n1, n2, n3 = n
        lead = q ** (-n3) - a1 * qp(-2 * m2 + n3 - 2)
        return [
            (g[2] * lead / kap * qn(n3), (n1, n2, n3 - 1)),
            (g[2] * a1 * qp(-2 * m2 + 2 * n3 - 1) * qn(n2), (n1 + 1, n2 - 1, n3)),
        ]

    return [lambda n: [(g[0] * q ** (-n[2]), (n[0], n[1] + 1, n[2]))], e1, e2]


def basic_rep_checks(
    params: Params,
    cutoff: int = 8,
    lam: Sequence[complex] = (0.63 + 0.12j, 0.21 - 0.07j, -0.34 + 0.05j),
    zeta: SpectralPoint | None = None,
) -> CheckSummary:
    """Checks of the basic representation and the limit it comes from.

    Keys of the returned summary:

    ``rho_prime``
        Explicit two-index action against ``(chi+ (x) chi+) o rho`` from
        :func:`uqsl3.lops.rho_osc_image`, on columns whose image stays
        inside the cutoff.
    ``serre``
        Serre relations of those images on exactly tracked states.
    ``shifted_verma``
        The finite-``mu`` action in the rescaled basis
        ``w_n = c1^{n1+n2} c2^{n2+n3} v_n`` against the graded Verma module
        through the Jimbo map.
    ``filtration``
        The limit module preserves ``n1 <= k``, and its layer ``n1 = k``
        carries the two-index action with the relabeling
        ``(n2, n3) -> (n1, n2)``.
    """
    from .lops import rho_osc_image

    zeta = SpectralPoint(0.17 + 0.09j) if zeta is None else zeta
    D = cutoff
    summary = CheckSummary()
    rules = _rho_prime_rules(params)
    for j in range(3):
        osc = rho_osc_image(3, False, f"e{j}", params, reps=(1, 1), cutoff=D).data
        mat, ex = _grid_matrix((D, D), rules[j])
        summary.record("rho_prime", _col_rel(osc, mat, ex))
    # Cartan images are diagonal; compare them entry by entry
    nu = 0.37 + 0.21j
    coeffs = ((2, 1), (-1, 1), (-1, -2))
    occ = np.array(list(itertools.product(range(D), repeat=2)))
    for j in range(3):
        osc = np.diag(rho_osc_image(3, False, f"h{j}", params, nu=nu, reps=(1, 1), cutoff=D).data)
        want = np.exp(params.hbar * nu * (occ @ np.array(coeffs[j])))
        summary.record("rho_prime", float(np.max(np.abs(osc - want) / np.abs(want))))

    space = OscillatorSpace((D, D), (1, 1), params.hbar, sparse=True)
    images = {f"e{j}": sp.csr_matrix(rho_osc_image(3, False, f"e{j}", params, reps=(1, 1), cutoff=D).data)
              for j in range(3)}
    rep = BorelRep(space, tuple(images[f"e{j}"] for j in range(3)), np.array(coeffs, dtype=float))
    mod = _TensorModule(rep, params)
    _serre(mod, summary, [mod.probe_block()])

    # finite-mu action against the Verma route
    l1, l2, l3 = (complex(x) for x in lam)
    mu = (l1 - l2, l2 - l3)
    s = params.s_total
    zt = SpectralPoint(zeta.w - 2 * params.hbar * (l3 - 1) / s)
    M = 5
    verma = _verma_loop_images((l1, l2, l3), zeta, params, M)
    c1 = params.qpow(-mu[0] - 1 - 2 * (l3 - 1) * params.s[1] / s)
    c2 = params.qpow(-mu[1] - 1 - 2 * (l3 - 1) * params.s[2] / s)
    basis = verma_basis(M)
    cvec = np.array([c1 ** (n1 + n2) * c2 ** (n2 + n3) for n1, n2, n3 in basis])
    finite = _rho_pp_rules(params, zt, mu)
    for j in range(3):
        V = verma[j]
        in_w = V.data * cvec[None, :] / cvec[:, None]
        mat, ex = _grid_matrix((M, M, M), finite[j])
        summary.record("shifted_verma", _col_rel(in_w, mat, ex & V.exact))

    # filtration of the limit module and its layers
    limit = _rho_pp_rules(params)
    Dl = 6
    idx = list(itertools.product(range(Dl), repeat=3))
    for j in range(3):
        mat, ex = _grid_matrix((Dl,) * 3, limit[j])
        prime, pex = _grid_matrix((Dl, Dl), rules[j])
        leak = 0.0
        for c, n in enumerate(idx):
            if not ex[c]:
                continue
            col = mat[:, c]
            rows_up = [r for r, m in enumerate(idx) if m[0] > n[0]]
            leak = max(leak, float(np.linalg.norm(col[rows_up])) / max(np.linalg.norm(col), 1e-300))
            pc = n[1] * Dl + n[2]
            if not pex[pc]:
                continue
            layer = np.array([col[r] for r, m in enumerate(idx) if m[0] == n[0]])
            ref = prime[:, pc]
            den = max(np.linalg.norm(layer), np.linalg.norm(ref), 1e-300)
            summary.record("filtration", np.linalg.norm(layer - ref) / den)
        summary.record("filtration", leak)
    summary.require_coverage()
    return summary


def basic_rep_residual(params: Params, cutoff: int = 8) -> float:
    """Largest relative deviation over :func:`basic_rep_checks`."""
    return basic_rep_checks(params, cutoff).max_residual


def basic_limit_deviation(params: Params, M: int, cutoff: int = 6) -> float:
    """Gap between the finite-``mu`` action at ``mu1 = mu2 = M`` and its limit.

    The largest entry difference relative to the largest limit entry, over
    a ``cutoff**3`` index grid. The finite action differs from the limit by
    terms carrying ``q^{-2 mu}``, so the gap decays like ``|q|^{-2M}`` when
    ``|q| > 1`` and grows like it when ``|q| < 1``.
    """
    shape = (cutoff,) * 3
    worst, ref = 0.0, 0.0
    finite = _rho_pp_rules(params, None, (M, M))
    limit = _rho_pp_rules(params)
    for j in range(3):
        a, _ = _grid_matrix(shape, finite[j])
        b, _ = _grid_matrix(shape, limit[j])
        worst = max(worst, float(np.max(np.abs(a - b))))
        ref = max(ref, float(np.max(np.abs(b))))
    return worst / ref


def basic_limit_ratio(params: Params, M1: int = 6, M2: int = 8, cutoff: int = 6) -> float:
    """``deviation(M2) / deviation(M1)``; ideally ``|q|^{-2 (M2 - M1)}``."""
    return basic_limit_deviation(params, M2, cutoff) / basic_limit_deviation(params, M1, cutoff)


# -------------------------------------------------------------- oscillator algebra


def oscillator_identity_residual(params: Params, cutoff: int = 10, kmax: int = 4) -> float:
    """Commutation identities of ``b`` with powers of ``b†`` (and vice versa).

    ``b (b†)^k = q^k (b†)^k b + [k] (b†)^{k-1} q^{-N}`` and
    ``b† b^k = q^{-k} b^k b† - q^{-1} [k] b^{k-1} q^{-N}``, checked in both
    Fock representations on states far enough from the cutoff.
    """
    q, qn = params.q, params.qnum
    worst = 0.0
    for ops in (chi_plus_ops, chi_minus_ops):
        b, bd, qmN = (o.data for o in ops(cutoff, -1.0, params.hbar))
        for k in range(1, kmax + 1):
            bdk = np.linalg.matrix_power(bd, k)
            bk = np.linalg.matrix_power(b, k)
            cases = (
                (b @ bdk, [q**k * bdk @ b, qn(k) * np.linalg.matrix_power(bd, k - 1) @ qmN]),
                (bd @ bk, [q**-k * bk @ bd, -qn(k) / q * np.linalg.matrix_power(b, k - 1) @ qmN]),
            )
            safe = slice(0, cutoff - k - 2)
            for lhs, terms in cases:
                diff = np.linalg.norm((lhs - sum(terms))[:, safe])
                den = max(np.linalg.norm(m[:, safe]) for m in [lhs, *terms])
                worst = max(worst, diff / den)
    return float(worst)
