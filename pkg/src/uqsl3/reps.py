"""Representations of Uq(gl3) and Uq(L(sl3)) used by the chain.

Contents: weights, the two three-dimensional representations, truncated
Verma modules in the basis ``v_n = F1^{n1} F3^{n2} F2^{n3} v_0``, the Jimbo
homomorphism into Uq(gl3), the automorphisms ``sigma`` and ``tau`` on loop
generator labels, the conjugation matrices ``O`` and ``P``, dual
representations, and the Weyl-group character identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import ConvergenceError, Params, SpectralPoint
from .lops import o_matrix, p_matrix

__all__ = [
    "Weight",
    "VermaOp",
    "GL3_LABELS",
    "LOOP_LABELS",
    "pi_fund",
    "verma_action",
    "verma_basis",
    "jimbo_image",
    "evaluate_gl3",
    "map_label",
    "loop_image",
    "conj_matrices",
    "antipode_inverse",
    "dual_rep",
    "fundamental_images",
    "oeqd_residual",
    "intertwiner",
    "mvdp_residual",
    "weyl_affine_orbit",
    "perm_sign",
    "finite_character",
    "verma_character",
    "verma_character_truncated",
    "bgg_character_residual",
]

RHO = (1, 0, -1)
NEG_ROOTS = ((-1, 1, 0), (-1, 0, 1), (0, -1, 1))
GL3_LABELS = ("qG1", "qG2", "qG3", "E1", "E2", "E3", "F1", "F2", "F3")
LOOP_LABELS = ("e0", "e1", "e2", "f0", "f1", "f2", "qh0", "qh1", "qh2")


@dataclass(frozen=True)
class Weight:
    """A gl3 weight ``(lambda_1, lambda_2, lambda_3)``."""

    lam: tuple

    def __post_init__(self) -> None:
        if len(self.lam) != 3:
            raise ValueError("a weight has three components")
        object.__setattr__(self, "lam", tuple(self.lam))

    @property
    def mu(self) -> tuple:
        """``(lambda_1 - lambda_2, lambda_2 - lambda_3)``."""
        l1, l2, l3 = self.lam
        return (l1 - l2, l2 - l3)

    def plus_rho(self) -> tuple:
        return tuple(self.lam[j] + RHO[j] for j in range(3))

    def is_dominant_integral(self) -> bool:
        return all(complex(m).imag == 0 and complex(m).real >= 0 and complex(m).real.is_integer() for m in self.mu)


def _unit(a: int, b: int, dim: int = 3) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[a, b] = 1.0
    return out


def _split_label(label: str) -> tuple:
    if label in GL3_LABELS:
        return label[:-1], int(label[-1])
    raise ValueError(f"unknown gl3 generator label {label!r}")


def pi_fund(weight_id: Sequence[int], generator: str, params: Params, nu: complex = 1.0) -> np.ndarray:
    """Three-dimensional images for highest weights ``(1,0,0)`` and ``(1,1,0)``.

    ``generator`` is one of ``qG1, qG2, qG3`` (with exponent ``nu``) or
    ``E1, E2, E3, F1, F2, F3``.
    """
    kind, j = _split_label(generator)
    wid = tuple(int(x) for x in weight_id)
    q = params.q
    if wid == (1, 0, 0):
        if kind == "qG":
            d = np.ones(3, dtype=complex)
            d[j - 1] = params.qpow(nu)
            return np.diag(d)
        table = {
            "E1": _unit(0, 1), "E2": _unit(1, 2), "E3": _unit(0, 2),
            "F1": _unit(1, 0), "F2": _unit(2, 1), "F3": _unit(2, 0),
        }
        return table[generator]
    if wid == (1, 1, 0):
        if kind == "qG":
            # weights of the basis vectors: (1,1,0), (1,0,1), (0,1,1)
            occ = {1: (1, 1, 0), 2: (1, 0, 1), 3: (0, 1, 1)}[j]
            return np.diag([params.qpow(nu * o) for o in occ])
        table = {
            "E1": _unit(1, 2), "E2": _unit(0, 1), "E3": -_unit(0, 2) / q,
            "F1": _unit(2, 1), "F2": _unit(1, 0), "F3": -q * _unit(2, 0),
        }
        return table[generator]
    raise ValueError("weight_id must be (1,0,0) or (1,1,0)")


# --------------------------------------------------------------------- Verma


@dataclass(frozen=True, eq=False)
class VermaOp:
    """A generator image on the truncated Verma basis.

    Attributes
    ----------
    cutoff : int
        Each ``n_i`` ranges over ``0..cutoff-1``; basis order is lexicographic.
    data : ndarray
        Dense matrix; column ``c`` is the image of basis vector ``c``.
    exact : ndarray of bool
        ``exact[c]`` is ``False`` when the true image of basis vector ``c``
        has a component outside the truncated box.
    """

    cutoff: int
    data: np.ndarray
    exact: np.ndarray

    def __matmul__(self, other: "VermaOp") -> "VermaOp":
        support = np.abs(other.data) > 0
        ok = other.exact & ~np.any(support & ~self.exact[:, None], axis=0)
        return VermaOp(self.cutoff, self.data @ other.data, ok)

    def __add__(self, other: "VermaOp") -> "VermaOp":
        return VermaOp(self.cutoff, self.data + other.data, self.exact & other.exact)

    def __sub__(self, other: "VermaOp") -> "VermaOp":
        return VermaOp(self.cutoff, self.data - other.data, self.exact & other.exact)

    def __mul__(self, c: complex) -> "VermaOp":
        return VermaOp(self.cutoff, self.data * c, self.exact)

    __rmul__ = __mul__

    def masked_norm(self) -> float:
        """Frobenius norm over exact columns only."""
        return float(np.linalg.norm(self.data[:, self.exact]))


def verma_basis(M: int) -> list:
    """Index triples ``(n1, n2, n3)`` in lexicographic order."""
    return list(itertools.product(range(M), repeat=3))


def verma_action(
    weight: Weight | Sequence[complex], generator: str, M: int, params: Params, nu: complex = 1.0
) -> VermaOp:
    """Matrix of a Uq(gl3) generator on the truncated Verma module.

    Parameters
    ----------
    weight : Weight or triple
        Highest weight ``lambda``.
    generator : str
        One of ``qG1, qG2, qG3, E1, E2, E3, F1, F2, F3``.
    M : int
        Per-index cutoff.
    params : Params
    nu : complex
        Exponent for the ``qG`` generators.
    """
    if M < 1:
        raise ValueError("M must be positive")
    lam = weight.lam if isinstance(weight, Weight) else tuple(weight)
    l1, l2, l3 = lam
    m1, m2 = l1 - l2, l2 - l3
    qn = params.qnum
    qp = params.qpow
    basis = verma_basis(M)
    index = {n: k for k, n in enumerate(basis)}
    dim = len(basis)
    data = np.zeros((dim, dim), dtype=complex)
    exact = np.ones(dim, dtype=bool)

    def put(col, target, coef):
        if coef == 0:
            return
        row = index.get(target)
        if row is None:
            exact[col] = False
        else:
            data[row, col] += coef

    for c, (n1, n2, n3) in enumerate(basis):
        if generator == "qG1":
            put(c, (n1, n2, n3), qp(nu * (l1 - n1 - n2)))
        elif generator == "qG2":
            put(c, (n1, n2, n3), qp(nu * (l2 + n1 - n3)))
        elif generator == "qG3":
            put(c, (n1, n2, n3), qp(nu * (l3 + n2 + n3)))
        elif generator == "F1":
            put(c, (n1 + 1, n2, n3), 1.0)
        elif generator == "F2":
            put(c, (n1, n2, n3 + 1), qp(n1 - n2))
            put(c, (n1 - 1, n2 + 1, n3), qn(n1))
        elif generator == "F3":
            put(c, (n1, n2 + 1, n3), qp(-n1))
        elif generator == "E1":
            put(c, (n1 - 1, n2, n3), qn(m1 - n1 - n2 + n3 + 1) * qn(n1))
            put(c, (n1, n2 - 1, n3 + 1), -qp(m1 - n2 + n3 + 2) * qn(n2))
        elif generator == "E2":
            put(c, (n1, n2, n3 - 1), qn(m2 - n3 + 1) * qn(n3))
            put(c, (n1 + 1, n2 - 1, n3), qp(-m2 + 2 * n3) * qn(n2))
        elif generator == "E3":
            put(c, (n1, n2 - 1, n3), qp(n1) * qn(m1 + m2 - n1 - n2 - n3 + 1) * qn(n2))
            put(
                c,
                (n1 - 1, n2, n3 - 1),
                -qp(-m1 + n1 + n2 - n3 - 1) * qn(m2 - n3 + 1) * qn(n1) * qn(n3),
            )
        else:
            raise ValueError(f"unknown gl3 generator label {generator!r}")
    return VermaOp(M, data, exact)


# -------------------------------------------------------------- Jimbo map


def jimbo_image(generator: str, nu: complex = 1.0) -> tuple:
    """Image of a loop generator under the Jimbo homomorphism.

    Returns a product of factors, each either a gl3 label such as ``"E1"``
    or a pair ``("qG", (a1, a2, a3))`` for ``q^{a1 G1 + a2 G2 + a3 G3}``.
    Cartan labels ``qh0, qh1, qh2`` use the exponent ``nu``.
    """
    table = {
        "e0": ("F3", ("qG", (-1, 0, -1))),
        "e1": ("E1",),
        "e2": ("E2",),
        "f0": ("E3", ("qG", (1, 0, 1))),
        "f1": ("F1",),
        "f2": ("F2",),
        "qh0": (("qG", (-nu, 0, nu)),),
        "qh1": (("qG", (nu, -nu, 0)),),
        "qh2": (("qG", (0, nu, -nu)),),
    }
    if generator not in table:
        raise ValueError(f"unknown loop generator label {generator!r}")
    return table[generator]


def evaluate_gl3(expr: Sequence, rep: Callable[[str, complex], np.ndarray]) -> np.ndarray:
    """Evaluate a product of gl3 factors through ``rep(label, nu)``."""
    mats = []
    for factor in expr:
        if isinstance(factor, str):
            mats.append(rep(factor, 1.0))
        else:
            _, coeffs = factor
            for j, a in enumerate(coeffs):
                if a != 0:
                    mats.append(rep(f"qG{j + 1}", a))
    if not mats:
        raise ValueError("empty expression")
    return reduce(lambda a, b: a @ b, mats)


def map_label(label: str, sigma_power: int = 0, tau: bool = False) -> str:
    """Label of ``tau^{[tau]} (sigma^{k} (a))`` for a loop generator label ``a``.

    ``sigma`` sends index ``j`` to ``j + 1`` and ``tau`` fixes ``0`` and
    swaps ``1`` and ``2``.
    """
    if label not in LOOP_LABELS:
        raise ValueError(f"unknown loop generator label {label!r}")
    head, j = label[:-1], int(label[-1])
    j = (j + sigma_power) % 3
    if tau:
        j = (-j) % 3
    return f"{head}{j}"


def loop_image(
    label: str,
    weight_id: Sequence[int],
    params: Params,
    nu: complex = 1.0,
    sigma_power: int = 0,
    tau: bool = False,
    zeta: SpectralPoint | None = None,
) -> np.ndarray:
    """``(phi o tau o sigma^k)_zeta(a)`` with ``phi`` the Jimbo map into ``pi_fund``.

    The gradation acts first: ``e_j -> zeta^{s_j} e_j`` and
    ``f_j -> zeta^{-s_j} f_j`` with the index of the original label.
    """
    target = map_label(label, sigma_power, tau)
    mat = evaluate_gl3(jimbo_image(target, nu), lambda g, x: pi_fund(weight_id, g, params, x))
    if zeta is not None and label[0] in "ef":
        sj = params.s[int(label[-1])]
        mat = mat * zeta.power(sj if label[0] == "e" else -sj)
    return mat


def conj_matrices(params: Params) -> tuple[np.ndarray, np.ndarray]:
    """The matrices ``O`` (realizing ``sigma``) and ``P`` (skew-diagonal)."""
    return o_matrix(params), p_matrix(params)


# ---------------------------------------------------------------------- duals


def antipode_inverse(label: str) -> tuple:
    """``S^{-1}`` of a loop generator as ``(coefficient, factors)``.

    ``S^{-1}(e_i) = -e_i q^{h_i}``, ``S^{-1}(f_i) = -q^{-h_i} f_i``,
    ``S^{-1}(q^{h_i}) = q^{-h_i}``; factors are labels with ``"qh_i"``
    meaning ``q^{h_i}`` and ``"qh_i^-1"`` its inverse.
    """
    head, j = label[:-1], int(label[-1])
    if head == "e":
        return -1.0, (f"e{j}", f"qh{j}")
    if head == "f":
        return -1.0, (f"qh{j}^-1", f"f{j}")
    if head == "qh":
        return 1.0, (f"qh{j}^-1",)
    raise ValueError(f"unknown loop generator label {label!r}")


def dual_rep(images: Mapping[str, np.ndarray]) -> dict:
    """Images of the dual representation ``psi^{*S^{-1}}(a) = (psi(S^{-1}(a)))^t``.

    Parameters
    ----------
    images : mapping
        ``label -> matrix`` for the loop labels present; ``qh_j`` is the image
        of ``q^{h_j}``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If a Cartan image is singular.
    """

    def get(f):
        if f.endswith("^-1"):
            return np.linalg.inv(images[f[:-3]])
        return images[f]

    out = {}
    for label in images:
        coef, factors = antipode_inverse(label)
        mat = reduce(lambda a, b: a @ b, [get(f) for f in factors])
        out[label] = coef * mat.T
    return out


def fundamental_images(params: Params, zeta: SpectralPoint | None = None, tau: bool = False) -> dict:
    """All nine loop labels under ``phi^(1,0,0)`` (optionally precomposed with ``tau``), at ``nu = 1``."""
    return {lab: loop_image(lab, (1, 0, 0), params, tau=tau, zeta=zeta) for lab in LOOP_LABELS}


def oeqd_residual(params: Params, zeta: SpectralPoint) -> float:
    """Largest relative deviation in ``phibar'_zeta(a) = P phi^{*S^{-1}}_{xi}(a) P^{-1}``, ``xi = r_s^3 q^{3/s} zeta``."""
    xi = SpectralPoint(zeta.w + 3j * np.pi / params.s_total + 3 * params.hbar / params.s_total)
    lhs = fundamental_images(params, zeta=zeta, tau=True)
    dual = dual_rep(fundamental_images(params, zeta=xi))
    _, P = conj_matrices(params)
    Pinv = np.linalg.inv(P)
    worst = 0.0
    for lab in LOOP_LABELS:
        rhs = P @ dual[lab] @ Pinv
        worst = max(worst, float(np.abs(lhs[lab] - rhs).max() / np.abs(lhs[lab]).max()))
    return worst


def _coproduct(a: str, left: Mapping, right: Mapping, opposite: bool = False) -> np.ndarray:
    """``Delta(a)`` (or its opposite) on ``left (x) right`` from single-factor images."""
    head, j = a[:-1], int(a[-1])
    I3l = np.eye(left[a].shape[0])
    I3r = np.eye(right[a].shape[0])
    qh = f"qh{j}"
    if head == "qh":
        return np.kron(left[a], right[a])
    if not opposite:
        if head == "e":
            return np.kron(left[a], I3r) + np.kron(np.linalg.inv(left[qh]), right[a])
        return np.kron(left[a], right[qh]) + np.kron(I3l, right[a])
    # flip of the tensor factors
    if head == "e":
        return np.kron(I3l, right[a]) + np.kron(left[a], np.linalg.inv(right[qh]))
    return np.kron(left[qh], right[a]) + np.kron(left[a], I3r)


def intertwiner(left: Mapping, right: Mapping, labels: Sequence[str] = LOOP_LABELS) -> tuple[np.ndarray, float]:
    """Solve ``M Delta(a) = Delta^op(a) M`` for all ``a`` by a null-space computation.

    Returns the normalized solution and the ratio of the two smallest
    singular values (small means the solution is unique up to scale).
    """
    d = left["qh0"].shape[0] * right["qh0"].shape[0]
    eye = np.eye(d)
    blocks = []
    for a in labels:
        D = _coproduct(a, left, right)
        Dop = _coproduct(a, left, right, opposite=True)
        # vec(M D - Dop M) = (D^T (x) I - I (x) Dop) vec(M), column-major vec
        blocks.append(np.kron(D.T, eye) - np.kron(eye, Dop))
    A = np.vstack(blocks)
    _, sv, vh = np.linalg.svd(A)
    M = vh[-1].conj().reshape(d, d, order="F")
    gap = float(sv[-1] / sv[-2]) if sv[-2] > 0 else 0.0
    return M / np.abs(M).max(), gap


def _intertwining_defect(M: np.ndarray, left: Mapping, right: Mapping) -> float:
    worst = 0.0
    for a in LOOP_LABELS:
        D = _coproduct(a, left, right)
        Dop = _coproduct(a, left, right, opposite=True)
        worst = max(worst, float(np.linalg.norm(M @ D - Dop @ M) / (np.linalg.norm(M) * np.linalg.norm(D))))
    return worst


def _partial_transpose_right(M: np.ndarray, dl: int, dr: int) -> np.ndarray:
    T = M.reshape(dl, dr, dl, dr)
    return T.transpose(0, 3, 2, 1).reshape(dl * dr, dl * dr)


def mvdp_residual(params: Params, zeta1: SpectralPoint, zeta2: SpectralPoint) -> float:
    """Check that inverting and transposing in the second factor dualizes it.

    ``M`` intertwines ``phi_{zeta1} (x) phi_{zeta2}``; the residual is the
    intertwining defect of ``((M)^{-1})^{t_2}`` for
    ``phi_{zeta1} (x) phi^{*S^{-1}}_{zeta2}``.
    """
    left = fundamental_images(params, zeta=zeta1)
    right = fundamental_images(params, zeta=zeta2)
    M, _ = intertwiner(left, right)
    Md = _partial_transpose_right(np.linalg.inv(M), 3, 3)
    return _intertwining_defect(Md, left, dual_rep(right))


# -------------------------------------------------------------- Weyl and BGG


def perm_sign(p: Sequence[int]) -> int:
    """Sign of a permutation of ``0..k-1``."""
    p = list(p)
    sign = 1
    for a in range(len(p)):
        for b in range(a + 1, len(p)):
            if p[a] > p[b]:
                sign = -sign
    return sign


def weyl_affine_orbit(weight: Weight | Sequence[complex]) -> list:
    """``(sgn(p), p(lambda + rho) - rho)`` for all ``p`` in ``S3``, identity first."""
    lam = weight.lam if isinstance(weight, Weight) else tuple(weight)
    lr = [lam[j] + RHO[j] for j in range(3)]
    out = []
    for p in itertools.permutations(range(3)):
        mu = tuple(lr[p[j]] - RHO[j] for j in range(3))
        out.append((perm_sign(p), Weight(mu)))
    return out


def _ssyt_weights(shape: Sequence[int]) -> list:
    """Content vectors of all semistandard tableaux with entries 1..3."""
    shape = [r for r in shape if r > 0]
    cells = [(r, c) for r, length in enumerate(shape) for c in range(length)]
    out = []

    def fill(k, tab):
        if k == len(cells):
            out.append(tuple(sum(1 for v in tab.values() if v == x) for x in (1, 2, 3)))
            return
        r, c = cells[k]
        lo = 1
        if c > 0:
            lo = max(lo, tab[(r, c - 1)])
        if r > 0:
            lo = max(lo, tab[(r - 1, c)] + 1)
        for v in range(lo, 4):
            tab[(r, c)] = v
            fill(k + 1, tab)
            del tab[(r, c)]

    fill(0, {})
    return out


def finite_character(weight: Weight | Sequence[int], nu: Sequence[complex], params: Params) -> complex:
    """Trace of ``q^{nu_1 G_1 + nu_2 G_2 + nu_3 G_3}`` on the finite-dimensional module.

    Weights are enumerated from semistandard tableaux (shifted by
    ``lambda_3`` so the shape is a partition).
    """
    lam = weight.lam if isinstance(weight, Weight) else tuple(weight)
    l3 = int(np.real(lam[2]))
    shape = [int(np.real(lam[0])) - l3, int(np.real(lam[1])) - l3, 0]
    if shape[0] < shape[1] or shape[1] < 0:
        raise ValueError("weight is not dominant integral")
    total = 0j
    for w in _ssyt_weights(shape):
        expo = sum(nu[j] * (w[j] + l3) for j in range(3))
        total += params.qpow(expo)
    return total


def _check_admissible(nu: Sequence[complex], params: Params) -> None:
    for b in NEG_ROOTS:
        if abs(params.qpow(sum(nu[j] * b[j] for j in range(3)))) >= 1:
            raise ConvergenceError(f"Verma character diverges: |q^(nu.beta)| >= 1 for beta = {b}")


def verma_character(weight: Weight | Sequence[complex], nu: Sequence[complex], params: Params) -> complex:
    """Closed form ``q^{nu . mu} / prod_beta (1 - q^{nu . beta})`` over negative roots ``beta``."""
    _check_admissible(nu, params)
    mu = weight.lam if isinstance(weight, Weight) else tuple(weight)
    num = params.qpow(sum(nu[j] * mu[j] for j in range(3)))
    den = 1.0
    for b in NEG_ROOTS:
        den *= 1.0 - params.qpow(sum(nu[j] * b[j] for j in range(3)))
    return num / den


def verma_character_truncated(weight, nu: Sequence[complex], params: Params, M: int) -> complex:
    """Sum of the ``q^{nu . G}`` eigenvalues over the truncated Verma basis (a summation cross-check)."""
    lam = weight.lam if isinstance(weight, Weight) else tuple(weight)
    n1, n2, n3 = np.meshgrid(*(np.arange(M),) * 3, indexing="ij")
    expo = nu[0] * (lam[0] - n1 - n2) + nu[1] * (lam[1] + n1 - n3) + nu[2] * (lam[2] + n2 + n3)
    return complex(np.exp(params.hbar * expo).sum())


def bgg_character_residual(weight: Weight | Sequence[int], nu: Sequence[complex], params: Params) -> complex:
    """``chi_fin(nu) - sum_p sgn(p) chi_Verma^{p(lambda+rho)-rho}(nu)``."""
    _check_admissible(nu, params)
    total = finite_character(weight, nu, params)
    for sign, mu in weyl_affine_orbit(weight):
        total -= sign * verma_character(mu, nu, params)
    return total
