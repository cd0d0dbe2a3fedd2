"""Oscillator L-operators of the sl3 spin chain.

Every operator here lives on a two-oscillator Fock space. The oscillators
may carry the ``chi+`` or the ``chi-`` representation independently
(``reps``); the L-operator is the same algebra element in either case.

Generator labels used throughout: ``"e0" "e1" "e2"`` for the Borel raising
generators and ``"h0" "h1" "h2"`` for ``q^{nu h_i}`` (with ``nu`` passed
separately).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Params, SpectralPoint, exp_f3
from .fock import OscOp, OscillatorSpace

__all__ = [
    "OpMatrix",
    "loop_label",
    "rho_osc_image",
    "build_L",
    "o_matrix",
    "p_matrix",
    "zeta_D_matrix",
    "twist_exponents",
    "twist_exponents_from_rho",
    "twist_osc_image",
    "dual_L_residual",
    "intertwining_residual",
    "fundamental_loop_image",
]

# affine Cartan matrix of sl3: alpha_j(h_i)
CARTAN = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])

# rho(q^{nu h_i}) = q^{nu (a N1 + b N2)}
_RHO_H = {0: (2, 1), 1: (-1, 1), 2: (-1, -2)}


def loop_label(i: int, barred: bool, j: int) -> int:
    """Index ``m`` such that ``rho_i(x_j) = rho(x_m)`` for ``x = e, h``.

    ``rho_i = rho o sigma^{-i}`` and ``rhobar_i = rho o tau o sigma^{-i+1}``,
    with ``sigma: x_j -> x_{j+1}`` and ``tau`` swapping labels 1 and 2.
    """
    if not barred:
        return (j - i) % 3
    return (-(j - i + 1)) % 3


def _space(params: Params, reps=(1, 1), cutoff: int | None = None, sparse: bool = False):
    D = params.cutoff if cutoff is None else int(cutoff)
    return OscillatorSpace((D, D), reps, params.hbar, sparse=sparse)


def _rho_base(m: int, kind: str, space: OscillatorSpace, nu: complex = 1.0):
    """Image of ``e_m`` or ``q^{nu h_m}`` under ``rho`` on ``space``."""
    if kind == "h":
        a, b = _RHO_H[m]
        return space.qN((nu * a, nu * b))
    kappa = cmath.exp(space.hbar) - cmath.exp(-space.hbar)
    if m == 0:
        return space.bdag(0) @ space.qN((0, -1))
    if m == 1:
        return -(space.b(0) @ space.bdag(1) @ space.qN((-1, 1), 1))
    return (space.b(1) @ space.qN((0, -1))) / kappa


def _parse(generator: str):
    if len(generator) != 2 or generator[0] not in "eh" or generator[1] not in "012":
        raise ValueError(f"unknown Borel generator label {generator!r}")
    return generator[0], int(generator[1])


def rho_osc_image(
    i: int,
    barred: bool,
    generator: str,
    params: Params,
    nu: complex = 1.0,
    reps: Sequence[int] = (1, 1),
    cutoff: int | None = None,
) -> OscOp:
    """Truncated image of a Borel generator under ``rho_i`` or ``rhobar_i``.

    Parameters
    ----------
    i : {1, 2, 3}
    barred : bool
    generator : str
        One of ``e0 e1 e2 h0 h1 h2``; ``hK`` means ``q^{nu hK}``.
    params : Params
    nu : complex
        Exponent for ``q^{nu h}`` labels.
    reps : pair of {+1, -1}
        Fock representation of each oscillator.
    """
    kind, j = _parse(generator)
    space = _space(params, reps, cutoff)
    m = loop_label(i, barred, j)
    return OscOp(space.dims, _rho_base(m, kind, space, nu))


@dataclass(frozen=True, eq=False)
class OpMatrix:
    """A 3x3 matrix of oscillator operators with a separate scalar factor.

    Attributes
    ----------
    entries : ndarray, shape (3, 3, N, N)
        Operator core; ``entries[a, b]`` is the ``(a, b)`` matrix element.
    dims : tuple of int
        Fock cutoffs of the two oscillators.
    prefactor : complex
        Scalar normalization multiplying the core.
    reps : tuple of int
        Fock representation of each oscillator.
    """

    entries: np.ndarray
    dims: tuple
    prefactor: complex = 1.0
    reps: tuple = (1, 1)

    def __post_init__(self) -> None:
        N = int(np.prod(self.dims))
        if self.entries.shape != (3, 3, N, N):
            raise ValueError(f"entries must have shape (3, 3, {N}, {N})")
        if not np.isfinite(self.prefactor) or self.prefactor == 0:
            raise ValueError("prefactor must be finite and nonzero")

    def entry(self, a: int, b: int) -> OscOp:
        return OscOp(self.dims, self.entries[a, b])

    def full(self) -> np.ndarray:
        """Entries with the prefactor applied."""
        return self.entries * self.prefactor

    def as_block(self) -> np.ndarray:
        """The ``3N x 3N`` matrix with auxiliary index outermost."""
        N = self.entries.shape[-1]
        return self.full().transpose(0, 2, 1, 3).reshape(3 * N, 3 * N)


def o_matrix(params: Params) -> np.ndarray:
    """The cyclic conjugation matrix ``O``."""
    q = params.q
    return np.array([[0, 0, q], [1, 0, 0], [0, 1, 0]], dtype=complex)


def p_matrix(params: Params, s: Sequence[int] | None = None) -> np.ndarray:
    """The skew-diagonal matrix ``P`` for the gradation ``s``."""
    s0, s1, s2 = params.s if s is None else s
    tot = s0 + s1 + s2
    r = params.r_s
    return np.array(
        [
            [0, 0, r ** (-3 * s2) * params.qpow(1 - 3 * s2 / tot)],
            [0, -1, 0],
            [r ** (3 * s1) * params.qpow(-1 + 3 * s1 / tot), 0, 0],
        ],
        dtype=complex,
    )


def _cycled_s(s: Sequence[int], i: int) -> tuple:
    """Gradation after ``i - 1`` applications of ``s -> sigma(s)``."""
    return tuple(s[(k + i - 1) % 3] for k in range(3))


def _core_first(w: complex, s: Sequence[int], space: OscillatorSpace, barred: bool, q: complex, kappa: complex):
    """The printed ``i = 1`` operator core, without its scalar prefactor."""
    s0, s1, s2 = s
    tot = s0 + s1 + s2
    z = lambda p: cmath.exp(p * w)  # noqa: E731
    b1, bd1, b2, bd2 = space.b(0), space.bdag(0), space.b(1), space.bdag(1)
    qN = space.qN
    N = space.size
    L = np.zeros((3, 3, N, N), dtype=complex)
    if not barred:
        L[0, 0] = qN((1, 1)) - z(tot) * qN((-1, -1), -2)
        L[0, 1] = z(tot - s1) * (b1 @ qN((-2, -1)))
        L[0, 2] = z(tot - s1 - s2) * (b2 @ qN((0, -2), 1))
        L[1, 0] = z(s1) * kappa * (bd1 @ qN((1, 0)))
        L[1, 1] = qN((-1, 0))
        L[2, 0] = z(s1 + s2) * kappa * (bd2 @ qN((-1, 1), -1))
        L[2, 1] = -z(s2) * kappa * (b1 @ bd2 @ qN((-2, 1), 1))
        L[2, 2] = qN((0, -1))
    else:
        L[0, 0] = qN((-1, -1))
        L[0, 1] = -z(tot - s1) * kappa * (bd2 @ qN((0, 1), 1))
        L[0, 2] = z(tot - s1 - s2) * kappa * (bd1 @ qN((1, -1), 1))
        L[1, 0] = z(s1) * (b2 @ qN((-1, -2)))
        L[1, 1] = qN((0, 1)) + z(tot) * qN((0, -1), -1)
        L[1, 2] = z(tot - s2) * kappa * (bd1 @ b2 @ qN((1, -2), 1))
        L[2, 0] = -z(s1 + s2) * (b1 @ qN((-2, 0)))
        L[2, 1] = -z(s2) * kappa * (b1 @ bd2 @ qN((-1, 2), 1))
        L[2, 2] = qN((1, 0)) + z(tot) * qN((-1, 0), -1)
    return L


def _prefactor(w: complex, tot: int, params: Params, barred: bool) -> complex:
    x = cmath.exp(tot * w)
    if not barred:
        return exp_f3(x, params)
    return exp_f3(-params.q * x, params) * exp_f3(-x / params.q, params)


def build_L(
    i: int,
    barred: bool,
    zeta: SpectralPoint,
    params: Params,
    reps: Sequence[int] = (1, 1),
    cutoff: int | None = None,
    s: Sequence[int] | None = None,
    space: OscillatorSpace | None = None,
) -> OpMatrix:
    """The L-operator ``L'_i(zeta)`` or ``Lbar'_i(zeta)``.

    ``i = 1`` is the printed matrix. ``i = 2, 3`` follow from
    ``X_{i+1} = O X_i O^{-1}`` with the gradation cycled
    ``s0 -> s1 -> s2 -> s0`` each step.

    The scalar prefactor uses the product form of ``exp(f3)``, which is
    valid beyond ``|zeta^s| < 1`` away from the isolated poles.

    Parameters
    ----------
    zeta : SpectralPoint
        The argument of the L-operator itself (callers apply any ``r_s``
        rotation or inhomogeneity to the logarithm beforehand).
    s : triple of int, optional
        Gradation override (defaults to ``params.s``).
    space : OscillatorSpace, optional
        Reuse generator matrices across calls.
    """
    if i not in (1, 2, 3):
        raise ValueError("index i must be 1, 2 or 3")
    s = params.s if s is None else tuple(s)
    if space is None:
        space = _space(params, reps, cutoff)
    core = _core_first(zeta.w, _cycled_s(s, i), space, barred, params.q, params.kappa)
    if i > 1:
        M = np.linalg.matrix_power(o_matrix(params), i - 1)
        core = np.einsum("ac,cdxy,db->abxy", M, core, np.linalg.inv(M), optimize=True)
    pref = _prefactor(zeta.w, sum(s), params, barred)
    return OpMatrix(core, space.dims, pref, tuple(space.reps))


def zeta_D_matrix(i: int, zeta: SpectralPoint, params: Params, inverse: bool = False) -> np.ndarray:
    """Diagonal dressing ``zeta^{D_i}``: ``zeta^{-s/3}`` in slot ``i``, ``zeta^{s/6}`` elsewhere."""
    if i not in (1, 2, 3):
        raise ValueError("index i must be 1, 2 or 3")
    tot = params.s_total
    expo = np.full(3, tot / 6, dtype=complex)
    expo[i - 1] = -tot / 3
    if inverse:
        expo = -expo
    return np.diag(np.exp(expo * zeta.w))


def twist_exponents(i: int, barred: bool, params: Params) -> tuple:
    """Coefficients ``(x1, x2)`` with ``rho_i(t) = q^{x1 N1 + x2 N2}``, from the listed forms."""
    P1, P2, P3 = params.Phi
    table = {
        (1, False): (-(P1 - P2), P3 - P1),
        (2, False): (-(P2 - P3), P1 - P2),
        (3, False): (-(P3 - P1), P2 - P3),
        (1, True): (P1 - P3, -(P2 - P1)),
        (2, True): (P2 - P1, -(P3 - P2)),
        (3, True): (P3 - P2, -(P1 - P3)),
    }
    try:
        return table[(i, bool(barred))]
    except KeyError:
        raise ValueError("index i must be 1, 2 or 3") from None


def twist_exponents_from_rho(i: int, barred: bool, params: Params) -> tuple:
    """Same coefficients, composed from ``t = q^{sum phi_j h_j / 3}`` and ``rho_i``."""
    x1 = x2 = 0j
    for j, ph in enumerate(params.phi):
        a, b = _RHO_H[loop_label(i, barred, j)]
        x1 += ph * a / 3
        x2 += ph * b / 3
    return (x1, x2)


def twist_osc_image(
    i: int, barred: bool, params: Params, reps: Sequence[int] = (1, 1), cutoff: int | None = None
) -> OscOp:
    """Diagonal oscillator image of the twist element."""
    space = _space(params, reps, cutoff)
    return OscOp(space.dims, space.qN(twist_exponents(i, barred, params)))


def _interior_mask(dims: Sequence[int], box: int) -> np.ndarray:
    occ = np.indices(dims).reshape(len(dims), -1)
    return np.all(occ < box, axis=0)


def dual_L_residual(
    i: int,
    zeta: SpectralPoint,
    params: Params,
    cutoff: int | None = None,
    box: int = 6,
    shift: float = -3.0,
) -> float:
    """Relative residual of the barred/unbarred duality of the L-operators.

    Compares ``Lbar'_i(zeta)`` with ``P ((L'_{-i+1}(r_s^{-3} q^{shift/s} zeta))^{-1})^t P^{-1}``,
    everything on the right evaluated at the gradation ``(s0, s2, s1)``.
    The inverse is taken of the full ``3N x 3N`` block matrix; the transpose
    acts on the auxiliary indices only. The comparison is restricted to
    Fock states with both occupations below ``box``; the truncated inverse
    is wrong near the cutoff and that error decays into the interior.

    ``shift = -3`` is the identity; other values serve as negative controls.
    """
    space = _space(params, (1, 1), cutoff)
    lhs = build_L(i, True, zeta, params, space=space).full()
    s0, s1, s2 = params.s
    s_tau = (s0, s2, s1)
    tot = params.s_total
    arg = SpectralPoint(zeta.w - 3j * np.pi / tot + shift * params.hbar / tot)
    ip = (-i + 1) % 3 or 3
    Lp = build_L(ip, False, arg, params, s=s_tau, space=space)
    N = space.size
    try:
        inv = np.linalg.inv(Lp.as_block())
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("assembled L-operator matrix is singular") from exc
    inv = inv.reshape(3, N, 3, N).transpose(0, 2, 1, 3)
    inv_t = inv.transpose(1, 0, 2, 3)
    P = p_matrix(params, s_tau)
    rhs = np.einsum("ac,cdxy,db->abxy", P, inv_t, np.linalg.inv(P), optimize=True)
    m = _interior_mask(space.dims, min(box, space.dims[0]))
    diff = (rhs - lhs)[:, :, m][:, :, :, m]
    ref = lhs[:, :, m][:, :, :, m]
    return float(np.linalg.norm(diff) / np.linalg.norm(ref))


def fundamental_loop_image(label: str, params: Params, nu: complex = 1.0, barred: bool = False) -> np.ndarray:
    """3x3 image of a loop generator in the first fundamental evaluation representation.

    ``barred=False`` gives ``phi^(1,0,0)``; ``barred=True`` gives
    ``phibar'^(1,0,0)`` (the same map precomposed with ``tau``).
    """
    kind, j = _parse(label)
    if barred:
        j = (-j) % 3
    q = params.q
    E = lambda a, b: np.eye(3, dtype=complex)[:, [a]] @ np.eye(3, dtype=complex)[[b], :]  # noqa: E731
    if kind == "h":
        diag = {0: (-1, 0, 1), 1: (1, -1, 0), 2: (0, 1, -1)}[j]
        return np.diag([params.qpow(nu * d) for d in diag])
    if j == 0:
        return E(2, 0) / q
    if j == 1:
        return E(0, 1)
    return E(1, 2)


def intertwining_residual(
    i: int,
    barred: bool,
    zeta: SpectralPoint,
    params: Params,
    cutoff: int | None = None,
    box: int | None = None,
) -> float:
    """Residual of the intertwining property that characterizes the L-operator.

    For each generator ``e_j`` and ``x = rho_zeta(e_j)``, ``k = rho(q^{-h_j})``,
    ``E = psi(e_j)``, ``K = psi(q^{-h_j})`` with ``psi`` the fundamental
    quantum-space representation, the L-operator must satisfy

        K_aa x L_ab + sum_c E_ac L_cb = L_ab x + sum_c L_ac k E_cb

    and commute with ``rho(q^{h}) psi(q^{h})``. The maximal relative
    violation over Fock states with both occupations below ``box``
    (default ``min(D - 2, 8)``) is returned. This checks the printed
    matrices and the ``O``-conjugation route independently of any trace.
    """
    space = _space(params, (1, 1), cutoff)
    L = build_L(i, barred, zeta, params, space=space).entries
    D = space.dims[0]
    # entries grow like |q|^{-n}; a fixed box keeps rounding independent of D
    box = min(D - 2, 8) if box is None else box
    # the e-images move each occupation by at most one, so a block one state
    # wider than the box evaluates every product exactly on the box
    wide = _interior_mask(space.dims, box + 1)
    m = _interior_mask(space.dims, box)[wide]
    L = L[:, :, wide][:, :, :, wide]
    cut = lambda a: a[np.ix_(wide, wide)]  # noqa: E731
    ref = np.abs(L[:, :, m][:, :, :, m]).max()
    worst = 0.0
    tot_s = params.s
    for j in range(3):
        x = cut(cmath.exp(tot_s[j] * zeta.w) * _rho_base(loop_label(i, barred, j), "e", space))
        k = cut(_rho_base(loop_label(i, barred, j), "h", space, nu=-1.0))
        E = fundamental_loop_image(f"e{j}", params)
        K = np.diag(fundamental_loop_image(f"h{j}", params, nu=-1.0))
        lhs = np.einsum("a,xy,abyz->abxz", K, x, L, optimize=True) + np.einsum("ac,cbxy->abxy", E, L, optimize=True)
        rhs = np.einsum("abxy,yz->abxz", L, x, optimize=True) + np.einsum("acxy,yz,cb->abxz", L, k, E, optimize=True)
        d = (lhs - rhs)[:, :, m][:, :, :, m]
        worst = max(worst, float(np.abs(d).max() / ref))
        # weight conservation
        hq = cut(_rho_base(loop_label(i, barred, j), "h", space, nu=1.0))
        Kp = np.diag(fundamental_loop_image(f"h{j}", params, nu=1.0))
        lhs = np.einsum("a,xy,abyz->abxz", Kp, hq, L, optimize=True)
        rhs = np.einsum("b,abxy,yz->abxz", Kp, L, hq, optimize=True)
        d = (lhs - rhs)[:, :, m][:, :, :, m]
        worst = max(worst, float(np.abs(d).max() / ref))
    return worst
