"""The fourteen acceptance criteria at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line; the same lines are
collected in the terminal summary of the pytest run.
"""

import cmath
import math
import time

import numpy as np
import pytest

from uqsl3 import chain, fock, lops, reps, tensorcheck
from uqsl3 import transfer as tr
from uqsl3.core import Params
from conftest import ACCEPTANCE, TENSOR_ZETAS, ZETA, ZETA_B, gl3_relation_defects, golden_params, random_eta


def record(num: int, ok: bool, text: str) -> None:
    ACCEPTANCE[num] = (bool(ok), text)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")
    assert ok, text


def _admissible_nus(params: Params, count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        nu = rng.normal(size=3) + 1j * rng.normal(size=3)
        if all(abs(params.qpow(sum(nu[j] * b[j] for j in range(3)))) < 0.9 for b in reps.NEG_ROOTS):
            out.append(tuple(nu))
    return out


def test_criterion_01_oscillator_axioms_and_trace(params):
    rng = np.random.default_rng(11)
    worst_axiom, worst_ratio = 0.0, 0.0
    for _ in range(10):
        target = complex(math.log(rng.uniform(0.05, 0.9)), rng.uniform(0, 2 * np.pi))
        nu = target / params.hbar
        assert abs(cmath.exp(nu * params.hbar)) < 0.9
        for rep in (1, -1):
            worst_axiom = max(worst_axiom, fock.axiom_residual(params.cutoff, nu, params.hbar, rep))
        _, _, qN = fock.chi_plus_ops(params.cutoff, nu, params.hbar)
        value, tail = fock.trace_regularized(qN)
        exact = 1 / (1 - cmath.exp(nu * params.hbar))
        worst_ratio = max(worst_ratio, abs(value - exact) / tail)
    ok = worst_axiom < 1e-13 and worst_ratio <= 1.0
    record(1, ok, f"axioms {worst_axiom:.1e}, max |trace error| / tail bound {worst_ratio:.2f} over 10 nu")


def _defect(lhs, rhs) -> float:
    if isinstance(lhs, np.ndarray):
        return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300))
    d = lhs - rhs
    c = d.exact
    scale = max(np.linalg.norm(lhs.data[:, c]), np.linalg.norm(rhs.data[:, c]), 1e-300)
    return float(np.linalg.norm(d.data[:, c]) / scale)


def _printed_verma_entries(lam, params, M):
    """Action coefficients of E1, E2, E3, F2, F3 on the basis v_n, transcribed term by term."""
    qn, qp = params.qnum, params.qpow
    l1, l2, l3 = lam
    m1, m2 = l1 - l2, l2 - l3
    out = []
    for n1 in range(M):
        for n2 in range(M):
            for n3 in range(M):
                n = (n1, n2, n3)
                out.append(("F2", n, (n1, n2, n3 + 1), qp(n1 - n2)))
                out.append(("F2", n, (n1 - 1, n2 + 1, n3), qn(n1)))
                out.append(("F3", n, (n1, n2 + 1, n3), qp(-n1)))
                out.append(("E1", n, (n1 - 1, n2, n3), qn(m1 - n1 - n2 + n3 + 1) * qn(n1)))
                out.append(("E1", n, (n1, n2 - 1, n3 + 1), -qp(m1 - n2 + n3 + 2) * qn(n2)))
                out.append(("E2", n, (n1, n2, n3 - 1), qn(m2 - n3 + 1) * qn(n3)))
                out.append(("E2", n, (n1 + 1, n2 - 1, n3), qp(-m2 + 2 * n3) * qn(n2)))
                out.append(("E3", n, (n1, n2 - 1, n3), qp(n1) * qn(m1 + m2 - n1 - n2 - n3 + 1) * qn(n2)))
                out.append(("E3", n, (n1 - 1, n2, n3 - 1),
                            -qp(-m1 + n1 + n2 - n3 - 1) * qn(m2 - n3 + 1) * qn(n1) * qn(n3)))
    return out


def test_criterion_02_representation_fidelity(params):
    worst_rel = 0.0
    for wid in ((1, 0, 0), (1, 1, 0)):
        for lhs, rhs in gl3_relation_defects(lambda g, nu: reps.pi_fund(wid, g, params, nu), params).values():
            worst_rel = max(worst_rel, _defect(lhs, rhs))
    M = 4
    worst_entry = 0.0
    for lam in ((0.7 + 0.2j, -0.3, 0.1j), (2, 1, 0)):
        for lhs, rhs in gl3_relation_defects(lambda g, nu: reps.verma_action(lam, g, M, params, nu), params).values():
            worst_rel = max(worst_rel, _defect(lhs, rhs))
        ops = {g: reps.verma_action(lam, g, M, params) for g in ("E1", "E2", "E3", "F2", "F3")}
        index = {n: k for k, n in enumerate(reps.verma_basis(M))}
        for g, src, dst, coef in _printed_verma_entries(lam, params, M):
            if dst in index:
                got = ops[g].data[index[dst], index[src]]
                worst_entry = max(worst_entry, abs(got - coef) / max(1.0, abs(coef)))
    oeqd = max(reps.oeqd_residual(params, z) for z in (ZETA, ZETA_B))
    mvdp = reps.mvdp_residual(params, ZETA, ZETA_B)
    ok = worst_rel < 1e-13 and worst_entry < 1e-13 and oeqd < 1e-12 and mvdp < 1e-10
    record(2, ok, f"gl3 relations {worst_rel:.1e}, printed Verma entries {worst_entry:.1e}, "
                  f"dual conjugation {oeqd:.1e}, dual intertwiner {mvdp:.1e}")


def test_criterion_03_bgg(params):
    worst = 0.0
    for nu in _admissible_nus(params, 5, seed=3):
        for lam in ((0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 0, 0), (2, 1, 0)):
            res = abs(reps.bgg_character_residual(lam, nu, params)) / abs(reps.finite_character(lam, nu, params))
            worst = max(worst, res)
    record(3, worst < 1e-9, f"max relative character residual {worst:.1e} (5 weights x 5 nu)")


def test_criterion_04_four_oscillator_actions(params):
    z3, z2, _ = TENSOR_ZETAS
    s = tensorcheck.appendixB_checks(z3, z2, params, cutoff=5)
    s.require_coverage()
    record(4, s.max_residual < 1e-10, f"max deviation {s.max_residual:.1e} over {len(s.residuals)} checks, cutoff 5")


def test_criterion_05_six_oscillator_actions(params):
    t = time.perf_counter()
    s = tensorcheck.appendixC_checks(*TENSOR_ZETAS, params, cutoff=3)
    elapsed = time.perf_counter() - t
    s.require_coverage()
    ok = s.max_residual < 1e-9 and elapsed < 60
    record(5, ok, f"max deviation {s.max_residual:.1e} over {len(s.residuals)} checks, cutoff 3, {elapsed:.1f} s")


def test_criterion_06_wronskians(params):
    worst = {}
    for n, tol in ((1, 1e-7), (2, 1e-6)):
        eta = random_eta(n)
        worst[n] = max(tr.wronskian_residual(i, ZETA, eta, params).residual for i in (1, 2, 3))
    eta = random_eta(1)
    control = min(
        tr.wronskian_residual(i, ZETA, eta, params, family=f, shift=1.5).residual
        for i in (1, 2, 3) for f in ("q", "qbar")
    )
    ok = worst[1] < 1e-7 and worst[2] < 1e-6 and control > 1e-2
    record(6, ok, f"n=1 {worst[1]:.1e}, n=2 {worst[2]:.1e}, perturbed-shift controls >= {control:.2f}")


def test_criterion_07_identity_and_determinant(params, eta1):
    ident = max(tr.identity_residual(ZETA, eta1, params, barred=b).residual for b in (False, True))
    anti = max(
        tr.antisymmetry_residual(lam, perm, ZETA, eta1, params, barred=b).residual
        for lam, perm in (((1, 0, 0), (1, 0, 2)), ((2, 1, 0), (0, 2, 1)))
        for b in (False, True)
    )
    equal = max(
        tr.vanishing_residual(lam, ZETA, eta1, params, barred=b).residual
        for lam in ((0, 1, 0), (1, 2, 0)) for b in (False, True)
    )
    ok = ident < 1e-7 and anti < 1e-8 and equal < 1e-8
    record(7, ok, f"T000 and Tbar000 {ident:.1e}, antisymmetry {anti:.1e}, equal columns {equal:.1e}")


def test_criterion_08_tq(params, eta1):
    worst = max(
        tr.tq_residual(k, b, ZETA, eta1, params, polynomial=p).residual
        for k in (1, 2, 3) for b in (False, True) for p in (False, True)
    )
    record(8, worst < 1e-7, f"max residual {worst:.1e} (12 relations)")


def test_criterion_09_mixed_tq(params, eta1):
    worst = max(
        tr.mixed_tq_residual(v, i, j, ZETA, eta1, params).residual
        for v in ("t100", "t110") for i in (1, 2, 3) for j in (1, 2, 3) if i != j
    )
    record(9, worst < 1e-7, f"max residual {worst:.1e} (2 x 6 pairs)")


def test_criterion_10_tt_suite(params, eta1):
    reports = []
    for b in (False, True):
        reports += [tr.tt_residual(v, l_, ZETA, eta1, params, barred=b) for v in ("fr1", "fr2") for l_ in (1, 2, 3)]
        reports += [tr.tt_residual("fr3", d, ZETA, eta1, params, barred=b) for d in ((2, 1), (3, 1), (3, 2))]
        reports += [tr.jacobi_trudi_residual(a, c, ZETA, eta1, params, barred=b)
                    for a, c in ((1, 0), (1, 1), (2, 1), (3, 1), (2, 2))]
    reports += [tr.tt_residual("utt", (2, 1, 0, -1, 3, 1), ZETA, eta1, params),
                tr.tt_residual("utt", (2.3, 1.1j, 0.4, -1, 3, 1.5), ZETA, eta1, params, barred=True)]
    reports += [tr.tt_residual("pjt1", (3, 2), ZETA, eta1, params)]
    reports += [tr.tt_residual(v, 3, ZETA, eta1, params) for v in ("pjt2", "pjt3", "pjt4")]
    worst = max(r.residual for r in reports)
    record(10, worst < 1e-7, f"max residual {worst:.1e} ({len(reports)} relations)")


def test_criterion_11_barred_unbarred_links(params, eta1):
    worst = max(
        tr.bttot_residual(l_, w, ZETA, eta1, params, polynomial=True).residual
        for l_ in (1, 2) for w in ("row", "column")
    )
    record(11, worst < 1e-7, f"max residual {worst:.1e} (l = 1, 2; row and column)")


def test_criterion_12_polynomiality(params, eta1):
    fits, controls = [], []
    for i in (1, 2, 3):
        for b in (False, True):
            f = chain.q_polynomial_part(i, eta1, params, barred=b)
            fits.append(f.residual if f.certified else math.inf)
            controls.append(chain.q_polynomial_part(i, eta1, params, barred=b, strip_f3=False,
                                                    window=f.window).residual)
    for b in (False, True):
        f = tr.t_polynomial_part((1, 0, 0), eta1, params, barred=b)
        fits.append(f.residual if f.certified else math.inf)
    window = tr.t_polynomial_part((1, 0, 0), eta1, params).window
    for shifts in ((0, 2), (-4, 2), (-4, 0)):
        controls.append(tr.t_polynomial_part((1, 0, 0), eta1, params, f3_shifts=shifts, window=window).residual)
    ok = max(fits) < 1e-8 and min(controls) > 1e-2
    record(12, ok, f"max certified fit residual {max(fits):.1e}, min control residual {min(controls):.3f}")


def test_criterion_13_commutativity(params):
    eta = random_eta(2)
    comm = tr.commutativity_residual([ZETA, ZETA_B], eta, params).residual
    block = tr.weight_block_residual([ZETA, ZETA_B], eta, params).residual
    ok = comm < 1e-7 and block < 1e-9
    record(13, ok, f"max relative commutator {comm:.1e}, off-block mass {block:.1e} (n=2, two points)")


def _stability_relations(params, eta):
    out = [tr.wronskian_residual(i, ZETA, eta, params) for i in (1, 2, 3)]
    out += [tr.identity_residual(ZETA, eta, params, barred=b) for b in (False, True)]
    out += [tr.tq_residual(k, b, ZETA, eta, params, polynomial=p)
            for k in (1, 2, 3) for b in (False, True) for p in (False, True)]
    out += [tr.mixed_tq_residual(v, 1, 2, ZETA, eta, params) for v in ("t100", "t110")]
    out += [tr.tt_residual(v, 2, ZETA, eta, params) for v in ("fr1", "fr2", "pjt2", "pjt3", "pjt4")]
    out += [tr.jacobi_trudi_residual(2, 1, ZETA, eta, params)]
    out += [tr.bttot_residual(1, w, ZETA, eta, params, polynomial=True) for w in ("row", "column")]
    out += [tr.commutativity_residual([ZETA, ZETA_B], eta, params)]
    out += [tr.vanishing_residual((0, 1, 0), ZETA, eta, params)]
    return out


def test_criterion_14_cutoff_stability():
    eta = random_eta(1)
    low = _stability_relations(golden_params(cutoff=14), eta)
    high = _stability_relations(golden_params(cutoff=18), eta)
    changes = [abs(a.residual - b.residual) for a, b in zip(low, high) if a.passed]
    operator_change = 0.0
    for i in (1, 2, 3):
        for fn in (chain.q_operator, chain.qbar_operator):
            A = fn(i, ZETA, eta, golden_params(cutoff=14)).data
            B = fn(i, ZETA, eta, golden_params(cutoff=18)).data
            operator_change = max(operator_change, float(np.linalg.norm(A - B) / np.linalg.norm(B)))
    ok = len(changes) == len(low) and max(changes) < 1e-8
    record(14, ok, f"{len(changes)} passing residuals, max change {max(changes):.1e}; "
                   f"Q operators change by {operator_change:.1e}")
