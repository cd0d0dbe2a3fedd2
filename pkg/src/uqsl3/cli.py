"""Configuration-driven verification runs.

``uqsl3 verify config.toml`` evaluates the selected relation suites at every
spectral point of the configuration, writes a JSON report and prints a
summary table. ``uqsl3 probe-convergence config.toml`` sweeps the Fock
cutoff over a small set of relations.

Exit status of ``verify`` is 0 when every report passes, 1 when any report
fails or is skipped, and 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import cmath
import concurrent.futures as cf
import dataclasses
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import metadata
from typing import Callable, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import chain, fock, lops, reps, tensorcheck, transfer
from .chain import DegenerateTwistError
from .core import ConvergenceError, Params, SpectralPoint, exp_f3, f3_eval, q_number
from .transfer import RelationReport, params_digest

__all__ = [
    "ConfigError",
    "RunConfig",
    "SUITES",
    "load_config",
    "build_jobs",
    "run_verify",
    "emit_report",
    "read_report",
    "summary_counts",
    "probe_convergence",
    "main",
]

SCHEMA = 1
SUITES = ("core", "fock", "reps", "lops", "chain", "transfer", "tensorB", "tensorC")
SKIP_ERRORS = (ConvergenceError, DegenerateTwistError, ZeroDivisionError)

# extra spectral points for the tensor-product checks, as logarithms
TENSOR_OFFSETS = (-0.55 + 0.2j, -0.2 - 0.55j)


class ConfigError(ValueError):
    """Invalid run configuration; raised before any computation."""


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a verification run.

    Attributes
    ----------
    params : Params
    n : int
        Number of chain sites.
    eta_mode : {"homogeneous", "random"}
        ``random`` draws ``eta_k = 0.9 exp(i theta_k)`` with ``theta_k`` uniform, seeded by ``seed``.
    seed : int
    zeta_grid : tuple of complex
        Spectral points as logarithms ``w`` with ``zeta = exp(w)``.
    suites : tuple of str
    output : str
        Path of the JSON report.
    tensor_b_cutoff, tensor_c_cutoff : int
        Per-oscillator cutoffs of the four- and six-oscillator checks.
    """

    params: Params
    n: int = 1
    eta_mode: str = "random"
    seed: int = 1
    zeta_grid: tuple = (0.3 + 0.2j,)
    suites: tuple = ("all",)
    output: str = "report.json"
    tensor_b_cutoff: int = 5
    tensor_c_cutoff: int = 3

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if not self.zeta_grid:
            raise ConfigError("zeta_grid must not be empty")
        if self.eta_mode not in ("homogeneous", "random"):
            raise ConfigError(f"eta_mode must be 'homogeneous' or 'random', got {self.eta_mode!r}")
        bad = [s for s in self.suites if s not in SUITES + ("all",)]
        if bad:
            raise ConfigError(f"unknown suite label(s) {bad}; valid: {list(SUITES) + ['all']}")
        if not self.suites:
            raise ConfigError("no suites selected")

    @property
    def selected(self) -> tuple:
        """Suite labels with ``all`` expanded, in canonical order."""
        if "all" in self.suites:
            return SUITES
        return tuple(s for s in SUITES if s in self.suites)

    @property
    def eta(self) -> list:
        if self.eta_mode == "homogeneous":
            return chain.homogeneous(self.n)
        rng = np.random.default_rng(self.seed)
        return [SpectralPoint(math.log(0.9) + 1j * rng.uniform(0, 2 * np.pi)) for _ in range(self.n)]

    @property
    def points(self) -> list:
        return [SpectralPoint(w) for w in self.zeta_grid]

    def override(self, **changes) -> "RunConfig":
        """Copy with some fields replaced; ``cutoff`` goes into ``params``."""
        changes = {k: v for k, v in changes.items() if v is not None}
        if "cutoff" in changes:
            changes["params"] = self.params.replace(cutoff=changes.pop("cutoff"))
        return dataclasses.replace(self, **changes)


def _complex(value, name: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{name} must be a number or a [re, im] pair, got {value!r}")


def load_config(path: str) -> RunConfig:
    """Read a TOML configuration.

    Recognised keys: ``hbar``, ``s``, ``phi``, ``cutoff``, ``tol``,
    ``sites``, ``eta_mode``, ``seed``, ``zeta_grid``, ``suites``, ``output``,
    ``tensor_b_cutoff``, ``tensor_c_cutoff``. Complex numbers are written as
    ``[re, im]``.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    known = {
        "hbar", "s", "phi", "cutoff", "tol", "sites", "eta_mode", "seed", "zeta_grid",
        "suites", "output", "tensor_b_cutoff", "tensor_c_cutoff",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
    if "hbar" not in raw:
        raise ConfigError("hbar is required")
    try:
        params = Params(
            hbar=_complex(raw["hbar"], "hbar"),
            s=tuple(raw.get("s", (1, 1, 1))),
            phi=tuple(_complex(p, "phi") for p in raw.get("phi", (0, 0))),
            cutoff=int(raw.get("cutoff", 14)),
            tol=float(raw.get("tol", 1e-7)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    suites = raw.get("suites", ["all"])
    if isinstance(suites, str):
        suites = [suites]
    return RunConfig(
        params=params,
        n=int(raw.get("sites", 1)),
        eta_mode=str(raw.get("eta_mode", "random")),
        seed=int(raw.get("seed", 1)),
        zeta_grid=tuple(_complex(z, "zeta_grid") for z in raw.get("zeta_grid", [[0.3, 0.2]])),
        suites=tuple(suites),
        output=str(raw.get("output", "report.json")),
        tensor_b_cutoff=int(raw.get("tensor_b_cutoff", 5)),
        tensor_c_cutoff=int(raw.get("tensor_c_cutoff", 3)),
    )


# ------------------------------------------------------------------ jobs


@dataclass(frozen=True)
class Job:
    """One deferred relation check; ``point`` orders reports within a relation."""

    relation_id: str
    point: int
    run: Callable[[], RelationReport]
    detail: dict = field(default_factory=dict)


def _scalar(relation_id, digest, tol, func, tail=0.0, **detail) -> Callable[[], RelationReport]:
    def run():
        return RelationReport(relation_id, digest, float(func()), float(tail), tol, detail)

    return run


def _zeta_detail(p: SpectralPoint) -> list:
    return [float(p.w.real), float(p.w.imag)]


def _admissible_nus(params: Params, count: int, rng) -> list:
    out = []
    while len(out) < count:
        nu = rng.normal(size=3) + 1j * rng.normal(size=3)
        if all(abs(params.qpow(sum(nu[j] * b[j] for j in range(3)))) < 0.9 for b in reps.NEG_ROOTS):
            out.append(tuple(complex(x) for x in nu))
    return out


def _core_jobs(cfg: RunConfig, digest: str) -> list:
    P = cfg.params
    jobs = []
    for k, pt in enumerate(cfg.points):
        # the series converges only inside the unit disc
        z = 0.5 * pt.zeta / abs(pt.zeta)

        def f3_check(z=z):
            series, tail = f3_eval(z, P.q, 200)
            return abs(exp_f3(z, P) - cmath.exp(series)) / abs(cmath.exp(series))

        jobs.append(Job("f3_product", k, _scalar("f3_product", digest, P.tol, f3_check, zeta=_zeta_detail(pt))))

    def qnum_check():
        q = P.q
        return abs(q_number(3, q) - (q**2 + 1 + q**-2)) / abs(q_number(3, q))

    jobs.append(Job("q_number", 0, _scalar("q_number", digest, P.tol, qnum_check)))
    return jobs


def _fock_jobs(cfg: RunConfig, digest: str) -> list:
    P = cfg.params
    rng = np.random.default_rng(cfg.seed)
    jobs = []
    for k in range(10):
        # q^nu with modulus in (0.3, 0.9); the decaying representation is chi+ for |q| < 1
        target = complex(math.log(rng.uniform(0.3, 0.9)), rng.uniform(0, 2 * np.pi))
        nu = target / P.hbar
        rep = 1 if abs(P.q) < 1 else -1
        jobs.append(Job("fock_axioms", k, _scalar(
            "fock_axioms", digest, P.tol, lambda nu=nu, rep=rep: fock.axiom_residual(P.cutoff, nu, P.hbar, rep),
            nu=[nu.real, nu.imag], rep=rep,
        )))

        def trace_check(nu=nu, target=target):
            r = abs(cmath.exp(target))
            D = max(P.cutoff, int(math.ceil(math.log(1e-13) / math.log(r))) + 3)
            _, _, qN = fock.chi_plus_ops(D, nu, P.hbar)
            value, tail = fock.trace_regularized(qN)
            exact = 1.0 / (1.0 - cmath.exp(nu * P.hbar))
            return RelationReport(
                "fock_trace", digest, abs(value - exact) / abs(exact), tail / abs(exact), P.tol,
                {"nu": [nu.real, nu.imag], "cutoff": D},
            )

        if abs(P.q) < 1:
            jobs.append(Job("fock_trace", k, trace_check))
    return jobs


def _reps_jobs(cfg: RunConfig, digest: str) -> list:
    P = cfg.params
    jobs = []
    for k, pt in enumerate(cfg.points):
        other = pt.times(SpectralPoint(0.37 - 0.21j))
        jobs.append(Job("oeqd", k, _scalar("oeqd", digest, P.tol, lambda pt=pt: reps.oeqd_residual(P, pt),
                                           zeta=_zeta_detail(pt))))
        jobs.append(Job("mvdp", k, _scalar("mvdp", digest, P.tol,
                                           lambda pt=pt, o=other: reps.mvdp_residual(P, pt, o),
                                           zeta=_zeta_detail(pt))))
    rng = np.random.default_rng(cfg.seed)
    weights = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 0, 0), (2, 1, 0)]
    for k, nu in enumerate(_admissible_nus(P, 5, rng)):
        for lam in weights:
            def bgg(lam=lam, nu=nu):
                scale = abs(reps.finite_character(lam, nu, P))
                return abs(reps.bgg_character_residual(lam, nu, P)) / scale

            jobs.append(Job("bgg", k, _scalar("bgg", digest, P.tol, bgg, weight=list(lam))))
    return jobs


def _lops_jobs(cfg: RunConfig, digest: str) -> list:
    P = cfg.params
    jobs = []
    for k, pt in enumerate(cfg.points):
        for i in (1, 2, 3):
            jobs.append(Job(f"dual_L_{i}", k, _scalar(
                f"dual_L_{i}", digest, P.tol, lambda i=i, pt=pt: lops.dual_L_residual(i, pt, P, cutoff=P.cutoff),
                zeta=_zeta_detail(pt),
            )))
            for barred in (False, True):
                rid = f"intertwining_{'bar_' if barred else ''}{i}"
                jobs.append(Job(rid, k, _scalar(
                    rid, digest, P.tol,
                    lambda i=i, b=barred, pt=pt: lops.intertwining_residual(i, b, pt, P, cutoff=P.cutoff),
                    zeta=_zeta_detail(pt),
                )))
    return jobs


def _chain_jobs(cfg: RunConfig, digest: str) -> list:
    P, eta = cfg.params, cfg.eta
    jobs = []
    for k, pt in enumerate(cfg.points):
        for i in (1, 2, 3):
            for barred in (False, True):
                rid = f"covariance_{'bar_' if barred else ''}{i}"
                jobs.append(Job(rid, k, _scalar(
                    rid, digest, P.tol,
                    lambda i=i, b=barred, pt=pt: chain.covariance_residual(i, pt, eta, P, barred=b),
                    zeta=_zeta_detail(pt),
                )))
    for i in (1, 2, 3):
        for barred in (False, True):
            rid = f"q_polynomial_{'bar_' if barred else ''}{i}"

            def fit(i=i, b=barred, rid=rid):
                f = chain.q_polynomial_part(i, eta, P, barred=b)
                return RelationReport(rid, digest, f.residual, 0.0, 1e-8, {"window": f.window})

            jobs.append(Job(rid, 0, fit))
    return jobs


def _transfer_jobs(cfg: RunConfig, digest: str) -> list:
    P, eta = cfg.params, cfg.eta
    tr = transfer
    specs: list = []
    for k, pt in enumerate(cfg.points):
        z = pt
        calls = [lambda i=i: tr.wronskian_residual(i, z, eta, P) for i in (1, 2, 3)]
        calls += [lambda b=b: tr.identity_residual(z, eta, P, barred=b) for b in (False, True)]
        calls += [lambda k_=k_, b=b, pp=pp: tr.tq_residual(k_, b, z, eta, P, polynomial=pp)
                  for k_ in (1, 2, 3) for b in (False, True) for pp in (False, True)]
        calls += [lambda v=v, i=i, j=j: tr.mixed_tq_residual(v, i, j, z, eta, P)
                  for v in ("t100", "t110") for i in (1, 2, 3) for j in (1, 2, 3) if i != j]
        calls += [lambda v=v, l_=l_, b=b: tr.tt_residual(v, l_, z, eta, P, barred=b)
                  for v in ("fr1", "fr2") for l_ in (1, 2, 3) for b in (False, True)]
        calls += [lambda d=d, b=b: tr.tt_residual("fr3", d, z, eta, P, barred=b)
                  for d in ((2, 1), (3, 2), (3, 1)) for b in (False, True)]
        calls += [lambda v=v, d=d, b=b: tr.tt_polynomial_residual(v, d, z, eta, P, barred=b)
                  for v, d in (("fr3", (2, 1)), ("fr2", 1), ("fr2", 2)) for b in (False, True)]
        calls += [lambda: tr.tt_residual("pjt1", (3, 2), z, eta, P)]
        calls += [lambda v=v: tr.tt_residual(v, 3, z, eta, P) for v in ("pjt2", "pjt3", "pjt4")]
        calls += [lambda: tr.tt_residual("utt", (2, 1, 0, -1, 3, 1), z, eta, P),
                  lambda: tr.tt_residual("utt", (2.3, 1.1j, 0.4, -1, 3, 1.5), z, eta, P, barred=True)]
        calls += [lambda a=a, b=b, bb=bb: tr.jacobi_trudi_residual(a, b, z, eta, P, barred=bb)
                  for a, b in ((1, 0), (1, 1), (2, 1), (3, 1), (2, 2)) for bb in (False, True)]
        calls += [lambda l_=l_, w=w: tr.bttot_residual(l_, w, z, eta, P, polynomial=True)
                  for l_ in (1, 2) for w in ("row", "column")]
        calls += [lambda w=w: tr.octct_residual(w, z, eta, P) for w in ("100", "110")]
        calls += [lambda: tr.tls_residual((1, 0, 0), 0.7 + 0.2j, z, eta, P),
                  lambda: tr.tls_residual((1, 0, 0), 0.7, z, eta, P, barred=True),
                  lambda: tr.twtt_residual((1, 0.3, 0), z, eta, P),
                  lambda: tr.antisymmetry_residual((1, 0, 0), (1, 0, 2), z, eta, P)]
        calls += [lambda b=b: tr.vanishing_residual((0, 1, 0), z, eta, P, barred=b) for b in (False, True)]
        calls += [lambda l_=l_: tr.fusion_closure_residual(l_, z, eta, P) for l_ in (2, 3)]
        specs += [(k, c, _zeta_detail(pt)) for c in calls]
    specs.append((0, lambda: tr.commutativity_residual(cfg.points[:2] or cfg.points, eta, P), None))
    specs.append((0, lambda: tr.weight_block_residual(cfg.points[:2] or cfg.points, eta, P), None))

    for barred in (False, True):
        rid = f"t_polynomial{'_bar' if barred else ''}_100"

        def fit(b=barred, rid=rid):
            f = tr.t_polynomial_part((1, 0, 0), eta, P, barred=b)
            return RelationReport(rid, digest, f.residual, 0.0, 1e-8, {"window": f.window})

        specs.append((0, fit, None))

    jobs = []
    for k, call, zd in specs:
        def run(call=call, zd=zd):
            rep = call()
            if zd is None:
                return rep
            return dataclasses.replace(rep, detail={**rep.detail, "zeta": zd})

        jobs.append(Job("transfer", k, run))
    return jobs


def _tensor_points(cfg: RunConfig) -> tuple:
    base = cfg.points[0]
    return (base,) + tuple(base.times(SpectralPoint(o)) for o in TENSOR_OFFSETS)


def _tensor_b_jobs(cfg: RunConfig, digest: str) -> list:
    P = cfg.params
    z3, z2, _ = _tensor_points(cfg)
    func = lambda: tensorcheck.appendixB_residual(z3, z2, P, cutoff=cfg.tensor_b_cutoff)  # noqa: E731
    return [Job("tensor_B", 0, _scalar("tensor_B", digest, P.tol, func, cutoff=cfg.tensor_b_cutoff))]


def _tensor_c_jobs(cfg: RunConfig, digest: str) -> list:
    P = cfg.params
    z3, z2, z1 = _tensor_points(cfg)
    func = lambda: tensorcheck.appendixC_residual(z3, z2, z1, P, cutoff=cfg.tensor_c_cutoff)  # noqa: E731
    return [Job("tensor_C", 0, _scalar("tensor_C", digest, P.tol, func, cutoff=cfg.tensor_c_cutoff))]


_BUILDERS = {
    "core": _core_jobs,
    "fock": _fock_jobs,
    "reps": _reps_jobs,
    "lops": _lops_jobs,
    "chain": _chain_jobs,
    "transfer": _transfer_jobs,
    "tensorB": _tensor_b_jobs,
    "tensorC": _tensor_c_jobs,
}


def build_jobs(cfg: RunConfig) -> list:
    """Deferred checks of every selected suite, in a fixed order."""
    digest = params_digest(cfg.params, cfg.eta)
    jobs = []
    for name in cfg.selected:
        jobs.extend(_BUILDERS[name](cfg, digest))
    return jobs


def _skip_report(job: Job, digest: str, tol: float, exc: Exception) -> RelationReport:
    return RelationReport(
        job.relation_id, digest, float("nan"), float("nan"), tol,
        {**job.detail, "skipped": f"{type(exc).__name__}: {exc}"},
    )


def _sort_key(item) -> tuple:
    point, rep = item
    return (rep.relation_id, point, json.dumps(rep.detail, sort_keys=True, default=str))


def _threads() -> int:
    env = os.environ.get("UQSL3_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"UQSL3_THREADS must be an integer, got {env!r}") from exc
    return min(8, os.cpu_count() or 1)


def run_verify(cfg: RunConfig, threads: int | None = None) -> list:
    """Run every selected suite and return the reports sorted by relation and point.

    Inadmissible twists and divergent traces are recorded as skipped reports
    (``residual`` is NaN and ``detail["skipped"]`` names the error).
    """
    digest = params_digest(cfg.params, cfg.eta)
    jobs = build_jobs(cfg)

    def execute(job: Job):
        try:
            return job.point, job.run()
        except SKIP_ERRORS as exc:
            return job.point, _skip_report(job, digest, cfg.params.tol, exc)

    workers = _threads() if threads is None else max(1, int(threads))
    if workers == 1:
        results = [execute(j) for j in jobs]
    else:
        with cf.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute, jobs))
    return [rep for _, rep in sorted(results, key=_sort_key)]


# ------------------------------------------------------------------ reporting


def _json_float(x: float):
    return None if not math.isfinite(x) else float(x)


def _report_dict(rep: RelationReport) -> dict:
    out = rep.to_dict()
    out["residual"] = _json_float(rep.residual)
    out["tail_certificate"] = _json_float(rep.tail_certificate)
    out["skipped"] = is_skipped(rep)
    return out


def is_skipped(rep: RelationReport) -> bool:
    return "skipped" in rep.detail


def summary_counts(reports: Sequence[RelationReport]) -> dict:
    """Numbers of passing, failing and skipped reports."""
    skipped = sum(is_skipped(r) for r in reports)
    passed = sum(r.passed for r in reports)
    return {"pass": passed, "fail": len(reports) - passed - skipped, "skip": skipped}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def emit_report(reports: Sequence[RelationReport], path: str, cfg: RunConfig | None = None, stream=None) -> dict:
    """Write the JSON report and print a summary table.

    Returns the document that was written.
    """
    header = {
        "version": _version(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if cfg is not None:
        header.update(
            params=cfg.params.as_dict(),
            sites=cfg.n,
            eta_mode=cfg.eta_mode,
            seed=cfg.seed,
            zeta_grid=[[w.real, w.imag] for w in cfg.zeta_grid],
            suites=list(cfg.selected),
        )
    doc = {
        "schema": SCHEMA,
        "header": header,
        "summary": summary_counts(reports),
        "reports": [_report_dict(r) for r in reports],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, default=str)
        fh.write("\n")
    _print_table(reports, stream or sys.stdout)
    return doc


def read_report(path: str) -> list:
    """Parse a report written by :func:`emit_report` back into :class:`RelationReport` objects."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    nan = float("nan")
    return [
        RelationReport(
            r["relation_id"],
            r["params_digest"],
            nan if r["residual"] is None else r["residual"],
            nan if r["tail_certificate"] is None else r["tail_certificate"],
            r["tol"],
            r["detail"],
        )
        for r in doc["reports"]
    ]


def _print_table(reports: Sequence[RelationReport], stream) -> None:
    print(f"{'relation':24s} {'residual':>10s} {'tail':>10s} {'tol':>8s}  status", file=stream)
    for r in reports:
        status = "skip" if is_skipped(r) else ("pass" if r.passed else "FAIL")
        print(f"{r.relation_id:24s} {r.residual:10.2e} {r.tail_certificate:10.2e} {r.tol:8.0e}  {status}", file=stream)
    c = summary_counts(reports)
    print(f"{len(reports)} reports: {c['pass']} pass, {c['fail']} fail, {c['skip']} skip", file=stream)


# ------------------------------------------------------------------ convergence probe


def probe_convergence(cfg: RunConfig, cutoffs: Sequence[int], stream=None) -> dict:
    """Residuals of a few cutoff-sensitive relations across Fock cutoffs.

    Returns ``{relation_id: [residual per cutoff]}`` and prints a table.
    """
    stream = stream or sys.stdout
    eta = cfg.eta
    z = cfg.points[0]
    probes = {
        "wronskian_1": lambda P: transfer.wronskian_residual(1, z, eta, P),
        "t000": lambda P: transfer.identity_residual(z, eta, P),
        "tq_1": lambda P: transfer.tq_residual(1, False, z, eta, P),
        "fr1_1": lambda P: transfer.tt_residual("fr1", 1, z, eta, P),
        "commutativity": lambda P: transfer.commutativity_residual([z], eta, P),
    }
    table: dict = {name: [] for name in probes}
    for D in cutoffs:
        P = cfg.params.replace(cutoff=int(D))
        for name, fn in probes.items():
            try:
                table[name].append(fn(P).residual)
            except SKIP_ERRORS:
                table[name].append(float("nan"))
    print(f"{'relation':16s}" + "".join(f"{'D=' + str(D):>12s}" for D in cutoffs), file=stream)
    for name, vals in table.items():
        print(f"{name:16s}" + "".join(f"{v:12.2e}" for v in vals), file=stream)
    return table


# ------------------------------------------------------------------ entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uqsl3", description="Verify functional relations of Q-operators.")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites and write a JSON report")
    v.add_argument("config")
    v.add_argument("--suite", action="append", dest="suites", help="suite label (repeatable)")
    v.add_argument("--out", dest="output")
    v.add_argument("--cutoff", type=int)
    v.add_argument("--sites", type=int, dest="n")
    v.add_argument("--seed", type=int)
    p = sub.add_parser("probe-convergence", help="sweep the Fock cutoff")
    p.add_argument("config")
    p.add_argument("--cutoffs", default="10,14,18", help="comma-separated cutoffs")
    p.add_argument("--sites", type=int, dest="n")
    p.add_argument("--seed", type=int)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "verify":
            cfg = cfg.override(
                suites=tuple(args.suites) if args.suites else None,
                output=args.output, cutoff=args.cutoff, n=args.n, seed=args.seed,
            )
            threads = _threads()
        else:
            cfg = cfg.override(n=args.n, seed=args.seed)
            cutoffs = [int(c) for c in args.cutoffs.split(",") if c.strip()]
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.command == "probe-convergence":
        probe_convergence(cfg, cutoffs)
        return 0
    reports = run_verify(cfg, threads)
    emit_report(reports, cfg.output, cfg)
    c = summary_counts(reports)
    return 0 if c["fail"] == 0 and c["skip"] == 0 else 1
