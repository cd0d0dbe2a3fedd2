import json
import math
from pathlib import Path

import pytest

from uqsl3 import cli
from uqsl3.cli import ConfigError, RunConfig, emit_report, load_config, read_report, run_verify, summary_counts
from uqsl3.transfer import RelationReport
from conftest import golden_params

GOLDEN = Path(__file__).resolve().parents[1] / "configs" / "golden.toml"


def _write(tmp_path, text):
    path = tmp_path / "cfg.toml"
    path.write_text(text)
    return str(path)


BASE = 'hbar = [-0.5108256237659907, 0.05]\nphi = [[6.3, 0.2], [-12.4, -0.1]]\n'


def test_golden_config_loads():
    cfg = load_config(str(GOLDEN))
    assert cfg.params.cutoff == 14 and cfg.n == 1 and cfg.params.tol == 1e-7
    assert abs(cfg.params.hbar - golden_params().hbar) < 1e-15
    assert cfg.selected == cli.SUITES


def test_invalid_suite_is_rejected_before_running(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "build_jobs", lambda cfg: pytest.fail("computation started"))
    path = _write(tmp_path, BASE + 'suites = ["core", "nonsense"]\n')
    with pytest.raises(ConfigError):
        load_config(path)
    assert cli.main(["verify", path]) == 2


@pytest.mark.parametrize("extra", ['sites = 0\n', 'zeta_grid = []\n', 'eta_mode = "chaotic"\n', 'wat = 1\n',
                                   'hbar = [0, 0.3]\n'])
def test_config_invariants(tmp_path, extra):
    text = 'phi = [[6.3, 0.2], [-12.4, -0.1]]\n' if extra.startswith("hbar") else BASE
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text + extra))


def test_flags_override_fields(tmp_path):
    cfg = load_config(_write(tmp_path, BASE))
    new = cfg.override(cutoff=18, n=2, seed=5, suites=("core",))
    assert new.params.cutoff == 18 and new.n == 2 and new.seed == 5 and new.selected == ("core",)


def test_empty_report_round_trip(tmp_path, capsys):
    out = tmp_path / "r.json"
    doc = emit_report([], str(out))
    assert doc["reports"] == [] and doc["schema"] == 1
    assert read_report(str(out)) == []
    assert "0 reports" in capsys.readouterr().out


def test_report_round_trip_and_counts(tmp_path, capsys):
    reports = [
        RelationReport("a", "d", 1e-12, 1e-14, 1e-7, {"zeta": [0.3, 0.2]}),
        RelationReport("b", "d", 0.5, 0.0, 1e-7),
        RelationReport("c", "d", math.nan, math.nan, 1e-7, {"skipped": "ConvergenceError: x"}),
    ]
    out = tmp_path / "r.json"
    doc = emit_report(reports, str(out))
    back = read_report(str(out))
    assert [r.relation_id for r in back] == ["a", "b", "c"]
    assert back[0] == reports[0] and back[1] == reports[1]
    assert math.isnan(back[2].residual)
    assert doc["summary"] == summary_counts(reports) == {"pass": 1, "fail": 1, "skip": 1}
    assert [r["pass"] for r in doc["reports"]] == [True, False, False]
    assert "1 pass, 1 fail, 1 skip" in capsys.readouterr().out


def _cfg(**kw):
    base = dict(params=golden_params(), zeta_grid=(0.3 + 0.2j, -0.2 + 0.5j), suites=("core", "fock", "reps"))
    base.update(kw)
    return RunConfig(**base)


def test_reports_are_sorted_and_deterministic():
    a = run_verify(_cfg(), threads=4)
    b = run_verify(_cfg(), threads=1)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    ids = [r.relation_id for r in a]
    assert ids == sorted(ids)
    assert all(r.passed for r in a)


def test_inadmissible_twist_is_skipped_not_fatal():
    cfg = _cfg(params=golden_params(phi=(0.31, -0.17)), suites=("chain",), zeta_grid=(0.3 + 0.2j,))
    reports = run_verify(cfg, threads=1)
    counts = summary_counts(reports)
    assert counts["skip"] > 0 and counts["pass"] + counts["fail"] + counts["skip"] == len(reports)
    assert all("ConvergenceError" in r.detail["skipped"] for r in reports if cli.is_skipped(r))


def test_tensor_c_suite_single_report():
    reports = run_verify(_cfg(suites=("tensorC",)), threads=1)
    assert len(reports) == 1 and reports[0].relation_id == "tensor_C"
    assert reports[0].residual < 1e-10


def test_verify_command_exit_status(tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert cli.main(["verify", str(GOLDEN), "--suite", "core", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["header"]["suites"] == ["core"] and doc["header"]["params"]["cutoff"] == 14
    bad = _write(tmp_path, 'hbar = [-0.5108256237659907, 0.05]\nphi = [0.31, -0.17]\n')
    assert cli.main(["verify", bad, "--suite", "chain", "--out", str(out)]) == 1


def test_probe_convergence_table(capsys):
    cfg = load_config(str(GOLDEN))
    table = cli.probe_convergence(cfg, [10, 14])
    assert set(table) >= {"wronskian_1", "t000"}
    assert all(len(v) == 2 for v in table.values())
    assert "D=14" in capsys.readouterr().out


def test_thread_cap_from_environment(monkeypatch):
    monkeypatch.setenv("UQSL3_THREADS", "3")
    assert cli._threads() == 3
    monkeypatch.setenv("UQSL3_THREADS", "x")
    with pytest.raises(ConfigError):
        cli._threads()
