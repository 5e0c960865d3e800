"""
@file test_cli.py
@Description: Command line parsing, configuration precedence and exit codes
@Author: Saito SDK developers
Copyright 2024
"""
import pytest

from saito_sdk.cli import UsageError, build_parser, check_fixtures, main, resolve_config
from saito_sdk.saito_sdk import DEFAULT_CACHE
from saito_sdk.utils import MPQ


def parse(*argv):
    return build_parser().parse_args(list(argv))


def test_defaults():
    cfg = resolve_config(parse("metric", "e6"), environ={})
    assert cfg.group == "E6"
    assert cfg.solver == "modular"
    assert cfg.threads == 1
    assert cfg.metric_scale == 2
    assert cfg.cache_dir == DEFAULT_CACHE


def test_flag_beats_environment():
    environ = {"SAITO_THREADS": "8", "SAITO_CACHE_DIR": "/tmp/env-cache"}
    cfg = resolve_config(parse("flat", "--group", "E7", "--threads", "3", "--cache", "/tmp/flag-cache"), environ)
    assert (cfg.group, cfg.threads, cfg.cache_dir) == ("E7", 3, "/tmp/flag-cache")
    cfg = resolve_config(parse("flat", "E7"), environ)
    assert (cfg.threads, cfg.cache_dir) == (8, "/tmp/env-cache")


def test_metric_scale_is_exact():
    cfg = resolve_config(parse("eta", "A3", "--metric-scale", "1/2", "--solver", "exact"), environ={})
    assert cfg.metric_scale == MPQ(1, 2)
    assert cfg.solver == "exact"


@pytest.mark.parametrize(
    "argv, environ",
    [
        (("metric",), {}),
        (("metric", "E6", "--group", "E7"), {}),
        (("metric", "E6", "--threads", "0"), {}),
        (("metric", "E6"), {"SAITO_THREADS": "many"}),
        (("metric", "E6", "--metric-scale", "0"), {}),
    ],
)
def test_usage_errors(argv, environ):
    with pytest.raises(UsageError):
        resolve_config(parse(*argv), environ)


def test_bad_values_exit_with_usage(tmp_path):
    assert main(["metric", "--cache", str(tmp_path)]) == 2
    assert main(["metric", "E9", "--cache", str(tmp_path)]) == 2
    assert main(["metric", "E6", "--threads", "0", "--cache", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["metric", "E6", "--metric-scale", "x/y"])


def test_fixtures_check(capsys):
    assert main(["fixtures", "check"]) == 0
    out = capsys.readouterr().out
    assert "PASS checksums" in out
    assert "PASS fixture E8" in out
    assert all(line.startswith("PASS") for line in check_fixtures())


def test_fixtures_check_missing_sums(tmp_path):
    lines = check_fixtures(str(tmp_path))
    assert lines[0].startswith("FAIL checksums")
    assert main(["fixtures", "check", "--dir", str(tmp_path)]) == 1


def test_potential_a2(tmp_path, capsys):
    assert main(["potential", "A2", "--cache", str(tmp_path)]) == 0
    assert (tmp_path / "A2" / "potential" / "F.poly").read_text() == "1/6*t3^2*t2+1/24*t2^4\n"
    assert "artifacts in" in capsys.readouterr().out


def test_verify_a3(tmp_path, capsys):
    assert main(["verify", "A3", "--cache", str(tmp_path), "--symbolic-wdvv"]) == 0
    out = capsys.readouterr().out
    assert "PASS wdvv: symbolic" in out
    assert "PASS eta-constant: antidiagonal 1/4" in out


def test_verify_without_fixture_file(tmp_path):
    assert main(["verify", "A2", "--cache", str(tmp_path), "--against-fixtures"]) == 1


def test_verify_names_the_corrupted_coefficient(tmp_path, capsys):
    fixtures = tmp_path / "fixtures"
    fixtures.mkdir()
    (fixtures / "A2.ini").write_text("[potential]\nf = 1/6*t3^2*t2 + 1/25*t2^4\n", encoding="utf8")
    argv = ["verify", "A2", "--cache", str(tmp_path / "cache"), "--against-fixtures", "--fixture-dir", str(fixtures)]
    assert main(argv) == 1
    out = capsys.readouterr().out
    assert "FAIL fixtures-potential: coefficient of t2^4: expected 1/25, computed 1/24" in out


def _artifacts(root, folder):
    return {p.name: p.read_bytes() for p in sorted((root / "E6" / folder).iterdir())}


def test_two_e6_runs_write_identical_manifests(tmp_path):
    assert main(["potential", "E6", "--cache", str(tmp_path / "a"), "--threads", "2"]) == 0
    assert main(["potential", "E6", "--cache", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "E6" / "manifest.txt").read_bytes()
    assert first == (tmp_path / "b" / "E6" / "manifest.txt").read_bytes()
    assert b"artifact=potential/F.poly sha256=" in first
    for folder in ("metric", "flat", "potential"):
        assert _artifacts(tmp_path / "a", folder) == _artifacts(tmp_path / "b", folder)


def test_exact_and_modular_metric_artifacts_agree(tmp_path):
    assert main(["metric", "E6", "--cache", str(tmp_path / "modular")]) == 0
    assert main(["metric", "E6", "--cache", str(tmp_path / "exact"), "--solver", "exact"]) == 0
    modular = _artifacts(tmp_path / "modular", "metric")
    assert len(modular) == 21
    assert modular == _artifacts(tmp_path / "exact", "metric")
