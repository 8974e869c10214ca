"""Command-line experiment runner: argument parsing, exit codes, CSV output."""

import os
import subprocess
import sys

import pytest

from sheetlab.cli import ENV_OUT, main


def run(argv, tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUT, str(tmp_path))
    return main(argv)


class TestArgumentHandling:
    def test_no_arguments_is_a_usage_error(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().out.lower()

    def test_help_exits_cleanly(self, capsys):
        assert main(["--help"]) == 0
        out = capsys.readouterr().out
        for name in ("sheet-stats", "picard", "control-search"):
            assert name in out

    def test_unknown_experiment_rejected(self, capsys):
        assert main(["no-such-experiment"]) == 1

    def test_unknown_key_rejected(self, capsys, tmp_path, monkeypatch):
        assert run(["lemma61", "bogus=3"], tmp_path, monkeypatch) == 1
        assert "bogus" in capsys.readouterr().err

    def test_malformed_token_rejected(self, capsys, tmp_path, monkeypatch):
        assert run(["lemma61", "k64"], tmp_path, monkeypatch) == 1


class TestExitCodes:
    def test_passing_experiment_returns_zero(self, capsys, tmp_path, monkeypatch):
        code = run(["est-check", "pairs=20", "c=1", "order=30"], tmp_path, monkeypatch)
        out = capsys.readouterr().out
        assert code == 0
        assert "[PASS]" in out and "[FAIL]" not in out

    def test_failed_check_returns_two(self, capsys, tmp_path, monkeypatch):
        code = run(["lemma61", "k=32", "tol_constants=1e-9"], tmp_path, monkeypatch)
        out = capsys.readouterr().out
        assert code == 2
        assert "[FAIL]" in out


class TestCsvOutput:
    def test_metadata_header_and_rows(self, capsys, tmp_path, monkeypatch):
        code = run(["lemma61"], tmp_path, monkeypatch)
        assert code == 0
        path = tmp_path / "lemma61.csv"
        assert path.exists()
        lines = path.read_text().strip().splitlines()
        meta = [l for l in lines if l.startswith("# ")]
        body = [l for l in lines if not l.startswith("# ")]
        assert any(l.startswith("# experiment = lemma61") for l in meta)
        assert any(l.startswith("# all_pass = True") for l in meta)
        assert any(l.startswith("# wall_seconds = ") for l in meta)
        assert body[0].startswith("kernel,")
        assert len(body) == 3  # header + one row per kernel case

    def test_float_values_round_trip(self, capsys, tmp_path, monkeypatch):
        run(["lemma61"], tmp_path, monkeypatch)
        body = [
            l
            for l in (tmp_path / "lemma61.csv").read_text().strip().splitlines()
            if not l.startswith("# ")
        ]
        first = body[1].split(",")
        assert float(first[1]) == pytest.approx(1.0, abs=0.05)  # mixed partial near 1


class TestSeedAndWorkerInvariance:
    def test_worker_count_does_not_change_results(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(ENV_OUT, str(tmp_path / "w1"))
        assert main(["sheet-stats", "reps=500", "k=16", "workers=1"]) in (0, 2)
        monkeypatch.setenv(ENV_OUT, str(tmp_path / "w4"))
        assert main(["sheet-stats", "reps=500", "k=16", "workers=4"]) in (0, 2)
        capsys.readouterr()
        strip = lambda p: [  # noqa: E731
            l for l in p.read_text().splitlines() if not l.startswith("# wall")
        ]
        assert strip(tmp_path / "w1" / "sheet-stats.csv") == strip(tmp_path / "w4" / "sheet-stats.csv")

    def test_seed_changes_results(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(ENV_OUT, str(tmp_path / "s0"))
        main(["est-check", "pairs=5", "c=1", "order=20", "seed=0"])
        monkeypatch.setenv(ENV_OUT, str(tmp_path / "s1"))
        main(["est-check", "pairs=5", "c=1", "order=20", "seed=1"])
        capsys.readouterr()
        row = lambda p: p.read_text().splitlines()  # noqa: E731
        a = [l for l in row(tmp_path / "s0" / "est-check.csv") if l.startswith("gaussian")]
        b = [l for l in row(tmp_path / "s1" / "est-check.csv") if l.startswith("gaussian")]
        assert a != b


class TestConsoleScript:
    def test_installed_entry_point(self, tmp_path):
        env = dict(os.environ, **{ENV_OUT: str(tmp_path)})
        proc = subprocess.run(
            [sys.executable, "-m", "sheetlab.cli", "--help"],
            capture_output=True,
            text=True,
            env=env,
        )
        assert proc.returncode == 0
        assert "usage" in proc.stdout.lower()
