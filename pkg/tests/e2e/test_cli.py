"""End-to-end tests for the semicoarse CLI."""

import csv
import json
from pathlib import Path
import subprocess
import sys
from typing import Any
from unittest.mock import patch

import pytest

from semicoarse.semicoarse import main


def _run(argv: list[str]) -> int:
    with patch("sys.stdout.isatty", return_value=False):
        return main(["semicoarse", *argv])


def _json_stdout(capsys: pytest.CaptureFixture[str]) -> dict[str, Any]:
    result: dict[str, Any] = json.loads(capsys.readouterr().out)
    return result


@pytest.fixture
def workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Empty working directory with no config file and no SEMICOARSE_* variables."""
    for name in ("SEMICOARSE_OUTPUT_DIR", "SEMICOARSE_SEED", "SEMICOARSE_TOLERANCE", "SEMICOARSE_JOBS"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestCLIHelp:
    """Test CLI help output via different invocation methods."""

    def test_python_module_help(self) -> None:
        result = subprocess.run(
            [sys.executable, "-m", "semicoarse", "-h"],
            capture_output=True,
            text=True,
            check=False,
        )
        assert result.returncode == 0
        assert "Semicoarse correlated equilibria" in result.stdout
        for command in ("gen", "solve", "dynamics", "certify", "experiment"):
            assert command in result.stdout

    def test_console_script_help(self) -> None:
        script_path = Path(sys.executable).parent / "semicoarse"

        if not script_path.exists():
            pytest.skip(f"Console script not found at {script_path}")

        result = subprocess.run([str(script_path), "solve", "-h"], capture_output=True, text=True, check=False)
        assert result.returncode == 0
        assert "--objective" in result.stdout
        assert "--export-lp" in result.stdout

    def test_main_with_none_argv(self, workdir: Path) -> None:
        """main() falls back to sys.argv for console-script invocation."""
        with patch("sys.argv", ["semicoarse", "gen", "badgame"]):
            with patch("sys.stdout.isatty", return_value=False):
                result = main(None)

        assert result == 0
        assert (workdir / "badgame.json").exists()


class TestGen:
    """Tests for the gen command."""

    def test_writes_game_document(self, workdir: Path) -> None:
        assert _run(["gen", "bertrand", "--n", "4", "--costs", "0,0", "--demand", "linear"]) == 0

        document = json.loads((workdir / "bertrand.json").read_text())
        assert document["format"] == "semicoarse-game/1"
        assert len(document["actions"]) == 2
        assert len(document["actions"][0]) == 5
        assert len(document["fingerprint"]) == 64

    def test_json_summary(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert _run(["gen", "firstprice", "--n", "3", "--gauge", "square", "--json"]) == 0

        summary = _json_stdout(capsys)
        assert summary["title"] == "game"
        assert summary["shape"] == [4, 4]
        assert Path(summary["path"]) == (workdir / "firstprice.json").resolve()

    def test_out_override(self, workdir: Path) -> None:
        target = workdir / "games" / "pennies.json"

        assert _run(["gen", "pennies", "--out", str(target)]) == 0
        assert target.exists()

    def test_fingerprint_tracks_settings(self, workdir: Path) -> None:
        def fingerprint(seed: str) -> str:
            assert _run(["gen", "random", "--sizes", "3,3", "--seed", seed]) == 0
            value: str = json.loads((workdir / "random.json").read_text())["fingerprint"]
            return value

        assert fingerprint("1") == fingerprint("1")
        assert fingerprint("1") != fingerprint("2")

    def test_unknown_generator(self, workdir: Path) -> None:
        with pytest.raises(SystemExit):
            _run(["gen", "chess"])


class TestSolve:
    """Tests for the solve command."""

    def test_semicoarse_excludes_non_nash_play(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        code = _run(["solve", "--generate", "badgame", "--kind", "semicoarse-ext", "--objective", "not-nash", "--json"])

        assert code == 0
        summary = _json_stdout(capsys)
        assert summary["value"] == pytest.approx(0.0, abs=1e-8)
        assert summary["kind"] == "semicoarse-ext"
        solution = json.loads((workdir / "solution.json").read_text())
        assert solution["objective"] == "not-nash"

    def test_cce_allows_non_nash_play(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert _run(["solve", "--generate", "badgame", "--kind", "cce", "-d", "not-nash", "--json"]) == 0

        assert _json_stdout(capsys)["value"] >= 0.1

    def test_from_game_file(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert _run(["gen", "badgame"]) == 0
        capsys.readouterr()

        code = _run(["solve", "--game", "badgame.json", "--kind", "ce", "--objective", "indicator:2:M", "--json"])

        assert code == 0
        assert _json_stdout(capsys)["value"] == pytest.approx(0.0, abs=1e-8)

    def test_export_lp(self, workdir: Path) -> None:
        target = workdir / "dual.lp"

        argv = ["solve", "--generate", "badgame", "--kind", "lyapunov", "-d", "not-nash", "--export-lp", str(target)]
        code = _run(argv)

        assert code == 0

        text = target.read_text()
        assert text.startswith("\\ Problem: lyapunov")
        assert text.rstrip().endswith("End")

    def test_text_output(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert _run(["solve", "--generate", "pennies", "--kind", "cce", "--no-color"]) == 0

        out = capsys.readouterr().out
        assert "solution:" in out
        assert "\033[" not in out

    def test_conflicting_sources(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert _run(["gen", "badgame"]) == 0

        assert _run(["solve", "--game", "badgame.json", "--generate", "badgame"]) == 1
        assert "either --game or --generate" in capsys.readouterr().err

    def test_missing_game_source(self, workdir: Path) -> None:
        assert _run(["solve"]) == 1

    def test_invalid_game_document(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        (workdir / "broken.json").write_text('{"format": "semicoarse-game/1", "actions": []}')

        assert _run(["solve", "--game", "broken.json"]) == 4
        assert "failed validation" in capsys.readouterr().err

    def test_unknown_objective(self, workdir: Path) -> None:
        assert _run(["solve", "--generate", "badgame", "--objective", "welfare"]) == 1

    def test_weighted_needs_weights(self, workdir: Path) -> None:
        assert _run(["solve", "--generate", "badgame", "--kind", "weighted"]) == 1


class TestDynamics:
    """Tests for the dynamics command."""

    def test_writes_trajectory_and_regret(self, workdir: Path) -> None:
        assert _run(["dynamics", "--generate", "badgame", "--rounds", "50", "--every", "10"]) == 0

        lines = (workdir / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "# semicoarse-csv/1"
        assert lines[1] == "t,player,action,probability"
        regret = json.loads((workdir / "regret.json").read_text())
        assert regret["rounds"] == 50
        assert regret["schedule"] == "inverse-sqrt:0.5"
        assert len(regret["regret"]) == 2

    def test_trajectory_probabilities(self, workdir: Path) -> None:
        assert _run(["dynamics", "--generate", "pennies", "--rounds", "5", "--schedule", "constant:0.1"]) == 0

        with open(workdir / "trajectory.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
        first_round = [float(row["probability"]) for row in rows if row["t"] == rows[0]["t"] and row["player"] == "1"]
        assert sum(first_round) == pytest.approx(1.0)

    def test_bad_schedule(self, workdir: Path) -> None:
        assert _run(["dynamics", "--generate", "badgame", "--schedule", "sometimes"]) == 1

    def test_meanbased_horizon_too_short(self, workdir: Path) -> None:
        assert _run(["dynamics", "--meanbased-demo", "--rounds", "1"]) == 4


class TestCertify:
    """Tests for the certify command."""

    def test_linear_duopoly(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert _run(["certify", "bertrand", "--n", "6", "--costs", "0,0", "--demand", "linear", "--no-color"]) == 0

        assert "pointwise" in capsys.readouterr().out
        certificate = json.loads((workdir / "certificate.json").read_text())
        assert certificate["verification"]["passed"] is True
        assert certificate["m"] == 2
        assert certificate["bound"]["T"] == 1000

    def test_unavailable_certificate(self, workdir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Unit demand with two low-cost firms has no explicit certificate."""
        assert _run(["certify", "bertrand", "--n", "6", "--costs", "0,0"]) == 4
        assert "concave" in capsys.readouterr().err

    def test_first_price_square_grid_rejected(self, workdir: Path) -> None:
        assert _run(["certify", "firstprice", "--n", "4", "--gauge", "square"]) == 1


class TestExperiment:
    """Tests for the experiment command."""

    def test_fig1_artifacts(self, workdir: Path) -> None:
        assert _run(["experiment", "fig1", "--grid", "3"]) == 0

        for name in ("fig1_n3.json", "fig1_n3_cce.csv", "fig1_n3_semicoarse.csv"):
            assert (workdir / name).exists()
        result = json.loads((workdir / "fig1_n3.json").read_text())
        assert result["semicoarse"]["objective_value"] == pytest.approx(2 / 9, abs=1e-7)

    def test_fig1_grid_limit(self, workdir: Path) -> None:
        assert _run(["experiment", "fig1", "--grid", "16"]) == 4

    def test_rps_table(self, workdir: Path) -> None:
        assert _run(["experiment", "rps", "--epsilon", "0.1"]) == 0

        lines = (workdir / "rps_regret.csv").read_text().splitlines()
        assert lines[1] == "transform,numeric,closed_form"
        assert len(lines) == 2 + 12

    def test_output_dir_flag(self, workdir: Path) -> None:
        target = workdir / "artifacts"

        assert _run(["experiment", "rps", "-o", str(target)]) == 0
        assert (target / "rps_regret.json").exists()


class TestConfiguration:
    """Settings from environment and config files."""

    def test_output_dir_from_env(self, workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("SEMICOARSE_OUTPUT_DIR", str(workdir / "from-env"))

        assert _run(["gen", "badgame"]) == 0
        assert (workdir / "from-env" / "badgame.json").exists()

    def test_output_dir_from_yaml(self, workdir: Path) -> None:
        (workdir / "semicoarse.yml").write_text("output-dir: from-yaml\n")

        assert _run(["gen", "badgame"]) == 0
        assert (workdir / "from-yaml" / "badgame.json").exists()

    def test_cli_beats_env(self, workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("SEMICOARSE_OUTPUT_DIR", str(workdir / "from-env"))

        assert _run(["gen", "badgame", "--output-dir", str(workdir / "from-cli")]) == 0
        assert (workdir / "from-cli" / "badgame.json").exists()
        assert not (workdir / "from-env").exists()

    def test_bad_env_value(
        self, workdir: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
    ) -> None:
        monkeypatch.setenv("SEMICOARSE_JOBS", "many")

        assert _run(["gen", "badgame"]) == 1
        assert "bad configuration value" in capsys.readouterr().err
