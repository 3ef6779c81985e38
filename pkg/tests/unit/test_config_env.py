"""Unit tests for environment variable configuration."""

from pathlib import Path
from unittest.mock import Mock, patch

import pytest

from semicoarse.config import Config


@pytest.fixture(autouse=True)
def _isolated(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    for name in ("NO_COLOR", "SEMICOARSE_NO_COLOR", "SEMICOARSE_OUTPUT_DIR", "SEMICOARSE_TOLERANCE"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.delenv("SEMICOARSE_JOBS", raising=False)
    monkeypatch.delenv("SEMICOARSE_SEED", raising=False)


class TestEnvironmentVariables:
    """Tests for environment variable configuration."""

    @patch.dict("os.environ", {"NO_COLOR": "1"})
    @patch("sys.stdout.isatty")
    def test_no_color_env_var(self, mock_isatty: Mock) -> None:
        """NO_COLOR disables colors."""
        mock_isatty.return_value = True

        assert Config(["semicoarse", "gen", "badgame"]).colorize is False

    @patch.dict("os.environ", {"NO_COLOR": ""})
    @patch("sys.stdout.isatty")
    def test_no_color_env_var_empty(self, mock_isatty: Mock) -> None:
        """An empty NO_COLOR leaves colors on."""
        mock_isatty.return_value = True

        assert Config(["semicoarse", "gen", "badgame"]).colorize is True

    @pytest.mark.parametrize("value", ["1", "true", "yes", "TRUE"])
    @patch("sys.stdout.isatty")
    def test_semicoarse_no_color_truthy(self, mock_isatty: Mock, value: str, monkeypatch: pytest.MonkeyPatch) -> None:
        """SEMICOARSE_NO_COLOR accepts 1, true and yes in any case."""
        mock_isatty.return_value = True
        monkeypatch.setenv("SEMICOARSE_NO_COLOR", value)

        assert Config(["semicoarse", "gen", "badgame"]).colorize is False

    @patch.dict("os.environ", {"SEMICOARSE_NO_COLOR": "false"})
    @patch("sys.stdout.isatty")
    def test_semicoarse_no_color_false(self, mock_isatty: Mock) -> None:
        """SEMICOARSE_NO_COLOR=false keeps colors."""
        mock_isatty.return_value = True

        assert Config(["semicoarse", "gen", "badgame"]).colorize is True

    def test_output_dir_env_var(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """SEMICOARSE_OUTPUT_DIR sets the artifact directory."""
        monkeypatch.setenv("SEMICOARSE_OUTPUT_DIR", str(tmp_path / "env-out"))

        assert Config(["semicoarse", "gen", "badgame"]).output_dir == (tmp_path / "env-out").resolve()

    def test_numeric_env_vars(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Tolerance, jobs and seed convert from their environment strings."""
        monkeypatch.setenv("SEMICOARSE_TOLERANCE", "1e-7")
        monkeypatch.setenv("SEMICOARSE_JOBS", "4")
        monkeypatch.setenv("SEMICOARSE_SEED", "42")

        config = Config(["semicoarse", "gen", "badgame"])

        assert config.tolerance == 1e-7
        assert config.jobs == 4
        assert config.seed == 42

    def test_bad_numeric_env_var(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """A malformed value raises ValueError for main to report."""
        monkeypatch.setenv("SEMICOARSE_JOBS", "many")

        with pytest.raises(ValueError):
            Config(["semicoarse", "gen", "badgame"])


class TestEnvironmentVariablePriority:
    """Tests for priority between CLI, environment and files."""

    def test_cli_overrides_env(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Command-line values win over the environment."""
        monkeypatch.setenv("SEMICOARSE_SEED", "42")
        monkeypatch.setenv("SEMICOARSE_TOLERANCE", "1e-3")

        config = Config(["semicoarse", "gen", "badgame", "--seed", "3", "--tolerance", "1e-8"])

        assert config.seed == 3
        assert config.tolerance == 1e-8

    def test_env_overrides_pyproject(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """The environment wins over pyproject.toml."""
        (tmp_path / "pyproject.toml").write_text("""
[tool.semicoarse]
seed = 5
jobs = 2
""")
        monkeypatch.setenv("SEMICOARSE_SEED", "9")

        config = Config(["semicoarse", "gen", "badgame"])

        assert config.seed == 9
        assert config.jobs == 2

    @patch.dict("os.environ", {"NO_COLOR": "1", "SEMICOARSE_NO_COLOR": "false"})
    @patch("sys.stdout.isatty")
    def test_no_color_takes_precedence(self, mock_isatty: Mock) -> None:
        """NO_COLOR wins even when SEMICOARSE_NO_COLOR is false."""
        mock_isatty.return_value = True

        assert Config(["semicoarse", "gen", "badgame"]).colorize is False

    @patch("sys.stdout.isatty")
    def test_env_no_color_overrides_file(
        self, mock_isatty: Mock, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """SEMICOARSE_NO_COLOR disables colors even when the file keeps them."""
        mock_isatty.return_value = True
        (tmp_path / "semicoarse.yml").write_text("no-color: false\n")
        monkeypatch.setenv("SEMICOARSE_NO_COLOR", "true")

        assert Config(["semicoarse", "gen", "badgame"]).colorize is False
