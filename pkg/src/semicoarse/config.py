"""Configuration management for semicoarse.

This module handles command-line argument parsing and configuration loading
from multiple sources (CLI args, environment variables, config file).
"""

import argparse
from collections.abc import Callable
from dataclasses import asdict, dataclass
import hashlib
import json
import os
from pathlib import Path
import sys
from typing import Any, Protocol, TypeVar

import tomli
import yaml

from semicoarse.two_step_parser import TwoStepParser


T = TypeVar("T")

DEFAULT_TOLERANCE = 1e-9
DEFAULT_SEED = 0
DEFAULT_JOBS = 1

GENERATOR_KINDS = ("bertrand", "firstprice", "badgame", "rps", "random", "pennies")
LP_KINDS = ("cce", "ce", "semicoarse", "semicoarse-ext", "lyapunov", "weighted")
EXPERIMENTS = ("fig1", "fig2", "meanbased", "rps")


class ConfigFile(Protocol):
    """Protocol for configuration file readers."""

    def load_config(self) -> dict[str, Any]:
        """Load configuration from the file.

        Returns:
            Dictionary with configuration values, empty if file doesn't exist or parsing fails
        """
        ...


class PyProjectConfigFile:
    """Configuration file reader for the ``[tool.semicoarse]`` section of pyproject.toml."""

    def __init__(self, file_path: Path) -> None:
        self.file_path = file_path

    def load_config(self) -> dict[str, Any]:
        if not self.file_path.exists():
            return {}

        try:
            with open(self.file_path, "rb") as f:
                data: dict[str, Any] = tomli.load(f)
                tool_section: dict[str, Any] = data.get("tool", {})
                config: dict[str, Any] = tool_section.get("semicoarse", {})
                return config
        except (OSError, tomli.TOMLDecodeError):
            return {}


class SemicoarseConfigFile:
    """Configuration file reader for semicoarse.yml files (keys at the root level)."""

    def __init__(self, file_path: Path) -> None:
        self.file_path = file_path

    def load_config(self) -> dict[str, Any]:
        if not self.file_path.exists():
            return {}

        try:
            with open(self.file_path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError):
            return {}
        return data if isinstance(data, dict) else {}


def get_config_file(config_file_names: list[str] | None = None) -> ConfigFile | None:
    """Return a reader for the first config file found in the working directory.

    Args:
        config_file_names: File names to look for, in order.
                          Defaults to ["semicoarse.yml", "pyproject.toml"]
    """
    config_class_map: dict[str, type[PyProjectConfigFile] | type[SemicoarseConfigFile]] = {
        "pyproject.toml": PyProjectConfigFile,
        "semicoarse.yml": SemicoarseConfigFile,
    }

    if config_file_names is None:
        config_file_names = ["semicoarse.yml", "pyproject.toml"]

    cwd = Path.cwd()

    for config_name in config_file_names:
        config_path = cwd / config_name
        if config_path.exists() and config_name in config_class_map:
            return config_class_map[config_name](config_path)

    return None


def _int_list(arg: str) -> list[int]:
    """Parse a comma-separated list of integers."""
    try:
        return [int(part) for part in arg.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {arg!r}") from e


@dataclass
class Args:
    """Parsed command-line arguments."""

    command: str
    target: str | None
    game: Path | None
    generate: str | None
    n: int
    costs: list[int] | None
    demand: str
    values: list[int] | None
    gauge: str
    sizes: list[int] | None
    lp_kind: str
    objective: str
    weights: str | None
    max_cycle_len: int | None
    export_lp: Path | None
    exact: bool
    pivot_rule: str
    schedule: str
    rounds: int
    scalings: str | None
    every: int
    meanbased_demo: bool
    actions: int
    alpha: float
    step_scale: float
    epsilon: float
    points: int
    route: str
    grid_sizes: list[int] | None
    utility_bound: float
    out: Path | None
    json_output: bool
    no_color: bool
    verbose: bool
    output_dir: Path | None
    seed: int | None
    tolerance: float | None
    jobs: int | None

    @staticmethod
    def _configure_generator_group(parser: TwoStepParser) -> None:
        group = parser.add_shared_group("generator", title="game generator options")
        group.add_argument("--n", type=int, default=10, help="Grid resolution n (default: 10)")
        group.add_argument("--costs", type=_int_list, default=None, metavar="C1,C2,...", help="Bertrand cost indices")
        group.add_argument(
            "--demand",
            default="inelastic",
            metavar="SPEC",
            help="Demand curve: inelastic, linear, quadratic, affine:<e> (default: inelastic)",
        )
        group.add_argument("--values", type=_int_list, default=None, metavar="V1,V2,...", help="Buyer value indices")
        group.add_argument("--gauge", choices=["uniform", "square"], default="uniform", help="First-price bid grid")
        group.add_argument(
            "--sizes", type=_int_list, default=None, metavar="M1,M2,...", help="Action counts per player"
        )

    @staticmethod
    def _configure_source_group(parser: TwoStepParser) -> None:
        group = parser.add_shared_group("source", title="game source")
        group.add_argument("--game", type=Path, default=None, metavar="PATH", help="Game JSON written by 'gen'")
        group.add_argument(
            "--generate",
            choices=GENERATOR_KINDS,
            default=None,
            help="Build the game in memory from the generator options",
        )

    @staticmethod
    def _configure_lp_group(parser: TwoStepParser) -> None:
        group = parser.add_shared_group("lp", title="LP solver options")
        group.add_argument("--exact", action="store_true", help="Pivot in exact rational arithmetic")
        group.add_argument(
            "--pivot-rule",
            choices=["dantzig", "bland"],
            default="dantzig",
            dest="pivot_rule",
            help="Entering-variable rule; dantzig falls back to Bland on degenerate runs (default: dantzig)",
        )

    @staticmethod
    def _configure_schedule_group(parser: TwoStepParser) -> None:
        group = parser.add_shared_group("schedule", title="step schedule options")
        group.add_argument(
            "--schedule",
            default="inverse-sqrt:0.5",
            metavar="SPEC",
            help="constant:C, inverse-sqrt:C, power:C:alpha or horizon:C:T (default: inverse-sqrt:0.5)",
        )
        group.add_argument("--rounds", "-T", type=int, default=1000, help="Number of rounds T (default: 1000)")

    @staticmethod
    def _configure_gen_command(parser: TwoStepParser) -> argparse.ArgumentParser:
        gen_cmd = parser.add_command(
            "gen",
            help="Generate a game and write it as JSON",
            description="Build one of the named games and write the game JSON document",
            groups=["generator"],
            epilog="""
Examples:
  semicoarse gen bertrand --n 10 --costs 0,0 --demand linear
  semicoarse gen firstprice --n 10 --values 10,10 --gauge square
  semicoarse gen badgame
  semicoarse gen random --sizes 3,4 --seed 7
            """,
        )
        gen_cmd.add_argument("target", choices=GENERATOR_KINDS, help="Game family")
        gen_cmd.add_argument("--out", type=Path, default=None, metavar="PATH", help="Output file")
        return gen_cmd

    @staticmethod
    def _configure_solve_command(parser: TwoStepParser) -> argparse.ArgumentParser:
        solve_cmd = parser.add_command(
            "solve",
            help="Maximize an objective over an equilibrium polytope",
            description="Build and solve an equilibrium LP for a game",
            groups=["source", "generator", "lp"],
            epilog="""
Objectives:
  one                  d = 1
  not-nash             d = 1 off the pure Nash outcomes
  sq-value             sum of squared prices or bids
  sq-distance:X1,X2    squared distance of the action values from a point
  indicator:P:A        1 when player P (1-based) plays action A (label or index)

Examples:
  semicoarse solve --generate badgame --kind semicoarse-ext --objective indicator:2:M
  semicoarse solve --game game.json --kind lyapunov --objective not-nash --export-lp dual.lp
            """,
        )
        solve_cmd.add_argument("--kind", choices=LP_KINDS, default="semicoarse-ext", dest="lp_kind", help="LP family")
        solve_cmd.add_argument("--objective", "-d", default="one", help="Objective spec (default: one)")
        solve_cmd.add_argument(
            "--weights", default=None, metavar="W", help="Weights for --kind weighted, players separated by ';'"
        )
        solve_cmd.add_argument("--max-cycle-len", type=int, default=None, dest="max_cycle_len")
        solve_cmd.add_argument("--export-lp", type=Path, default=None, dest="export_lp", metavar="PATH")
        solve_cmd.add_argument("--out", type=Path, default=None, metavar="PATH", help="Solution JSON")
        return solve_cmd

    @staticmethod
    def _configure_dynamics_command(parser: TwoStepParser) -> argparse.ArgumentParser:
        dynamics_cmd = parser.add_command(
            "dynamics",
            help="Run projected gradient ascent and measure regret",
            description="Simulate gradient ascent, write the trajectory and the canonical regret report",
            groups=["source", "generator", "schedule"],
        )
        dynamics_cmd.add_argument(
            "--scalings", default=None, metavar="Z", help="Diagonal scalings per player, players separated by ';'"
        )
        dynamics_cmd.add_argument("--every", type=int, default=1, help="Trajectory CSV stride (default: 1)")
        dynamics_cmd.add_argument("--max-cycle-len", type=int, default=None, dest="max_cycle_len")
        dynamics_cmd.add_argument(
            "--meanbased-demo", action="store_true", dest="meanbased_demo", help="Run the mean-based counterexample"
        )
        dynamics_cmd.add_argument("--actions", type=int, default=2, help="Actions in the mean-based demo")
        dynamics_cmd.add_argument("--alpha", type=float, default=0.5, help="Step exponent in the mean-based demo")
        dynamics_cmd.add_argument("--C", type=float, default=1.0, dest="step_scale", help="Step scale C in the demo")
        return dynamics_cmd

    @staticmethod
    def _configure_certify_command(parser: TwoStepParser) -> argparse.ArgumentParser:
        certify_cmd = parser.add_command(
            "certify",
            help="Build and verify a Bertrand dual certificate",
            description="Construct the explicit certificate and check it at every price vector",
            groups=["generator", "schedule"],
            epilog="""
Examples:
  semicoarse certify bertrand --n 10 --costs 0,0,5
  semicoarse certify firstprice --n 8 --values 8,8,8 --rounds 100000
            """,
        )
        certify_cmd.add_argument("target", choices=["bertrand", "firstprice"], help="Game family")
        certify_cmd.add_argument(
            "--utility-bound", type=float, default=2.0, dest="utility_bound", help="U in the convergence bound"
        )
        return certify_cmd

    @staticmethod
    def _configure_experiment_command(parser: TwoStepParser) -> argparse.ArgumentParser:
        experiment_cmd = parser.add_command(
            "experiment",
            help="Reproduce an experiment",
            description="Run fig1, fig2, meanbased or rps and write CSV/JSON artifacts",
            groups=["lp", "schedule"],
        )
        experiment_cmd.add_argument("target", choices=EXPERIMENTS, help="Experiment name")
        experiment_cmd.add_argument(
            "--grid", type=_int_list, default=None, dest="grid_sizes", metavar="N1,N2,...", help="Grid resolutions"
        )
        experiment_cmd.add_argument("--route", choices=["extension", "lyapunov"], default="extension")
        experiment_cmd.add_argument("--epsilon", type=float, default=0.1, help="Orbit radius for rps")
        experiment_cmd.add_argument("--points", type=int, default=257, help="Quadrature points for rps")
        experiment_cmd.add_argument("--actions", type=int, default=2, help="Actions for meanbased")
        experiment_cmd.add_argument("--alpha", type=float, default=0.5, help="Step exponent for meanbased")
        experiment_cmd.add_argument("--C", type=float, default=1.0, dest="step_scale", help="Step scale for meanbased")
        return experiment_cmd

    @staticmethod
    def _add_global_arguments(parser: TwoStepParser) -> None:
        parser.add_global_argument("--json", action="store_true", dest="json_output", help="Print results as JSON")
        parser.add_global_argument("--no-color", action="store_true", dest="no_color", help="Disable colored output")
        parser.add_global_argument("--verbose", "-v", action="store_true", dest="verbose", help="Debug logging")
        parser.add_global_argument(
            "--output-dir", "-o", type=Path, default=None, dest="output_dir", metavar="DIR", help="Artifact directory"
        )
        parser.add_global_argument("--seed", type=int, default=None, help=f"Random seed (default: {DEFAULT_SEED})")
        parser.add_global_argument(
            "--tolerance", type=float, default=None, help=f"Verification tolerance (default: {DEFAULT_TOLERANCE:g})"
        )
        parser.add_global_argument(
            "--jobs", "-j", type=int, default=None, help="Parallel experiment instances (default: 1)"
        )

    @staticmethod
    def _build_parser() -> TwoStepParser:
        parser = TwoStepParser(
            description="Semicoarse correlated equilibria: LPs, certificates and learning dynamics",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        Args._add_global_arguments(parser)
        Args._configure_generator_group(parser)
        Args._configure_source_group(parser)
        Args._configure_lp_group(parser)
        Args._configure_schedule_group(parser)
        Args._configure_gen_command(parser)
        Args._configure_solve_command(parser)
        Args._configure_dynamics_command(parser)
        Args._configure_certify_command(parser)
        Args._configure_experiment_command(parser)
        return parser

    @staticmethod
    def parse_args(argv: list[str]) -> "Args":
        """Parse command line arguments (argv[0] is the program name)."""
        parsed = Args._build_parser().parse_args(argv[1:])
        defaults: dict[str, Any] = {
            "target": None,
            "game": None,
            "generate": None,
            "n": 10,
            "costs": None,
            "demand": "inelastic",
            "values": None,
            "gauge": "uniform",
            "sizes": None,
            "lp_kind": "semicoarse-ext",
            "objective": "one",
            "weights": None,
            "max_cycle_len": None,
            "export_lp": None,
            "exact": False,
            "pivot_rule": "dantzig",
            "schedule": "inverse-sqrt:0.5",
            "rounds": 1000,
            "scalings": None,
            "every": 1,
            "meanbased_demo": False,
            "actions": 2,
            "alpha": 0.5,
            "step_scale": 1.0,
            "epsilon": 0.1,
            "points": 257,
            "route": "extension",
            "grid_sizes": None,
            "utility_bound": 2.0,
            "out": None,
        }
        values = {key: getattr(parsed, key, default) for key, default in defaults.items()}
        return Args(
            command=parsed.command,
            json_output=parsed.json_output,
            no_color=parsed.no_color,
            verbose=parsed.verbose,
            output_dir=parsed.output_dir,
            seed=parsed.seed,
            tolerance=parsed.tolerance,
            jobs=parsed.jobs,
            **values,
        )


class Config:
    """Application configuration with derived values."""

    @staticmethod
    def _resolve_setting(
        cli_value: T | None,
        env_name: str,
        file_config: dict[str, Any],
        file_key: str,
        default: T,
        convert: Callable[[Any], T],
    ) -> T:
        """Resolve one setting.

        Priority order:
        1. Command-line argument
        2. Environment variable
        3. Configuration file (semicoarse.yml or pyproject.toml)
        4. Default
        """
        if cli_value is not None:
            return cli_value
        env_value = os.environ.get(env_name)
        if env_value:
            return convert(env_value)
        if file_key in file_config:
            return convert(file_config[file_key])
        return default

    @staticmethod
    def _check_no_color_env() -> bool:
        """True if NO_COLOR or SEMICOARSE_NO_COLOR is set."""
        if os.environ.get("NO_COLOR"):
            return True
        env_no_color = os.environ.get("SEMICOARSE_NO_COLOR")
        return bool(env_no_color and env_no_color.lower() in ("1", "true", "yes"))

    @staticmethod
    def _resolve_no_color(args_no_color: bool, file_config: dict[str, Any]) -> bool:
        if args_no_color:
            return True
        if Config._check_no_color_env():
            return True
        return bool(file_config.get("no-color", False))

    def __init__(self, argv: list[str]) -> None:
        """Initialize configuration from command-line arguments.

        Raises:
            ValueError: An environment or config-file value does not convert
        """
        self.args = Args.parse_args(argv)

        config_file = get_config_file()
        file_config = config_file.load_config() if config_file else {}

        no_color = self._resolve_no_color(self.args.no_color, file_config)
        self.colorize = sys.stdout.isatty() and not no_color

        self.output_dir = self._resolve_setting(
            self.args.output_dir, "SEMICOARSE_OUTPUT_DIR", file_config, "output-dir", Path.cwd(), Path
        ).resolve()
        self.tolerance = self._resolve_setting(
            self.args.tolerance, "SEMICOARSE_TOLERANCE", file_config, "tolerance", DEFAULT_TOLERANCE, float
        )
        jobs = self._resolve_setting(self.args.jobs, "SEMICOARSE_JOBS", file_config, "jobs", DEFAULT_JOBS, int)
        self.jobs = max(1, jobs)
        self.seed = self._resolve_setting(self.args.seed, "SEMICOARSE_SEED", file_config, "seed", DEFAULT_SEED, int)

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON of everything that determines a run's results."""
        settings = asdict(self.args)
        for key in ("json_output", "no_color", "verbose", "output_dir", "out", "jobs", "export_lp"):
            settings.pop(key, None)
        settings.update(seed=self.seed, tolerance=self.tolerance)
        canonical = json.dumps(settings, sort_keys=True, default=str, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def artifact_path(self, name: str, override: Path | None = None) -> Path:
        """Path of an output artifact, creating the output directory."""
        if override is not None:
            override.parent.mkdir(parents=True, exist_ok=True)
            return override
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name
