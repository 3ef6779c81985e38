#!/usr/bin/env python3
"""
Semicoarse correlated equilibria toolkit.

Commands:
    gen         Build a game (Bertrand, first-price, bad game, rock-paper-scissors,
                matching pennies, random) and write its JSON document
    solve       Maximize an objective over the CCE, CE, semicoarse or weighted
                semicoarse polytope, or solve the dual Lyapunov program
    dynamics    Run projected gradient ascent, write the trajectory and the
                regret against every canonical semicoarse transform
    certify     Build the explicit Bertrand dual certificate, verify it at every
                price vector and evaluate the convergence bound
    experiment  Reproduce fig1, fig2, the mean-based counterexample or the
                rock-paper-scissors cyclic-regret table

Settings:
    Every setting resolves CLI flag > environment (SEMICOARSE_*) > semicoarse.yml
    or [tool.semicoarse] in pyproject.toml > default. Artifacts go to the output
    directory and carry a fingerprint of the resolved configuration.

Exit codes:
    0 ok, 1 usage or failed verification, 2 infeasible, 3 unbounded,
    4 precondition failure, 5 solver stall
"""
# ruff: noqa: T201

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial
import logging
import sys
from typing import TypeVar

from dotenv import load_dotenv
import numpy as np

from semicoarse.bertrand import (
    FigureResult,
    build_dual_certificate,
    certificate_to_dict,
    fig1_experiment,
    fig2_experiment,
    time_avg_bound,
    verify_pointwise,
)
from semicoarse.config import Config
from semicoarse.dynamics import (
    StepSchedule,
    canonical_regret_report,
    mean_based_counterexample,
    pga_run,
    random_interior_profile,
    rps_regret_table,
    scaled_pga_run,
    trajectory_rows,
)
from semicoarse.equilibria import (
    EquilibriumLpBundle,
    build_cce_lp,
    build_ce_lp,
    build_dual_lyapunov_lp,
    build_semicoarse_enumerated_lp,
    build_semicoarse_extension_lp,
    build_weighted_semicoarse_lp,
    constant_objective,
    indicator_objective,
    not_nash_objective,
    solve_bundle,
    squared_distance_objective,
    squared_value_objective,
)
from semicoarse.errors import SemicoarseError, UsageError
from semicoarse.game import FloatArray, NormalFormGame, PriceGrid, game_to_dict, time_avg_outcome_distribution
from semicoarse.generators import (
    demand_samples,
    make_bad_game,
    make_bertrand,
    make_first_price,
    make_matching_pennies,
    make_random_game,
    make_rps_embedded,
)
from semicoarse.lp import SolverOptions
from semicoarse.lp_format import export_lp_text
from semicoarse.output import Colors, Outputter, create_outputter, write_csv, write_json
from semicoarse.validator import load_validated_game


logger = logging.getLogger(__name__)

R = TypeVar("R")

DEFAULT_FIGURE_GRID = 10
RPS_TRIPLET = (0, 1, 2)


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _parse_vectors(spec: str, convert: Callable[[str], R]) -> list[list[R]]:
    """Parse ``"1,2;1,1,1"`` into one vector per player."""
    try:
        return [[convert(part) for part in player.split(",") if part.strip()] for player in spec.split(";")]
    except ValueError as e:
        raise UsageError(f"bad per-player vector spec {spec!r}: {e}") from e


def _generate_game(kind: str, config: Config) -> NormalFormGame:
    """Build a game from the generator options."""
    args = config.args
    n = args.n
    if kind == "bertrand":
        return make_bertrand(n, args.costs or [0, 0], demand_samples(args.demand, n))
    if kind == "firstprice":
        grid = PriceGrid.square(n) if args.gauge == "square" else PriceGrid.uniform(n)
        return make_first_price(n, args.values or [n, n], grid)
    if kind == "badgame":
        return make_bad_game()
    if kind == "pennies":
        return make_matching_pennies()
    if kind == "rps":
        sizes = args.sizes or [3, 3]
        return make_rps_embedded(len(sizes), sizes, 0, 1, RPS_TRIPLET, RPS_TRIPLET)
    if kind == "random":
        return make_random_game(args.sizes or [3, 3], seed=config.seed)
    raise UsageError(f"unknown generator {kind!r}")


def _load_game(config: Config, outputter: Outputter) -> NormalFormGame:
    """Game from --game PATH or --generate KIND."""
    args = config.args
    if args.game is not None and args.generate is not None:
        raise UsageError("use either --game or --generate, not both")
    if args.game is not None:
        return load_validated_game(args.game, outputter)
    if args.generate is not None:
        return _generate_game(args.generate, config)
    raise UsageError("a game is required: pass --game PATH or --generate KIND")


def _objective_from_spec(game: NormalFormGame, spec: str) -> FloatArray:
    """Objective tensor from ``one``, ``not-nash``, ``sq-value``, ``sq-distance:X,..`` or ``indicator:P:A``."""
    name, _, arg = spec.partition(":")
    if name == "one":
        return constant_objective(game)
    if name == "not-nash":
        return not_nash_objective(game)
    if name == "sq-value":
        return squared_value_objective(game)
    if name == "sq-distance":
        try:
            target = [float(part) for part in arg.split(",")]
        except ValueError as e:
            raise UsageError(f"bad target point in {spec!r}") from e
        return squared_distance_objective(game, target)
    if name == "indicator":
        player_text, _, action = arg.partition(":")
        if not player_text.isdigit() or not action:
            raise UsageError(f"indicator objective needs indicator:PLAYER:ACTION, got {spec!r}")
        player = int(player_text) - 1
        if not 0 <= player < game.num_players:
            raise UsageError(f"player {player_text} out of range")
        chosen: int | str = action if action in game.labels(player) or not action.isdigit() else int(action)
        return indicator_objective(game, player, chosen)
    raise UsageError(f"unknown objective {spec!r} (one, not-nash, sq-value, sq-distance:X,.., indicator:P:A)")


def _solver_options(config: Config) -> SolverOptions:
    return SolverOptions(exact=config.args.exact, pivot_rule=config.args.pivot_rule)


def _build_bundle(game: NormalFormGame, d: FloatArray, config: Config) -> EquilibriumLpBundle:
    args = config.args
    if args.lp_kind == "cce":
        return build_cce_lp(game, d)
    if args.lp_kind == "ce":
        return build_ce_lp(game, d)
    if args.lp_kind == "semicoarse":
        return build_semicoarse_enumerated_lp(game, d, max_cycle_len=args.max_cycle_len)
    if args.lp_kind == "semicoarse-ext":
        return build_semicoarse_extension_lp(game, d)
    if args.lp_kind == "lyapunov":
        return build_dual_lyapunov_lp(game, d)
    if args.weights is None:
        raise UsageError("--kind weighted needs --weights")
    return build_weighted_semicoarse_lp(game, _parse_vectors(args.weights, int), d, args.max_cycle_len)


def _map_instances(function: Callable[[int], R], instances: Sequence[int], jobs: int) -> list[R]:
    """Run independent instances, in worker processes when jobs > 1."""
    if jobs <= 1 or len(instances) <= 1:
        return [function(instance) for instance in instances]
    with ProcessPoolExecutor(max_workers=min(jobs, len(instances))) as executor:
        return list(executor.map(function, instances))


def _handle_gen_command(config: Config, outputter: Outputter) -> int:
    kind = config.args.target or ""
    game = _generate_game(kind, config)
    path = config.artifact_path(f"{kind}.json", config.args.out)
    write_json(path, {**game_to_dict(game), "fingerprint": config.fingerprint()})
    outputter.output_result(
        "game",
        {"path": str(path), "players": game.num_players, "shape": list(game.shape), "kind": kind},
    )
    return 0


def _handle_solve_command(config: Config, outputter: Outputter) -> int:
    game = _load_game(config, outputter)
    d = _objective_from_spec(game, config.args.objective)
    bundle = _build_bundle(game, d, config)
    lp = bundle.lp
    logger.debug("built %s program: %d rows, %d columns", bundle.kind.value, lp.num_rows, lp.num_variables)
    if config.args.export_lp is not None:
        config.args.export_lp.parent.mkdir(parents=True, exist_ok=True)
        config.args.export_lp.write_text(export_lp_text(bundle.lp), encoding="utf-8")
    result = solve_bundle(bundle, _solver_options(config))
    payload = {**result.to_dict(game), "objective": config.args.objective, "fingerprint": config.fingerprint()}
    path = write_json(config.artifact_path("solution.json", config.args.out), payload)
    support = result.support(game)
    outputter.output_result(
        "solution",
        {
            "kind": bundle.kind.value,
            "value": result.value,
            "support": [f"{label}: {p:.6g}" for label, p in support[:10]],
            "pivots": result.solution.pivots,
            "path": str(path),
        },
    )
    return 0


def _handle_meanbased_demo(config: Config, outputter: Outputter) -> int:
    args = config.args
    report = mean_based_counterexample(args.actions, args.step_scale, args.alpha, args.rounds)
    payload = {**report.to_dict(), "fingerprint": config.fingerprint()}
    write_json(config.artifact_path("meanbased.json"), payload)
    outputter.output_result("mean-based counterexample", report.to_dict())
    return 0


def _handle_dynamics_command(config: Config, outputter: Outputter) -> int:
    args = config.args
    if args.meanbased_demo:
        return _handle_meanbased_demo(config, outputter)
    game = _load_game(config, outputter)
    schedule = StepSchedule.parse(args.schedule)
    init = random_interior_profile(game, config.seed)
    if args.scalings is not None:
        scalings = [np.array(vector) for vector in _parse_vectors(args.scalings, float)]
        trajectory = scaled_pga_run(game, scalings, schedule, args.rounds, init)
    else:
        trajectory = pga_run(game, init, schedule, args.rounds)
    header = ("t", "player", "action", "probability")
    write_csv(config.artifact_path("trajectory.csv"), header, trajectory_rows(trajectory, args.every))
    report = canonical_regret_report(trajectory, args.max_cycle_len)
    sigma = time_avg_outcome_distribution(trajectory)
    payload = {
        "rounds": args.rounds,
        "schedule": schedule.describe(),
        "seed": config.seed,
        "regret": [entry.to_dict() for entry in report],
        "max_canonical_regret": max(entry.worst_regret for entry in report),
        "time_average_distribution": sigma.tolist(),
        "meta": trajectory.meta,
        "fingerprint": config.fingerprint(),
    }
    write_json(config.artifact_path("regret.json"), payload)
    outputter.output_result(
        "dynamics",
        {
            "rounds": args.rounds,
            "schedule": schedule.describe(),
            **{f"player {entry.player + 1} worst": f"{entry.worst_label} {entry.worst_regret:.6g}" for entry in report},
            **{f"player {entry.player + 1} external": entry.external for entry in report},
        },
    )
    return 0


def _certificate_instance(config: Config) -> tuple[NormalFormGame, list[int], FloatArray]:
    """Bertrand game, costs and demand; first-price values map to costs ``n - v`` with unit demand."""
    args = config.args
    n = args.n
    if args.target == "firstprice":
        if args.gauge != "uniform":
            raise UsageError("certificates exist for the uniform bid grid only")
        costs = [n - v for v in (args.values or [n, n])]
        demand = demand_samples("inelastic", n)
    else:
        costs = list(args.costs or [0, 0])
        demand = demand_samples(args.demand, n)
    return make_bertrand(n, costs, demand), costs, demand


def _handle_certify_command(config: Config, outputter: Outputter) -> int:
    args = config.args
    game, costs, demand = _certificate_instance(config)
    certificate = build_dual_certificate(args.n, costs, demand)
    report = verify_pointwise(game, certificate, tolerance=config.tolerance)
    bound = time_avg_bound(certificate, StepSchedule.parse(args.schedule), args.rounds, args.utility_bound)
    payload = {
        **certificate_to_dict(certificate),
        "bound": bound.to_dict(),
        "verification": report.to_dict(),
        "fingerprint": config.fingerprint(),
    }
    write_json(config.artifact_path("certificate.json"), payload)
    outputter.output_result(
        "certificate",
        {
            "epsilon": list(certificate.epsilon),
            "delta": list(certificate.delta),
            "ell_star": certificate.ell_star,
            "scale": certificate.scale,
            "time-average bound": bound.bound,
        },
    )
    outputter.output_report(report)
    return 0 if report.passed else 1


def _write_figure(config: Config, result: FigureResult) -> None:
    stem = f"{result.name}_n{result.n}"
    header = ("p1", "p2", "sigma")
    write_csv(config.artifact_path(f"{stem}_{result.left_label}.csv"), header, result.heatmap_rows("left"))
    write_csv(config.artifact_path(f"{stem}_{result.right_label}.csv"), header, result.heatmap_rows("right"))
    write_json(config.artifact_path(f"{stem}.json"), {**result.to_dict(), "fingerprint": config.fingerprint()})


def _run_figure(config: Config, outputter: Outputter) -> int:
    args = config.args
    experiment = fig1_experiment if args.target == "fig1" else fig2_experiment
    function = partial(experiment, options=_solver_options(config), route=args.route)
    for result in _map_instances(function, args.grid_sizes or [DEFAULT_FIGURE_GRID], config.jobs):
        _write_figure(config, result)
        outputter.output_result(
            f"{result.name} n={result.n}",
            {result.left_label: result.left_value, result.right_label: result.right_value, **result.meta},
        )
    return 0


def _handle_experiment_command(config: Config, outputter: Outputter) -> int:
    args = config.args
    if args.target in ("fig1", "fig2"):
        return _run_figure(config, outputter)
    if args.target == "meanbased":
        return _handle_meanbased_demo(config, outputter)
    rows = rps_regret_table(args.epsilon, args.points)
    write_csv(
        config.artifact_path("rps_regret.csv"),
        ("transform", "numeric", "closed_form"),
        [(row["transform"], row["numeric"], row["closed_form"]) for row in rows],
    )
    payload = {"epsilon": args.epsilon, "rows": rows, "fingerprint": config.fingerprint()}
    write_json(config.artifact_path("rps_regret.json"), payload)
    outputter.output_result("rps cyclic regret", {row["transform"]: row["closed_form"] for row in rows})
    return 0


def _handle_command(config: Config, outputter: Outputter) -> int:
    command_handler = {
        "gen": _handle_gen_command,
        "solve": _handle_solve_command,
        "dynamics": _handle_dynamics_command,
        "certify": _handle_certify_command,
        "experiment": _handle_experiment_command,
    }
    if config.args.command not in command_handler:
        outputter.output_error(f"Invalid command '{config.args.command}'")
        return 1
    try:
        return command_handler[config.args.command](config, outputter)
    except SemicoarseError as e:
        outputter.output_error(str(e))
        return e.exit_code


def main(argv: list[str] | None = None) -> int:
    """Main entry point.

    Args:
        argv: List of command line arguments (defaults to sys.argv if None)

    Returns:
        int: Exit code
    """
    # existing environment variables win over .env
    load_dotenv()

    try:
        config = Config(argv or sys.argv)
    except ValueError as e:
        print(f"Error: bad configuration value: {e}", file=sys.stderr)
        return 1

    _configure_logging(config.args.verbose)

    outputter: Outputter = create_outputter(config)

    if not config.colorize or config.args.json_output:
        Colors.disable()

    return _handle_command(config, outputter)


if __name__ == "__main__":
    sys.exit(main(sys.argv))
