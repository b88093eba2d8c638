"""Command-line front end: ingestion -> estimation -> enumeration ->
solving -> reporting, plus synthetic data, sensitivity sweeps and stage
timing.

Exit codes: 0 success, 2 input error, 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimation import (
    DatasetError,
    EstimationConfig,
    build_utility_model,
    load_nvd_scores,
    load_scan_dataset,
    tool_universe,
    vuln_universe,
)
from .game import (
    GameInstance,
    GameValidationError,
    TradeoffParams,
    UtilityModel,
    build_game,
)
from .lp import LpNumericsError
from .milp import MilpEmitConfig, emit_milp
from .schedules import count_schedules, enumerate_schedules, prune_dominated
from .solver import (
    SolverInvariantError,
    StrategyReport,
    standard_reports,
    deterministic_best_response,
    solve_sse,
    sse_report,
)
from .synth import SyntheticSpec, generate_datasets

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3

GAMMA_A_MAX = 2.0
GAMMA_D_MAX = 10.0
DEFAULT_GAMMA_A_SWEEP = (0.0, 0.25, 0.5, 0.75, 1.0, 2.0)
DEFAULT_GAMMA_D_SWEEP = (0.0, 1.0, 2.0, 5.0, 8.0, 10.0)

REPORT_COLUMNS = [
    "strategy", "budget", "gamma_a", "gamma_d", "value_d", "value_a",
    "target", "support", "stage_load_s", "stage_gen_s", "stage_solve_s",
]
BENCHMARK_COLUMNS = [
    "budget", "num_schedules", "num_vulns", "strategy", "value_d", "value_a",
    "target", "support", "stage_load_s", "stage_gen_s", "stage_solve_s",
]


class InputError(ValueError):
    """Bad configuration or dataset combination (exit code 2)."""


@dataclass
class RunConfig:
    scans: Path | None = None
    benign: Path | None = None
    nvd: Path | None = None
    game: Path | None = None
    budget: int = 1
    gamma_a: float = 1.0
    gamma_d: float = 2.0
    pseudocount: int = 2
    prune: bool = False
    baselines: tuple[str, ...] = ("d_br", "uall", "ba", "um", "e1", "em")
    m: int | None = None
    out: Path = Path("out")
    seed: int = 0

    def validate(self) -> None:
        if self.budget < 1:
            raise InputError(f"budget must be >= 1, got {self.budget}")
        if not 0.0 <= self.gamma_a <= GAMMA_A_MAX:
            raise InputError(f"gamma_a must lie in [0, {GAMMA_A_MAX}], got {self.gamma_a}")
        if not 0.0 <= self.gamma_d <= GAMMA_D_MAX:
            raise InputError(f"gamma_d must lie in [0, {GAMMA_D_MAX}], got {self.gamma_d}")
        if self.pseudocount < 0:
            raise InputError(f"pseudocount must be >= 0, got {self.pseudocount}")
        if self.m is not None and self.m < 1:
            raise InputError(f"m must be >= 1, got {self.m}")


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}
_PATH_FIELDS = {"scans", "benign", "nvd", "game", "out"}


def _config_from_args(args) -> RunConfig:
    values: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InputError(f"config {config_path} must hold a JSON object")
        unknown = set(loaded) - _CONFIG_FIELDS
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for name in _CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if "baselines" in values and not isinstance(values["baselines"], tuple):
        values["baselines"] = tuple(values["baselines"])
    for name in _PATH_FIELDS & set(values):
        if values[name] is not None:
            values[name] = Path(values[name])
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


@dataclass
class LoadedInstance:
    game: GameInstance
    model: UtilityModel | None
    seconds: float


def _load_payoff_game(path: Path) -> GameInstance:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read game file {path}: {exc}") from exc
    for key in ("u_d", "u_a"):
        if key not in obj:
            raise InputError(f"game file {path} is missing {key!r}")
    return GameInstance.from_payoffs(
        obj["u_d"],
        obj["u_a"],
        action_names=obj.get("actions"),
        vuln_names=obj.get("vulns"),
        vuln_prior=obj.get("vuln_prior"),
    )


def _load_instance(cfg: RunConfig) -> LoadedInstance:
    t0 = time.perf_counter()
    if cfg.game is not None:
        game = _load_payoff_game(cfg.game)
        return LoadedInstance(game, None, time.perf_counter() - t0)
    missing = [n for n in ("scans", "benign", "nvd") if getattr(cfg, n) is None]
    if missing:
        raise InputError(
            f"either --game or all dataset paths are required; missing {missing}"
        )
    records = load_scan_dataset(cfg.scans)
    benign = load_scan_dataset(cfg.benign)
    scores = load_nvd_scores(cfg.nvd)
    tools = tool_universe(records)
    vulns = vuln_universe(records)
    if not vulns:
        raise InputError(f"{cfg.scans}: no record carries a CVE tag")
    if cfg.budget > len(tools):
        raise InputError(f"budget {cfg.budget} exceeds the {len(tools)}-tool universe")
    schedule_set = enumerate_schedules(tools, cfg.budget)
    model = build_utility_model(
        records, benign, scores, schedule_set.schedules, tools, vulns,
        TradeoffParams(cfg.gamma_a, cfg.gamma_d), EstimationConfig(cfg.pseudocount),
    )
    game = build_game(model, schedule_set.schedules, vulns)
    return LoadedInstance(game, model, time.perf_counter() - t0)


def _apply_pruning(cfg: RunConfig, loaded: LoadedInstance) -> LoadedInstance:
    # Pruning can worsen the committed outcome (it may push the attacker
    # onto a more damaging target), so it never runs implicitly.
    if not cfg.prune:
        return loaded
    result = prune_dominated(loaded.game)
    logger.info("pruning kept %d of %d schedules", len(result.kept),
                loaded.game.num_schedules)
    game = loaded.game.restrict_schedules(result.kept)
    model = None
    if loaded.model is not None:
        keep = list(result.kept)
        model = dataclasses.replace(
            loaded.model,
            detect_prob=loaded.model.detect_prob[keep, :],
            cost_d=loaded.model.cost_d[keep],
        )
    return LoadedInstance(game, model, loaded.seconds)


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _report_row(report: StrategyReport, game: GameInstance, cfg: RunConfig,
                load_s: float, gen_s: float, solve_s: float) -> dict:
    return {
        "strategy": report.name,
        "budget": cfg.budget,
        "gamma_a": _fmt(cfg.gamma_a),
        "gamma_d": _fmt(cfg.gamma_d),
        "value_d": _fmt(report.value_d),
        "value_a": _fmt(report.value_a),
        "target": game.vulns[report.induced_attacker].cve,
        "support": report.defender.support_size,
        "stage_load_s": f"{load_s:.6f}",
        "stage_gen_s": f"{gen_s:.6f}",
        "stage_solve_s": f"{solve_s:.6f}",
    }


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def _write_strategy(path: Path, report: StrategyReport, game: GameInstance) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schedule", "probability"])
        for s in np.flatnonzero(report.defender.probs > 1e-9):
            writer.writerow([game.schedules[s].name, _fmt(report.defender.probs[s])])


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_generate(args) -> int:
    spec = SyntheticSpec(
        num_tools=args.tools, num_vulns=args.vulns, budget=args.budget,
        num_files=args.files, num_benign=args.benign_files, seed=args.seed,
    )
    scan, benign, nvd = generate_datasets(spec, args.out)
    print(f"wrote {scan}\nwrote {benign}\nwrote {nvd}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    loaded = _apply_pruning(cfg, _load_instance(cfg))
    game = loaded.game
    cfg.out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    summary = emit_milp(game, MilpEmitConfig(), cfg.out / "game.lp")
    gen_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    solution = solve_sse(game)
    solve_s = time.perf_counter() - t0

    report = StrategyReport("r_br", solution.defender, solution.attacker_target,
                            solution.value_d, solution.value_a)
    _write_strategy(cfg.out / "strategy.csv", report, game)
    _write_csv(cfg.out / "report.csv", REPORT_COLUMNS,
               [_report_row(report, game, cfg, loaded.seconds, gen_s, solve_s)])
    print(
        f"r_br value_d={_fmt(solution.value_d)} "
        f"target={game.vulns[solution.attacker_target].cve} "
        f"support={solution.defender.support_size} "
        f"(milp: {summary.num_vars} vars, {summary.num_constraints} rows)"
    )
    return EXIT_OK


def cmd_baselines(args) -> int:
    cfg = _config_from_args(args)
    loaded = _apply_pruning(cfg, _load_instance(cfg))
    game = loaded.game
    t0 = time.perf_counter()
    reports = standard_reports(game, loaded.model, cfg.m, cfg.baselines)
    solve_s = time.perf_counter() - t0
    rows = [_report_row(r, game, cfg, loaded.seconds, 0.0, solve_s) for r in reports]
    _write_csv(cfg.out / "report.csv", REPORT_COLUMNS, rows)
    for r in reports:
        print(f"{r.name}: value_d={_fmt(r.value_d)} "
              f"target={game.vulns[r.induced_attacker].cve}")
    return EXIT_OK


def _parse_grid(text: str, upper: float, what: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse {what} grid {text!r}") from exc
    if not values:
        raise InputError(f"{what} grid is empty")
    for v in values:
        if not 0.0 <= v <= upper:
            raise InputError(f"{what} grid value {v} outside [0, {upper}]")
    return values


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    if cfg.game is not None:
        raise InputError("sweeps need dataset inputs; a payoff-only game has no tradeoffs")
    grid_a = (_parse_grid(args.gamma_a_grid, GAMMA_A_MAX, "gamma_a")
              if args.gamma_a_grid else list(DEFAULT_GAMMA_A_SWEEP))
    grid_d = (_parse_grid(args.gamma_d_grid, GAMMA_D_MAX, "gamma_d")
              if args.gamma_d_grid else list(DEFAULT_GAMMA_D_SWEEP))
    loaded = _load_instance(cfg)
    if cfg.prune:
        raise InputError("sweeps refuse pruning: the pruned set depends on gamma_d")
    base_model = loaded.model
    rows = []
    for gamma_a in grid_a:
        for gamma_d in grid_d:
            model = dataclasses.replace(
                base_model, tradeoffs=TradeoffParams(gamma_a, gamma_d))
            game = build_game(model, loaded.game.schedules, loaded.game.vulns)
            point_cfg = dataclasses.replace(cfg, gamma_a=gamma_a, gamma_d=gamma_d)
            t0 = time.perf_counter()
            reports = standard_reports(game, model, cfg.m, cfg.baselines)
            solve_s = time.perf_counter() - t0
            rows.extend(
                _report_row(r, game, point_cfg, loaded.seconds, 0.0, solve_s)
                for r in reports
            )
    _write_csv(cfg.out / "sweep.csv", REPORT_COLUMNS, rows)
    print(f"swept {len(grid_a)}x{len(grid_d)} grid -> {len(rows)} rows")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _config_from_args(args)
    if cfg.game is not None:
        raise InputError("benchmarks need dataset inputs")
    budgets = ([int(b) for b in args.budgets.split(",")] if args.budgets
               else [cfg.budget])
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for budget in budgets:
        if budget < 1:
            raise InputError(f"budget must be >= 1, got {budget}")
        point_cfg = dataclasses.replace(cfg, budget=budget)
        loaded = _load_instance(point_cfg)
        game = loaded.game
        t0 = time.perf_counter()
        emit_milp(game, MilpEmitConfig(), cfg.out / f"game_b{budget}.lp")
        gen_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        solution = solve_sse(game)
        solve_s = time.perf_counter() - t0
        report = sse_report(game)
        row = {
            "budget": budget,
            "num_schedules": game.num_schedules,
            "num_vulns": game.num_vulns,
            "strategy": report.name,
            "value_d": _fmt(solution.value_d),
            "value_a": _fmt(solution.value_a),
            "target": game.vulns[solution.attacker_target].cve,
            "support": solution.defender.support_size,
            "stage_load_s": f"{loaded.seconds:.6f}",
            "stage_gen_s": f"{gen_s:.6f}",
            "stage_solve_s": f"{solve_s:.6f}",
        }
        rows.append(row)
        print(f"budget {budget}: {game.num_schedules} schedules, "
              f"value_d={row['value_d']}")
    _write_csv(cfg.out / "benchmark.csv", BENCHMARK_COLUMNS, rows)
    return EXIT_OK


def cmd_emit_milp(args) -> int:
    cfg = _config_from_args(args)
    loaded = _apply_pruning(cfg, _load_instance(cfg))
    cfg.out.mkdir(parents=True, exist_ok=True)
    config = MilpEmitConfig(args.big_z) if args.big_z is not None else MilpEmitConfig()
    summary = emit_milp(loaded.game, config, cfg.out / "game.lp")
    print(f"wrote {summary.path}: {summary.num_vars} variables, "
          f"{summary.num_constraints} constraints, Z={summary.big_z:g}")
    return EXIT_OK


def cmd_prune_report(args) -> int:
    cfg = _config_from_args(args)
    loaded = _load_instance(cfg)
    game = loaded.game
    result = prune_dominated(game, parallel=args.parallel)
    rows = [
        {"dominated": game.schedules[d].name, "dominator": game.schedules[w].name}
        for d, w in result.removed
    ]
    _write_csv(cfg.out / "prune.csv", ["dominated", "dominator"], rows)
    print(f"kept {len(result.kept)} of {game.num_schedules} schedules "
          f"({len(result.removed)} dominated)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring.


def _add_input_flags(sub) -> None:
    sub.add_argument("--config", type=Path, help="JSON config; flags override it")
    sub.add_argument("--scans", type=Path, help="scan dataset (JSON Lines)")
    sub.add_argument("--benign", type=Path, help="benign dataset (JSON Lines)")
    sub.add_argument("--nvd", type=Path, help="vulnerability score CSV")
    sub.add_argument("--game", type=Path, help="payoff-matrix game JSON (no datasets)")
    sub.add_argument("--budget", type=int, help="max tools per schedule")
    sub.add_argument("--gamma-a", dest="gamma_a", type=float,
                     help=f"attacker cost weight in [0, {GAMMA_A_MAX}]")
    sub.add_argument("--gamma-d", dest="gamma_d", type=float,
                     help=f"defender cost weight in [0, {GAMMA_D_MAX}]")
    sub.add_argument("--pseudocount", type=int, help="detection smoothing strength")
    sub.add_argument("--prune", action="store_const", const=True, default=None,
                     help="drop dominated schedules first (may lower the value)")
    sub.add_argument("--m", type=int, help="width of the top-m baselines")
    sub.add_argument("--seed", type=int, help="RNG seed recorded in outputs")
    sub.add_argument("--out", type=Path, help="output directory (default ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="malsched",
        description="Randomized scheduling of malware-detection tools "
                    "against a strategic attacker.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress details")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="write synthetic datasets")
    gen.add_argument("--tools", type=int, default=8)
    gen.add_argument("--vulns", type=int, default=5)
    gen.add_argument("--files", type=int, default=300)
    gen.add_argument("--benign-files", dest="benign_files", type=int, default=150)
    gen.add_argument("--budget", type=int, default=2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, default=Path("data"))
    gen.set_defaults(func=cmd_generate)

    solve = subs.add_parser("solve", help="compute the optimal randomization")
    _add_input_flags(solve)
    solve.set_defaults(func=cmd_solve)

    base = subs.add_parser("baselines", help="compare against reference strategies")
    _add_input_flags(base)
    base.set_defaults(func=cmd_baselines)

    sweep = subs.add_parser("sweep", help="grid sweep over the tradeoff weights")
    _add_input_flags(sweep)
    sweep.add_argument("--gamma-a-grid", dest="gamma_a_grid",
                       help="comma-separated gamma_a values")
    sweep.add_argument("--gamma-d-grid", dest="gamma_d_grid",
                       help="comma-separated gamma_d values")
    sweep.set_defaults(func=cmd_sweep)

    bench = subs.add_parser("benchmark", help="record per-stage wall times")
    _add_input_flags(bench)
    bench.add_argument("--budgets", help="comma-separated budgets to time")
    bench.set_defaults(func=cmd_benchmark)

    emit = subs.add_parser("emit-milp", help="write the game MILP to an LP file")
    _add_input_flags(emit)
    emit.add_argument("--big-z", dest="big_z", type=float,
                      help="best-response relaxation constant")
    emit.set_defaults(func=cmd_emit_milp)

    prune = subs.add_parser("prune-report", help="report dominated schedules")
    _add_input_flags(prune)
    prune.add_argument("--parallel", action="store_true",
                       help="use the block-parallel sweep")
    prune.set_defaults(func=cmd_prune_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (InputError, DatasetError, GameValidationError, KeyError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverInvariantError, LpNumericsError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
