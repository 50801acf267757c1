"""Command-line entry point: `python -m rodeo_schedules <command> ...`."""

import argparse
import logging
import math
import sys
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from rodeo_schedules.bounds import (
    PartialSpectralInfo,
    bound_report,
    exact_SE_from_table,
    monotone_envelope,
)
from rodeo_schedules.config.config_loader import ConfigLoader, ConfigurationError, RunConfig
from rodeo_schedules.core import Schedule, success_probability
from rodeo_schedules.exceptions import DegenerateBranchError, DomainError, NumericError, UsageError
from rodeo_schedules.qsim import random_state, trajectory_success_rate
from rodeo_schedules.rra import (
    HalfNormalTimeDistribution,
    Statistic,
    closed_form_statistics,
    monte_carlo_statistics,
    rra_mean_total,
    sample_schedule,
    separatrix_fit_for,
    single_run_trace,
)
from rodeo_schedules.superiter import (
    DEFAULT_LEADING_TIME,
    SuperSchedule,
    max_valid_energy,
    rra_advantage,
    super_profile,
    super_suppression,
)
from rodeo_schedules.templates import records
from rodeo_schedules.utils.io_converters import (
    read_json,
    read_spectrum,
    state_from_json,
    super_schedule_to_json,
    to_json_text,
    write_records,
    write_text,
)
from rodeo_schedules.utils.rng import RngStream
from rodeo_schedules.verification import VerificationSuite, spectrum_of
from rodeo_schedules.wam import rra_comparison, wam_optimize, wam_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

DEFAULT_SIMULATE_TRIALS = 100_000
DEFAULT_SIMULATE_SCHEDULE = (0.9494, 0.6638, 0.8090)
SUPER_GRID_STEP = 0.01


def parse_grid(text: str) -> np.ndarray:
    """'a:b:step' (inclusive), 'a,b,c' or a single number."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("need stop >= start and a positive step")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(count)
        return np.asarray([float(p) for p in text.split(",")])
    except ValueError as e:
        raise UsageError(f"Invalid grid {text!r}: {e}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--config", dest="config_file", help="JSON or YAML file mirroring the flags")
    common.add_argument("--progress", action="store_true", help="show progress bars")
    common.add_argument("--log-level", dest="log_level", help="logging level")

    parser = argparse.ArgumentParser(
        prog="rodeo_schedules",
        description="Design and analyse rodeo algorithm schedules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wam", parents=[common], argument_default=argparse.SUPPRESS, help="Whac-a-Mole optimized super iteration table")
    p.add_argument("--cycles", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--points-per-unit", dest="points_per_unit", type=int)

    p = sub.add_parser("rra", parents=[common], argument_default=argparse.SUPPRESS, help="random schedule statistics")
    p.add_argument("--zeta", help="grid a:b:step, list a,b,c or single value")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--separatrix", action="store_true")
    p.add_argument("--single-run", dest="single_run", action="store_true")

    p = sub.add_parser("super", parents=[common], argument_default=argparse.SUPPRESS, help="single super iteration against random schedules")
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--emax", type=int, help="report the valid energy range at this depth")

    p = sub.add_parser("bound", parents=[common], argument_default=argparse.SUPPRESS, help="monotone envelope and partial-information bounds")
    p.add_argument("--cycles", type=int, help="optimizer cycles; the last row supplies the schedule")
    p.add_argument("--f", type=float)
    p.add_argument("--x0", type=float)
    p.add_argument("--envelope-x-max", dest="envelope_x_max", type=float)
    p.add_argument("--spectrum")
    p.add_argument("--threshold", type=float)
    p.add_argument("--points-per-unit", dest="points_per_unit", type=int)

    p = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS, help="trajectory sampling against the closed form")
    p.add_argument("--state", help="PhysicalState JSON; a random 4-dim state when omitted")
    p.add_argument("--schedule", type=float, nargs="+")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS, help="oracle and golden checks")
    p.add_argument("--only", choices=["qsim", "wam", "rra", "super", "bounds"])
    p.add_argument("--golden")
    p.add_argument("--points-per-unit", dest="points_per_unit", type=int)
    return parser


def emit(config: RunConfig, rows, columns, fmt: Optional[str] = None) -> None:
    write_records(rows, columns, config.out, fmt or config.format, float_format=config.float_format)


def resolve_config(args: argparse.Namespace, loader: ConfigLoader) -> RunConfig:
    """defaults < config.yml < --config file < explicit flags."""
    numerics = loader.load_numerics_config()
    output = loader.load_output_config()

    merged: Dict[str, Any] = {
        "format": output.format,
        "seed": loader.default_seed(),
        "depth": numerics.super_depth,
        "points_per_unit": numerics.points_per_unit,
        "refine_candidates": numerics.refine_candidates,
        "envelope_x_max": numerics.envelope_x_max,
        "block_size": numerics.mc_block_size,
        "golden_tolerance": numerics.golden_tolerance,
        "float_format": output.float_format,
    }
    if args.command == "bound":
        merged["cycles"] = 3

    flags = dict(vars(args))
    flags.pop("log_level", None)
    config_file = flags.pop("config_file", None)
    if config_file:
        merged.update(loader.load_run_file(config_file))
    merged.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig(**merged)


def cmd_wam(config: RunConfig) -> int:
    state = wam_optimize(
        config.cycles,
        depth=config.depth,
        points_per_unit=config.points_per_unit,
        candidates=config.refine_candidates,
    )
    rows = wam_table(state)
    if config.format == "json":
        payload = []
        for row in rows:
            record = records.get_wam_json(row)
            record["rra_ratio"] = rra_comparison(row)
            record["super_schedule"] = super_schedule_to_json(SuperSchedule.from_bases(row.times, config.depth))
            payload.append(record)
        write_text(to_json_text(payload), config.out)
    else:
        max_n = max(row.n for row in rows)
        emit(config, [records.get_wam_row(row, max_n) for row in rows], records.get_wam_columns(max_n), fmt="csv")
    return EXIT_OK


def cmd_rra(config: RunConfig) -> int:
    if config.separatrix:
        fits = [separatrix_fit_for(s) for s in (Statistic.ARITHMETIC, Statistic.GEOMETRIC, Statistic.RMS)]
        emit(config, [records.get_separatrix_row(f) for f in fits], records.SEPARATRIX_COLUMNS)
        return EXIT_OK

    if config.zeta is None:
        raise UsageError("rra needs --zeta unless --separatrix is given")
    grid = parse_grid(config.zeta)

    if config.single_run:
        n = config.n[0]
        schedule = sample_schedule(n, HalfNormalTimeDistribution(1.0), RngStream(config.seed))
        trace = single_run_trace(schedule, grid)
        logger.info("Single run n=%d: fraction below %.3g is %.4f", n, trace.threshold, trace.fraction_below)
        rows = [
            {"zeta": z, "s": s, "below_threshold": bool(s < trace.threshold)}
            for z, s in zip(trace.zeta.tolist(), trace.suppression.tolist())
        ]
        emit(config, rows, records.SINGLE_RUN_COLUMNS)
        return EXIT_OK

    columns = list(records.RRA_COLUMNS)
    if config.trials > 0:
        columns += records.RRA_MONTE_CARLO_COLUMNS
    rows = []
    for n in config.n:
        for zeta in grid.tolist():
            mc = None
            if config.trials > 0:
                mc = monte_carlo_statistics(
                    zeta, n, config.trials, seed=config.seed, workers=config.workers,
                    progress=config.progress, block_size=config.block_size,
                )
            rows.append(records.get_rra_row(closed_form_statistics(zeta, n), mc))
    emit(config, rows, columns)
    return EXIT_OK


def cmd_super(config: RunConfig) -> int:
    if config.emax is not None:
        payload = {
            "depth": config.emax,
            "leading_time": DEFAULT_LEADING_TIME,
            "max_valid_energy": max_valid_energy(config.emax),
        }
        write_text(to_json_text(payload), config.out)
        return EXIT_OK

    count = int(math.floor((config.x_max - 1.0) / SUPER_GRID_STEP + 1e-9)) + 1
    x = 1.0 + SUPER_GRID_STEP * np.arange(count)
    sup = np.asarray(super_suppression(x))
    mean = np.asarray(rra_mean_total(x, 3))
    ratio = rra_advantage(x, n=3)
    rows = [
        {"x": a, "super": b, "rra_mean_n3": c, "ratio": d}
        for a, b, c, d in zip(x.tolist(), sup.tolist(), mean.tolist(), ratio.tolist())
    ]
    emit(config, rows, records.SUPER_COLUMNS)
    return EXIT_OK


def cmd_bound(config: RunConfig) -> int:
    state = wam_optimize(config.cycles, depth=config.depth, points_per_unit=config.points_per_unit,
                         candidates=config.refine_candidates)
    table = wam_table(state)

    if config.spectrum is not None:
        if config.threshold is None:
            raise UsageError("--spectrum needs --threshold")
        result = exact_SE_from_table(read_spectrum(config.spectrum), table, config.threshold)
        payload = {
            "found": result.found,
            "n": result.row.n,
            "s_e": result.s_e,
            "threshold": result.threshold,
            "total_time": result.row.total_time,
            "times": list(result.row.times),
        }
        write_text(to_json_text(payload), config.out)
        return EXIT_OK

    row = table[-1]
    envelope = monotone_envelope(super_profile(row.times), 1.0, config.envelope_x_max, config.points_per_unit)
    if config.f is not None or config.x0 is not None:
        if config.f is None or config.x0 is None:
            raise UsageError("Partial-information bounds need both --f and --x0")
        report = bound_report(envelope, PartialSpectralInfo(config.f, config.x0), f"wam-n{row.n}")
        write_text(to_json_text(report), config.out)
        return EXIT_OK

    rows = [{"x": x, "s_ub": s} for x, s in envelope.breakpoints]
    emit(config, rows, records.ENVELOPE_COLUMNS)
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    if config.state is not None:
        state = state_from_json(read_json(config.state))
    else:
        state = random_state(4, RngStream(config.seed, 0))
    schedule = Schedule(tuple(config.schedule or DEFAULT_SIMULATE_SCHEDULE))
    trials = config.trials or DEFAULT_SIMULATE_TRIALS

    rate, stderr = trajectory_success_rate(state, schedule, trials, seed=config.seed)
    closed = success_probability(spectrum_of(state), schedule)
    z_score = (rate - closed) / stderr if stderr > 0 else 0.0
    row = {"trials": trials, "success_rate": rate, "stderr": stderr, "closed_form": closed, "z_score": z_score}
    emit(config, [row], records.SIMULATE_COLUMNS)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    suite = VerificationSuite(
        seed=config.seed,
        golden_path=config.golden,
        points_per_unit=config.points_per_unit,
        refine_candidates=config.refine_candidates,
        envelope_x_max=config.envelope_x_max,
        q_tolerance=config.golden_tolerance,
    )
    try:
        suite.run(only=config.only)
    except ConfigurationError as e:
        sys.stderr.write(f"[FAIL] golden: {e}\n")
        return EXIT_CHECK_FAILED
    write_text(suite.report(), config.out)
    return EXIT_OK if suite.passed else EXIT_CHECK_FAILED


COMMANDS = {
    "wam": cmd_wam,
    "rra": cmd_rra,
    "super": cmd_super,
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    loader = ConfigLoader()
    try:
        output = loader.load_output_config()
        level = getattr(args, "log_level", None) or output.log_level
        logging.basicConfig(level=level.upper(), format="%(levelname)s %(name)s: %(message)s")
        config = resolve_config(args, loader)
        logging.info('%s processed a request.', config.command)
        return COMMANDS[config.command](config)
    except (UsageError, DomainError, ConfigurationError, ValidationError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except (NumericError, DegenerateBranchError) as e:
        sys.stderr.write(f"numeric error: {e}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
