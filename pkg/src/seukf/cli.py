"""Command-line front end: simulation studies, single filter runs on a
provided data file, and the benchmark experiments, all configured by one
INI file with per-flag overrides for seed, run count, and output paths.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from .bench import (
    bench_basis_compare,
    bench_filters,
    bench_k_sweep,
    default_variants,
    experiment_models,
    _filter_config,
)
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .filters import ObservationSequence, run_filter
from .models import linear_model
from .simulate import euler_maruyama, moment_study, substream


def _load(args: argparse.Namespace) -> ExperimentConfig:
    exp = load_config(args.config) if args.config else default_config()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        overrides["runs"] = args.runs
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    return dataclasses.replace(exp, **overrides) if overrides else exp


def _write_csv(path: str, header: list[str], rows) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(v)) if isinstance(v, float) else str(v) for v in row]
            )


def _cmd_simulate(args: argparse.Namespace) -> int:
    exp = _load(args)
    if exp.model_name == "aircraft":
        model, _, prior = experiment_models(exp, exp.model_qw)
        x0 = prior.mean
    else:
        model = linear_model(exp.theta, exp.sigma)
        x0 = np.array(exp.prior_mean)
    study = moment_study(
        model,
        x0,
        exp.sim_horizon,
        exp.sim_dt,
        exp.sim_orders,
        exp.paths,
        exp.seed,
        basis_family=exp.basis_family,
    )
    out = exp.out_dir
    _write_csv(
        os.path.join(out, "sim_moments.csv"),
        ["estimator", "component", "mean", "std"],
        [
            [name, comp + 1, study.means[e, comp], study.stds[e, comp]]
            for e, name in enumerate(study.estimators)
            for comp in range(model.n)
        ],
    )
    _write_csv(
        os.path.join(out, "sim_qq.csv"),
        ["estimator", "component", "level", "euler_value", "value"],
        [
            [name, comp + 1, study.quantile_levels[q],
             study.quantile_values[0, comp, q], study.quantile_values[e, comp, q]]
            for e, name in enumerate(study.estimators)
            if e > 0
            for comp in range(model.n)
            for q in range(study.quantile_levels.size)
        ],
    )
    example = euler_maruyama(
        model, x0, exp.sim_horizon, exp.sim_dt, substream(exp.seed, (0,))
    )
    _write_csv(
        os.path.join(out, "sim_trajectory.csv"),
        ["time"] + [f"x{i + 1}" for i in range(model.n)],
        [[t, *row] for t, row in zip(example.times, example.states)],
    )
    print(f"simulate: {exp.paths} paths per estimator -> {out}")
    for e, name in enumerate(study.estimators):
        print(f"  {name}: std(x1) = {study.stds[e, 0]:.4g}")
    return 0


def _read_observations(path: str, s: int) -> ObservationSequence:
    times = []
    values = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        names = [f"y{i + 1}" for i in range(s)]
        if reader.fieldnames is None or "time" not in reader.fieldnames:
            raise ConfigError(f"{path}: need a header with time,y1..y{s}")
        for missing in (n for n in names if n not in reader.fieldnames):
            raise ConfigError(f"{path}: missing column {missing!r}")
        for row in reader:
            times.append(float(row["time"]))
            values.append([float(row[n]) for n in names])
    if not times:
        raise ConfigError(f"{path}: no observation rows")
    return ObservationSequence(times=np.array(times), values=np.array(values))


def _cmd_filter(args: argparse.Namespace) -> int:
    exp = _load(args)
    model, measurement, prior = experiment_models(exp, exp.model_qw)
    try:
        observations = _read_observations(args.data, measurement.s)
    except ValueError as exc:
        raise ConfigError(f"{args.data}: {exc}") from exc
    out = exp.out_dir
    for spec in default_variants(exp):
        config = _filter_config(exp, spec, exp.model_qw, model, measurement)
        result = run_filter(prior, observations, config)
        rows = []
        for belief in result.posteriors:
            stds = np.sqrt(np.diag(belief.cov))
            rows.append([belief.time, *belief.mean, *stds])
        _write_csv(
            os.path.join(out, f"filter_{spec.label}.csv"),
            ["time"]
            + [f"m{i + 1}" for i in range(model.n)]
            + [f"std{i + 1}" for i in range(model.n)],
            rows,
        )
        status = (
            f"diverged ({result.reason} at t={result.failed_at:g})"
            if result.diverged
            else "completed"
        )
        print(f"filter {spec.label}: {status}, {len(result.posteriors)} updates")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    exp = _load(args)
    _, aggregates, _ = bench_filters(exp)
    print(f"bench: {exp.runs} runs per Q_W -> {exp.out_dir}")
    for row in aggregates:
        print(
            f"  qw={row.qw:g} {row.variant}: mean_pos={row.mean_pos:.4g} "
            f"median_pos={row.median_pos:.4g} divergences={row.divergences}"
        )
    return 0


def _cmd_ksweep(args: argparse.Namespace) -> int:
    exp = _load(args)
    _, aggregates = bench_k_sweep(exp)
    print(f"ksweep: qw={exp.sweep_qw:g}, {exp.runs} runs -> {exp.out_dir}")
    for row in aggregates:
        print(
            f"  {row.variant}: median_pos={row.median_pos:.4g} "
            f"divergences={row.divergences}"
        )
    return 0


def _cmd_basis_compare(args: argparse.Namespace) -> int:
    exp = _load(args)
    _, aggregates, _ = bench_basis_compare(exp)
    print(f"basis-compare: qw={exp.sweep_qw:g}, {exp.runs} runs -> {exp.out_dir}")
    for row in aggregates:
        print(
            f"  {row.variant}: median_pos={row.median_pos:.4g} "
            f"median_vel={row.median_vel:.4g} median_turn={row.median_turn:.4g}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seukf",
        description="Continuous-discrete Gaussian filtering experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, runs: bool = True) -> None:
        p.add_argument("--config", help="experiment INI file (defaults built in)")
        p.add_argument("--seed", type=int, help="override the root seed")
        p.add_argument("--out", help="override the output directory")
        if runs:
            p.add_argument("--runs", type=int, help="override the run count")
            p.add_argument("--jobs", type=int, help="worker processes")

    p = sub.add_parser("simulate", help="terminal-law moment study")
    common(p, runs=False)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("filter", help="run configured filters on a data file")
    common(p, runs=False)
    p.add_argument("--data", required=True, help="CSV with columns time,y1..ys")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("bench", help="filter comparison over the Q_W grid")
    common(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("ksweep", help="subinterval sweep at the sweep Q_W")
    common(p)
    p.set_defaults(func=_cmd_ksweep)

    p = sub.add_parser("basis-compare", help="sine vs Haar on paired data")
    common(p)
    p.set_defaults(func=_cmd_basis_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
