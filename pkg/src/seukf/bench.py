"""Aircraft tracking benchmark: data synthesis, filter comparison, error
metrics, and CSV emission, reproducible bit for bit from a single seed.

The engine is a (noise level, run index, filter variant) matrix.  Every
variant of a cell consumes the same synthesized trajectory and observation
sequence, whose randomness depends only on (seed, noise level, run index),
so adding or removing variants, reordering runs, or changing the worker
count never changes any number.
"""

from __future__ import annotations

import csv
import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .basis import make_basis
from .config import ConfigError, ExperimentConfig
from .filters import (
    FilterConfig,
    ObservationSequence,
    default_se_rule,
    run_filter,
)
from .models import GaussianBelief, aircraft_model, radar_measurement
from .ode import SolverConfig
from .sigma import SigmaRule
from .simulate import substream, synthesize_run

Array = NDArray[np.float64]

POSITION_COMPONENTS = (0, 2, 4)
VELOCITY_COMPONENTS = (1, 3, 5)
TURN_COMPONENTS = (6,)

# A completed run whose position RMSE exceeds this counts as diverged.
DIVERGENCE_POSITION_LIMIT = 1000.0

# Turn-rate quantities in the experiment configuration (the noise amplitude
# qw, and the seventh prior mean/std entries) are expressed in degrees per
# second; the model state carries radians per second.  Angle variances of
# the radar noise are likewise configured in squared degrees.
TURN_RATE_UNIT = np.pi / 180.0
ANGLE_VAR_UNIT = TURN_RATE_UNIT**2

METRIC_NAMES = ("eps_pos", "eps_vel", "eps_turn")


def rmse_components(
    truth: Array, estimates: Array
) -> tuple[float, float, float]:
    """Position, velocity, and turn-rate RMSE between truth and estimates.

    Both inputs are (k, 7) stacks over the observation times.  Each error is
    sqrt(mean over times of |difference|^2 / l) with l the component-group
    size, so a constant offset in a single coordinate of a group of three
    appears shrunk by sqrt(3).
    """
    truth = np.asarray(truth, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if truth.shape != estimates.shape:
        raise ValueError(
            f"truth and estimates shapes differ: {truth.shape} vs {estimates.shape}"
        )
    diff = truth - estimates
    out = []
    for group in (POSITION_COMPONENTS, VELOCITY_COMPONENTS, TURN_COMPONENTS):
        block = diff[:, list(group)]
        out.append(float(np.sqrt(np.mean(block * block))))
    return out[0], out[1], out[2]


@dataclass(frozen=True)
class VariantSpec:
    """One filter setup to evaluate inside the benchmark matrix."""

    label: str
    variant: str  # se_ukf | moment_ode_ukf
    basis_family: str = "fourier_sine"
    order: int = 8
    subintervals: int = 1
    sqrt_kind: str = "symmetric"
    alpha: float = 1.0
    beta: float = 0.0
    kappa: float | None = None  # None = pin spread n_aug + lambda at 7


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one (noise level, run, variant) cell."""

    qw: float
    run: int
    variant: str
    eps_pos: float
    eps_vel: float
    eps_turn: float
    diverged: bool
    reason: str
    data_digest: str


@dataclass(frozen=True)
class AggregateRow:
    """Per (noise level, variant) statistics over the run set.

    All error statistics are over the non-diverged runs; ``completed``
    counts the runs that produced metrics at all (a covariance failure
    aborts a run before any error can be measured).
    """

    qw: float
    variant: str
    runs: int
    completed: int
    divergences: int
    mean_pos: float
    mean_vel: float
    mean_turn: float
    median_pos: float
    median_vel: float
    median_turn: float
    q1_pos: float
    q3_pos: float


@dataclass(frozen=True)
class DifferenceRow:
    """Quartiles of a paired per-run error difference (a minus b)."""

    qw: float
    metric: str
    pairs: int
    q1: float
    median: float
    q3: float


def _qw_key(qw: float) -> int:
    # Stable integer tag for the substream key; exact for grid values.
    return int(round(qw * 1_000_000))


def experiment_models(exp: ExperimentConfig, qw: float):
    """Model, measurement, and prior belief for one noise level ``qw``.

    ``qw`` is the turn-rate noise amplitude in degrees per second; it, the
    turn-rate prior entries, and the angular measurement variances are
    converted to the radian units of the model state here, so configuration
    files carry the customary degree values.
    """
    if exp.model_name != "aircraft":
        raise ConfigError("the benchmark harness requires the aircraft model")
    model = aircraft_model((*exp.noise_diag, (qw * TURN_RATE_UNIT) ** 2))
    r = exp.meas_noise_diag
    measurement = radar_measurement(
        (r[0], r[1] * ANGLE_VAR_UNIT, r[2] * ANGLE_VAR_UNIT)
    )
    mean = np.array(exp.prior_mean, dtype=float)
    std = np.array(exp.prior_std, dtype=float)
    mean[6] *= TURN_RATE_UNIT
    std[6] *= TURN_RATE_UNIT
    prior = GaussianBelief(mean=mean, cov=np.diag(std * std), time=0.0)
    return model, measurement, prior


def _filter_config(
    exp: ExperimentConfig, spec: VariantSpec, qw: float, model, measurement
) -> FilterConfig:
    if spec.variant == "moment_ode_ukf":
        ode = SolverConfig(
            method="rk4_fixed", steps_per_unit_time=exp.moment_steps(qw)
        )
        return FilterConfig(
            model=model,
            measurement=measurement,
            variant="moment_ode_ukf",
            rule=SigmaRule(scheme="cubature", sqrt_kind="cholesky"),
            ode=ode,
        )
    basis = make_basis(spec.basis_family, exp.obs_spacing, spec.order, exp.theta)
    n_aug = model.n + spec.order * model.d
    if spec.kappa is None:
        rule = default_se_rule(n_aug, sqrt_kind=spec.sqrt_kind)
    else:
        rule = SigmaRule(
            scheme="scaled_ut",
            alpha=spec.alpha,
            kappa=spec.kappa,
            beta=spec.beta,
            sqrt_kind=spec.sqrt_kind,
        )
    ode = SolverConfig(
        method="dormand_prince",
        rel_tol=exp.rel_tol,
        abs_tol=exp.abs_tol,
        max_steps=exp.max_steps,
    )
    return FilterConfig(
        model=model,
        measurement=measurement,
        variant="se_ukf",
        basis=basis,
        rule=rule,
        ode=ode,
        subintervals=spec.subintervals,
    )


def run_cell(
    exp: ExperimentConfig, qw: float, run: int, specs: tuple[VariantSpec, ...]
) -> list[RunRecord]:
    """Synthesize one data set and evaluate every variant on it."""
    model, measurement, prior = experiment_models(exp, qw)
    rng = substream(exp.seed, (_qw_key(qw), run))
    trajectory, observations = synthesize_run(
        model,
        measurement,
        prior,
        exp.obs_count,
        exp.obs_spacing,
        exp.truth_dt,
        rng,
    )
    digest = hashlib.sha256(
        observations.times.tobytes() + observations.values.tobytes()
    ).hexdigest()[:12]
    steps_per_obs = round(exp.obs_spacing / exp.truth_dt)
    truth_at_obs = trajectory.states[steps_per_obs * (np.arange(exp.obs_count) + 1)]
    records = []
    for spec in specs:
        config = _filter_config(exp, spec, qw, model, measurement)
        result = run_filter(prior, observations, config)
        if result.diverged:
            records.append(
                RunRecord(
                    qw=qw,
                    run=run,
                    variant=spec.label,
                    eps_pos=float("nan"),
                    eps_vel=float("nan"),
                    eps_turn=float("nan"),
                    diverged=True,
                    reason=result.reason or "",
                    data_digest=digest,
                )
            )
            continue
        eps_pos, eps_vel, eps_turn = rmse_components(
            truth_at_obs, result.posterior_means()
        )
        diverged = eps_pos > DIVERGENCE_POSITION_LIMIT
        records.append(
            RunRecord(
                qw=qw,
                run=run,
                variant=spec.label,
                eps_pos=eps_pos,
                eps_vel=eps_vel,
                eps_turn=eps_turn,
                diverged=diverged,
                reason="position_rmse" if diverged else "",
                data_digest=digest,
            )
        )
    return records


def _run_cell_star(args) -> list[RunRecord]:
    return run_cell(*args)


def run_matrix(
    exp: ExperimentConfig,
    qw_values: tuple[float, ...],
    specs: tuple[VariantSpec, ...],
    jobs: int | None = None,
) -> list[RunRecord]:
    """Evaluate every (noise level, run, variant) cell.

    Results are ordered by (position of qw in qw_values, run, position of
    the variant in specs) regardless of the worker count.
    """
    jobs = exp.jobs if jobs is None else jobs
    tasks = [(exp, qw, run, tuple(specs)) for qw in qw_values for run in range(exp.runs)]
    if jobs <= 1:
        chunks = [_run_cell_star(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell_star, tasks, chunksize=4))
    return [record for chunk in chunks for record in chunk]


def _completed_eps(records: list[RunRecord]) -> Array:
    return np.array(
        [[r.eps_pos, r.eps_vel, r.eps_turn] for r in records if np.isfinite(r.eps_pos)]
    ).reshape(-1, 3)


def aggregate(records: list[RunRecord]) -> list[AggregateRow]:
    """Reduce per-run records to the benchmark's summary statistics.

    Every statistic (mean, median, quartiles) is taken over the runs that
    did not diverge; diverged runs only contribute to the divergence count.
    A handful of lost-track runs would otherwise dominate the mean and drag
    the quartiles across the divergence threshold.
    """
    keys = []
    for r in records:
        if (r.qw, r.variant) not in keys:
            keys.append((r.qw, r.variant))
    rows = []
    for qw, variant in keys:
        cell = [r for r in records if r.qw == qw and r.variant == variant]
        completed = _completed_eps(cell)
        kept = np.array(
            [
                [r.eps_pos, r.eps_vel, r.eps_turn]
                for r in cell
                if not r.diverged
            ]
        ).reshape(-1, 3)
        mean = kept.mean(axis=0) if kept.size else np.full(3, np.nan)
        if kept.size:
            median = np.median(kept, axis=0)
            q1_pos, q3_pos = np.quantile(kept[:, 0], [0.25, 0.75])
        else:
            median = np.full(3, np.nan)
            q1_pos = q3_pos = float("nan")
        rows.append(
            AggregateRow(
                qw=qw,
                variant=variant,
                runs=len(cell),
                completed=completed.shape[0],
                divergences=sum(r.diverged for r in cell),
                mean_pos=float(mean[0]),
                mean_vel=float(mean[1]),
                mean_turn=float(mean[2]),
                median_pos=float(median[0]),
                median_vel=float(median[1]),
                median_turn=float(median[2]),
                q1_pos=float(q1_pos),
                q3_pos=float(q3_pos),
            )
        )
    return rows


def difference_quartiles(
    records: list[RunRecord], minuend: str, subtrahend: str
) -> list[DifferenceRow]:
    """Quartiles of per-run error differences between two variants.

    Only runs where both variants completed contribute; the pairing is by
    (noise level, run index), which also pairs the underlying data.
    """
    by_cell: dict[tuple[float, int, str], RunRecord] = {
        (r.qw, r.run, r.variant): r for r in records
    }
    qw_values = []
    for r in records:
        if r.qw not in qw_values:
            qw_values.append(r.qw)
    rows = []
    for qw in qw_values:
        runs = sorted({r.run for r in records if r.qw == qw})
        diffs = []
        for run in runs:
            a = by_cell.get((qw, run, minuend))
            b = by_cell.get((qw, run, subtrahend))
            if a is None or b is None:
                continue
            if not (np.isfinite(a.eps_pos) and np.isfinite(b.eps_pos)):
                continue
            diffs.append(
                [
                    a.eps_pos - b.eps_pos,
                    a.eps_vel - b.eps_vel,
                    a.eps_turn - b.eps_turn,
                ]
            )
        stacked = np.array(diffs).reshape(-1, 3)
        for m, metric in enumerate(METRIC_NAMES):
            if stacked.size:
                q1, med, q3 = np.quantile(stacked[:, m], [0.25, 0.5, 0.75])
            else:
                q1 = med = q3 = float("nan")
            rows.append(
                DifferenceRow(
                    qw=qw,
                    metric=metric,
                    pairs=stacked.shape[0],
                    q1=float(q1),
                    median=float(med),
                    q3=float(q3),
                )
            )
    return rows


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)  # shortest exact round-trip
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows([[_fmt(v) for v in row] for row in rows])


def write_run_records(
    records: list[RunRecord], out_dir: str, prefix: str
) -> list[str]:
    """One long-format per-run file per noise level; returns the paths.

    Rows carry (qw, run, variant, metric, value) plus the observation-data
    digest, with ``diverged`` emitted as a 0/1 metric, so aggregates are
    recomputable from these files alone.
    """
    qw_values = []
    for r in records:
        if r.qw not in qw_values:
            qw_values.append(r.qw)
    paths = []
    for qw in qw_values:
        rows = []
        for r in records:
            if r.qw != qw:
                continue
            for metric, value in zip(
                METRIC_NAMES, (r.eps_pos, r.eps_vel, r.eps_turn)
            ):
                rows.append([r.qw, r.run, r.variant, metric, value, r.data_digest])
            rows.append(
                [r.qw, r.run, r.variant, "diverged", int(r.diverged), r.data_digest]
            )
        path = os.path.join(out_dir, f"{prefix}_runs_qw{qw:g}.csv")
        _write_csv(
            path,
            ["qw", "run", "variant", "metric", "value", "data_digest"],
            rows,
        )
        paths.append(path)
    return paths


def read_run_records(paths: list[str]) -> list[RunRecord]:
    """Rebuild RunRecords from long-format per-run files."""
    cells: dict[tuple[float, int, str], dict[str, float]] = {}
    digests: dict[tuple[float, int, str], str] = {}
    order: list[tuple[float, int, str]] = []
    for path in paths:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            for row in csv.DictReader(handle):
                key = (float(row["qw"]), int(row["run"]), row["variant"])
                if key not in cells:
                    cells[key] = {}
                    order.append(key)
                cells[key][row["metric"]] = float(row["value"])
                digests[key] = row["data_digest"]
    records = []
    for key in order:
        qw, run, variant = key
        values = cells[key]
        diverged = values.get("diverged", 0.0) != 0.0
        records.append(
            RunRecord(
                qw=qw,
                run=run,
                variant=variant,
                eps_pos=values.get("eps_pos", float("nan")),
                eps_vel=values.get("eps_vel", float("nan")),
                eps_turn=values.get("eps_turn", float("nan")),
                diverged=diverged,
                reason="",
                data_digest=digests[key],
            )
        )
    return records


def write_aggregate(rows: list[AggregateRow], path: str) -> None:
    _write_csv(
        path,
        [
            "qw",
            "variant",
            "runs",
            "completed",
            "divergences",
            "mean_pos",
            "mean_vel",
            "mean_turn",
            "median_pos",
            "median_vel",
            "median_turn",
            "q1_pos",
            "q3_pos",
        ],
        [
            [
                r.qw,
                r.variant,
                r.runs,
                r.completed,
                r.divergences,
                r.mean_pos,
                r.mean_vel,
                r.mean_turn,
                r.median_pos,
                r.median_vel,
                r.median_turn,
                r.q1_pos,
                r.q3_pos,
            ]
            for r in rows
        ],
    )


def write_differences(rows: list[DifferenceRow], path: str) -> None:
    _write_csv(
        path,
        ["qw", "metric", "pairs", "q1", "median", "q3"],
        [[r.qw, r.metric, r.pairs, r.q1, r.median, r.q3] for r in rows],
    )


def default_variants(exp: ExperimentConfig) -> tuple[VariantSpec, ...]:
    """The configured comparison set for bench_filters."""
    specs = []
    for name in exp.variants:
        if name == "se_ukf":
            specs.append(
                VariantSpec(
                    label="se_ukf",
                    variant="se_ukf",
                    basis_family=exp.basis_family,
                    order=exp.order,
                    subintervals=exp.subintervals,
                    sqrt_kind=exp.sqrt_kind,
                    alpha=exp.alpha,
                    beta=exp.beta,
                    kappa=exp.kappa,
                )
            )
        else:
            specs.append(VariantSpec(label="moment_ode_ukf", variant="moment_ode_ukf"))
    return tuple(specs)


def bench_filters(
    exp: ExperimentConfig, out_dir: str | None = None, jobs: int | None = None
):
    """Run the configured variants over the noise grid and emit CSVs."""
    out_dir = exp.out_dir if out_dir is None else out_dir
    specs = default_variants(exp)
    records = run_matrix(exp, exp.qw_grid, specs, jobs=jobs)
    aggregates = aggregate(records)
    write_run_records(records, out_dir, "bench")
    write_aggregate(aggregates, os.path.join(out_dir, "bench_aggregate.csv"))
    diffs = []
    labels = [s.label for s in specs]
    if "moment_ode_ukf" in labels and "se_ukf" in labels:
        diffs = difference_quartiles(records, "moment_ode_ukf", "se_ukf")
        write_differences(diffs, os.path.join(out_dir, "bench_diff_quartiles.csv"))
    return records, aggregates, diffs


def k_sweep_variants(exp: ExperimentConfig) -> tuple[VariantSpec, ...]:
    specs = [
        VariantSpec(
            label=f"se_K{k}",
            variant="se_ukf",
            basis_family=exp.basis_family,
            order=exp.order,
            subintervals=k,
            sqrt_kind=exp.sqrt_kind,
            alpha=exp.alpha,
            beta=exp.beta,
            kappa=exp.kappa,
        )
        for k in exp.k_grid
    ]
    specs.append(VariantSpec(label="moment_ode_ukf", variant="moment_ode_ukf"))
    return tuple(specs)


def bench_k_sweep(
    exp: ExperimentConfig, out_dir: str | None = None, jobs: int | None = None
):
    """Median errors per subinterval count at the sweep noise level."""
    out_dir = exp.out_dir if out_dir is None else out_dir
    specs = k_sweep_variants(exp)
    records = run_matrix(exp, (exp.sweep_qw,), specs, jobs=jobs)
    aggregates = aggregate(records)
    write_run_records(records, out_dir, "ksweep")
    write_aggregate(aggregates, os.path.join(out_dir, "ksweep_aggregate.csv"))
    return records, aggregates


def basis_compare_variants(exp: ExperimentConfig) -> tuple[VariantSpec, ...]:
    common = dict(
        variant="se_ukf",
        order=exp.order,
        subintervals=exp.subintervals,
        sqrt_kind=exp.sqrt_kind,
        alpha=exp.alpha,
        beta=exp.beta,
        kappa=exp.kappa,
    )
    return (
        VariantSpec(label="se_sine", basis_family="fourier_sine", **common),
        VariantSpec(label="se_haar", basis_family="haar", **common),
    )


def bench_basis_compare(
    exp: ExperimentConfig, out_dir: str | None = None, jobs: int | None = None
):
    """Paired sine-vs-Haar comparison on identical data at the sweep level."""
    out_dir = exp.out_dir if out_dir is None else out_dir
    specs = basis_compare_variants(exp)
    records = run_matrix(exp, (exp.sweep_qw,), specs, jobs=jobs)
    aggregates = aggregate(records)
    diffs = difference_quartiles(records, "se_sine", "se_haar")
    write_run_records(records, out_dir, "basis")
    write_aggregate(aggregates, os.path.join(out_dir, "basis_aggregate.csv"))
    write_differences(diffs, os.path.join(out_dir, "basis_diff_quartiles.csv"))
    return records, aggregates, diffs
