"""Benchmark harness: error metrics, aggregation conventions, CSV round
trips, data pairing across variants, and the command-line entry points.

Live filter runs here are deliberately tiny (two observations, low order);
they pin structure and determinism, while exact statistics are checked on
hand-built records.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os

import numpy as np
import pytest

from seukf.bench import (
    AggregateRow,
    RunRecord,
    VariantSpec,
    aggregate,
    basis_compare_variants,
    bench_basis_compare,
    bench_filters,
    bench_k_sweep,
    default_variants,
    difference_quartiles,
    experiment_models,
    k_sweep_variants,
    read_run_records,
    rmse_components,
    run_cell,
    run_matrix,
    write_aggregate,
    write_run_records,
)
from seukf.cli import main
from seukf.config import ConfigError, ExperimentConfig, default_config, load_config

DEG = np.pi / 180.0


def tiny_exp(**overrides) -> ExperimentConfig:
    """A benchmark configuration small enough for unit-test budgets."""
    base = dict(
        obs_count=2,
        obs_spacing=1.0,
        order=2,
        runs=2,
        qw_grid=(0.5,),
        sweep_qw=0.5,
        k_grid=(1, 2),
        seed=3,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------- metrics


def test_rmse_zero_for_exact_estimates():
    states = np.arange(21.0).reshape(3, 7)
    assert rmse_components(states, states) == (0.0, 0.0, 0.0)


def test_rmse_groups_and_normalization():
    truth = np.zeros((4, 7))
    est = np.zeros((4, 7))
    est[:, 0] = 3.0  # one of the three position components
    pos, vel, turn = rmse_components(truth, est)
    assert pos == pytest.approx(np.sqrt(3.0), rel=1e-15)
    assert vel == 0.0 and turn == 0.0

    est = np.zeros((4, 7))
    est[:, 6] = 2.0  # the lone turn-rate component
    assert rmse_components(truth, est) == (0.0, 0.0, 2.0)


def test_rmse_time_average():
    truth = np.zeros((2, 7))
    est = np.zeros((2, 7))
    est[0, 1] = 1.0
    est[1, 3] = 2.0  # velocity components 1 and 3 at different times
    _, vel, _ = rmse_components(truth, est)
    assert vel == pytest.approx(np.sqrt((1.0 + 4.0) / 6.0), rel=1e-15)


def test_rmse_shape_mismatch():
    with pytest.raises(ValueError, match="shapes differ"):
        rmse_components(np.zeros((3, 7)), np.zeros((2, 7)))


# ------------------------------------------------------------ aggregation


def record(qw, run, variant, pos, vel=1.0, turn=0.5, diverged=False, reason=""):
    return RunRecord(
        qw=qw,
        run=run,
        variant=variant,
        eps_pos=pos,
        eps_vel=vel,
        eps_turn=turn,
        diverged=diverged,
        reason=reason,
        data_digest=f"d{run:02d}",
    )


def test_aggregate_excludes_diverged_from_statistics():
    nan = float("nan")
    records = [
        record(1.1, 0, "a", 10.0, vel=4.0, turn=0.1),
        record(1.1, 1, "a", 20.0, vel=6.0, turn=0.2),
        record(1.1, 2, "a", 30.0, vel=8.0, turn=0.3),
        # completed but past the position limit: counted, not averaged
        record(1.1, 3, "a", 2000.0, diverged=True, reason="position_rmse"),
        # aborted before producing any metric
        record(1.1, 4, "a", nan, vel=nan, turn=nan, diverged=True, reason="npd"),
    ]
    (row,) = aggregate(records)
    assert (row.qw, row.variant) == (1.1, "a")
    assert (row.runs, row.completed, row.divergences) == (5, 4, 2)
    assert row.mean_pos == pytest.approx(20.0)
    assert row.mean_vel == pytest.approx(6.0)
    assert row.mean_turn == pytest.approx(0.2)
    assert row.median_pos == pytest.approx(20.0)
    assert row.q1_pos == pytest.approx(15.0)
    assert row.q3_pos == pytest.approx(25.0)


def test_aggregate_all_diverged_yields_nan():
    records = [
        record(0.1, r, "a", 5000.0, diverged=True, reason="position_rmse")
        for r in range(3)
    ]
    (row,) = aggregate(records)
    assert (row.runs, row.completed, row.divergences) == (3, 3, 3)
    assert math.isnan(row.mean_pos) and math.isnan(row.median_pos)
    assert math.isnan(row.q1_pos) and math.isnan(row.q3_pos)


def test_aggregate_groups_in_first_appearance_order():
    records = [
        record(0.1, 0, "a", 1.0),
        record(0.1, 0, "b", 2.0),
        record(0.3, 0, "a", 3.0),
        record(0.3, 0, "b", 4.0),
        record(0.1, 1, "a", 5.0),
    ]
    rows = aggregate(records)
    assert [(r.qw, r.variant) for r in rows] == [
        (0.1, "a"),
        (0.1, "b"),
        (0.3, "a"),
        (0.3, "b"),
    ]
    assert rows[0].runs == 2 and rows[2].runs == 1


def test_difference_quartiles_pairs_and_drops():
    nan = float("nan")
    records = [
        record(1.1, 0, "a", 10.0, vel=1.0, turn=0.1),
        record(1.1, 0, "b", 4.0, vel=2.0, turn=0.4),
        record(1.1, 1, "a", 20.0, vel=2.0, turn=0.2),
        record(1.1, 1, "b", 8.0, vel=2.0, turn=0.1),
        record(1.1, 2, "a", 30.0, vel=3.0, turn=0.3),
        record(1.1, 2, "b", 12.0, vel=5.0, turn=0.2),
        # one side aborted: the pair is dropped
        record(1.1, 3, "a", nan, vel=nan, turn=nan, diverged=True, reason="npd"),
        record(1.1, 3, "b", 7.0),
        # unmatched run: no partner record at all
        record(1.1, 4, "a", 40.0),
    ]
    rows = difference_quartiles(records, "a", "b")
    assert [r.metric for r in rows] == ["eps_pos", "eps_vel", "eps_turn"]
    pos = rows[0]
    assert pos.pairs == 3
    # a - b position differences: 6, 12, 18
    assert (pos.q1, pos.median, pos.q3) == (9.0, 12.0, 15.0)
    # a - b velocity differences sorted: -2, -1, 0
    vel = rows[1]
    assert (vel.q1, vel.median, vel.q3) == (-1.5, -1.0, -0.5)


def test_difference_quartiles_no_pairs():
    records = [record(0.1, 0, "a", 1.0)]
    rows = difference_quartiles(records, "a", "b")
    assert all(r.pairs == 0 and math.isnan(r.median) for r in rows)


# ---------------------------------------------------------- CSV round trip


def test_run_records_round_trip(tmp_path):
    nan = float("nan")
    records = [
        record(0.1, 0, "a", 10.123456789012345, vel=0.25, turn=1e-7),
        record(0.1, 0, "b", 11.0),
        record(0.1, 1, "a", nan, vel=nan, turn=nan, diverged=True, reason="npd"),
        record(1.1, 0, "a", 2000.0, diverged=True, reason="position_rmse"),
    ]
    paths = write_run_records(records, str(tmp_path), "trip")
    assert [os.path.basename(p) for p in paths] == [
        "trip_runs_qw0.1.csv",
        "trip_runs_qw1.1.csv",
    ]
    back = read_run_records(paths)
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert (a.qw, a.run, a.variant, a.data_digest) == (
            b.qw,
            b.run,
            b.variant,
            b.data_digest,
        )
        assert a.diverged == b.diverged
        for field in ("eps_pos", "eps_vel", "eps_turn"):
            x, y = getattr(a, field), getattr(b, field)
            assert (math.isnan(x) and math.isnan(y)) or x == y  # exact


def test_run_records_csv_is_byte_deterministic(tmp_path):
    records = [record(0.7, r, v, 10.0 + r) for r in range(3) for v in ("a", "b")]
    p1 = write_run_records(records, str(tmp_path / "one"), "x")
    p2 = write_run_records(records, str(tmp_path / "two"), "x")
    for a, b in zip(p1, p2):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()


def test_aggregate_csv_round_trips_exactly(tmp_path):
    records = [
        record(0.5, r, "a", float(np.exp(r)), vel=float(np.pi * r), turn=0.1 * r)
        for r in range(5)
    ]
    rows = aggregate(records)
    path = str(tmp_path / "agg.csv")
    write_aggregate(rows, path)
    with open(path, newline="") as handle:
        parsed = list(csv.DictReader(handle))
    assert len(parsed) == 1
    row = parsed[0]
    assert float(row["mean_pos"]) == rows[0].mean_pos  # repr round trip
    assert float(row["q3_pos"]) == rows[0].q3_pos
    assert int(row["divergences"]) == 0


# ------------------------------------------------- experiment construction


def test_experiment_models_unit_conversion():
    exp = default_config()
    model, measurement, prior = experiment_models(exp, 1.1)
    b = model.diffusion(np.zeros(7))
    assert b[6, 3] == pytest.approx(1.1 * DEG, rel=1e-15)
    expected_r = np.diag([50.0, 0.1 * DEG * DEG, 0.1 * DEG * DEG])
    np.testing.assert_allclose(measurement.noise_cov, expected_r, rtol=1e-15)
    assert prior.mean[6] == pytest.approx(6.0 * DEG, rel=1e-15)
    assert prior.cov[6, 6] == pytest.approx((0.1 * DEG) ** 2, rel=1e-15)
    np.testing.assert_allclose(prior.mean[:6], exp.prior_mean[:6])


def test_experiment_models_rejects_non_aircraft():
    exp = dataclasses.replace(
        default_config(), model_name="ou", prior_mean=(0.0,), prior_std=(1.0,)
    )
    with pytest.raises(ConfigError, match="aircraft"):
        experiment_models(exp, 0.5)


def test_variant_spec_builders():
    exp = tiny_exp()
    labels = [s.label for s in default_variants(exp)]
    assert labels == ["se_ukf", "moment_ode_ukf"]
    sweep = k_sweep_variants(exp)
    assert [s.label for s in sweep] == ["se_K1", "se_K2", "moment_ode_ukf"]
    assert [s.subintervals for s in sweep[:2]] == [1, 2]
    pair = basis_compare_variants(exp)
    assert [(s.label, s.basis_family) for s in pair] == [
        ("se_sine", "fourier_sine"),
        ("se_haar", "haar"),
    ]


# ------------------------------------------------------------- live matrix


def test_run_cell_shares_data_and_repeats_exactly():
    exp = tiny_exp()
    specs = default_variants(exp)
    first = run_cell(exp, 0.5, 0, specs)
    second = run_cell(exp, 0.5, 0, specs)
    assert [r.variant for r in first] == ["se_ukf", "moment_ode_ukf"]
    assert first == second  # bitwise repeatable, including error floats
    assert first[0].data_digest == first[1].data_digest
    assert len(first[0].data_digest) == 12
    other_run = run_cell(exp, 0.5, 1, specs)
    assert other_run[0].data_digest != first[0].data_digest
    for r in first:
        assert r.diverged or np.isfinite(r.eps_pos)


def test_run_matrix_ordering_and_worker_independence():
    exp = tiny_exp()
    specs = default_variants(exp)
    inline = run_matrix(exp, (0.5, 0.7), specs, jobs=1)
    assert [(r.qw, r.run, r.variant) for r in inline] == [
        (qw, run, v)
        for qw in (0.5, 0.7)
        for run in (0, 1)
        for v in ("se_ukf", "moment_ode_ukf")
    ]
    pooled = run_matrix(exp, (0.5, 0.7), specs, jobs=2)
    assert pooled == inline


# ------------------------------------------------------------ entry points


def write_ini(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_cli_simulate_scalar_model(tmp_path, capsys):
    config = write_ini(
        tmp_path / "ou.ini",
        "[model]\nname = ou\ntheta = 0.5\nsigma = 1.0\n"
        "[prior]\nmean = 1.5\nstd = 1.0\n"
        "[simulate]\npaths = 1000\norders = 1,2\nhorizon = 2.0\ndt = 0.02\n"
        f"[bench]\nout_dir = {tmp_path / 'out'}\n",
    )
    assert main(["simulate", "--config", config]) == 0
    out = capsys.readouterr().out
    assert "1000 paths" in out
    for name in ("sim_moments.csv", "sim_qq.csv", "sim_trajectory.csv"):
        assert (tmp_path / "out" / name).exists()
    with open(tmp_path / "out" / "sim_moments.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert [r["estimator"] for r in rows] == ["euler", "se_N1", "se_N2"]
    stds = [float(r["std"]) for r in rows]
    assert stds[1] < stds[2]  # short truncation spreads least


def test_cli_bench_outputs_recomputable(tmp_path):
    out = tmp_path / "bench_out"
    config = write_ini(
        tmp_path / "bench.ini",
        "[observations]\ncount = 2\nspacing = 1.0\n"
        "[filter]\norder = 2\n"
        f"[bench]\nruns = 2\nqw_grid = 0.5\nseed = 3\nout_dir = {out}\n",
    )
    assert main(["bench", "--config", config]) == 0
    runs_csv = out / "bench_runs_qw0.5.csv"
    agg_csv = out / "bench_aggregate.csv"
    assert runs_csv.exists() and agg_csv.exists()
    assert (out / "bench_diff_quartiles.csv").exists()

    # the summary file must be exactly the reduction of the per-run file
    rows = aggregate(read_run_records([str(runs_csv)]))
    with open(agg_csv, newline="") as handle:
        parsed = list(csv.DictReader(handle))
    assert len(parsed) == len(rows) == 2
    for got, expect in zip(parsed, rows):
        assert got["variant"] == expect.variant
        assert int(got["runs"]) == expect.runs == 2
        for name in ("mean_pos", "median_pos", "q1_pos", "q3_pos"):
            a, b = float(got[name]), getattr(expect, name)
            assert (math.isnan(a) and math.isnan(b)) or a == b


def test_cli_ksweep(tmp_path):
    out = tmp_path / "sweep_out"
    config = write_ini(
        tmp_path / "sweep.ini",
        "[observations]\ncount = 2\nspacing = 1.0\n"
        "[filter]\norder = 2\n"
        f"[bench]\nruns = 1\nk_grid = 1,2\nsweep_qw = 0.5\nout_dir = {out}\n",
    )
    assert main(["ksweep", "--config", config]) == 0
    with open(out / "ksweep_aggregate.csv", newline="") as handle:
        variants = [r["variant"] for r in csv.DictReader(handle)]
    assert variants == ["se_K1", "se_K2", "moment_ode_ukf"]


def test_cli_basis_compare(tmp_path):
    out = tmp_path / "basis_out"
    config = write_ini(
        tmp_path / "basis.ini",
        "[observations]\ncount = 2\nspacing = 1.0\n"
        "[filter]\norder = 2\n"
        f"[bench]\nruns = 1\nsweep_qw = 0.5\nout_dir = {out}\n",
    )
    assert main(["basis-compare", "--config", config]) == 0
    records = read_run_records([str(out / "basis_runs_qw0.5.csv")])
    assert [r.variant for r in records] == ["se_sine", "se_haar"]
    assert records[0].data_digest == records[1].data_digest
    with open(out / "basis_diff_quartiles.csv", newline="") as handle:
        metrics = [r["metric"] for r in csv.DictReader(handle)]
    assert metrics == ["eps_pos", "eps_vel", "eps_turn"]


def test_cli_filter_runs_on_data_file(tmp_path):
    out = tmp_path / "filter_out"
    config = write_ini(
        tmp_path / "filter.ini",
        f"[filter]\norder = 2\n[bench]\nout_dir = {out}\n",
    )
    # radar readings consistent with the prior position (1000, 2650, 200)
    r = np.sqrt(1000.0**2 + 2650.0**2 + 200.0**2)
    az = np.arctan2(2650.0, 1000.0)
    el = np.arcsin(200.0 / r)
    data = tmp_path / "obs.csv"
    with open(data, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["time", "y1", "y2", "y3"])
        writer.writerow([1.0, r, az, el])
        writer.writerow([2.0, r, az, el])
    assert main(["filter", "--config", config, "--data", str(data)]) == 0
    for label in ("se_ukf", "moment_ode_ukf"):
        with open(out / f"filter_{label}.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 2
        assert set(rows[0]) == {"time"} | {
            f"{kind}{i}" for kind in ("m", "std") for i in range(1, 8)
        }


def test_cli_filter_rejects_bad_data_file(tmp_path, capsys):
    data = tmp_path / "bad.csv"
    data.write_text("time,y1\n1.0,2.0\n", encoding="utf-8")
    assert main(["filter", "--data", str(data)]) == 2
    assert "missing column" in capsys.readouterr().err


def test_cli_missing_config_file(tmp_path, capsys):
    rc = main(["bench", "--config", str(tmp_path / "absent.ini")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_cli_rejects_unknown_key(tmp_path, capsys):
    config = write_ini(tmp_path / "bad.ini", "[bench]\nrunz = 3\n")
    assert main(["bench", "--config", config]) == 2
    assert "unknown key" in capsys.readouterr().err


# ------------------------------------------------------------- INI loading


def test_load_config_round_trip(tmp_path):
    config = write_ini(
        tmp_path / "full.ini",
        "[model]\nqw = 0.7        # inline comment\n"
        "[observations]\ncount = 5\nspacing = 4.0\n"
        "[filter]\nvariants = se_ukf\nkappa = auto\norder = 4\n"
        "[ode]\nmoment_steps_per_unit_time = 150\n"
        "[bench]\nruns = 7\nqw_grid = 0.1, 0.9\nk_grid = 1,8\n",
    )
    exp = load_config(config)
    assert exp.model_qw == 0.7
    assert exp.obs_count == 5 and exp.obs_spacing == 4.0
    assert exp.variants == ("se_ukf",)
    assert exp.kappa is None
    assert exp.order == 4
    assert exp.moment_steps_per_unit_time == 150.0
    assert exp.moment_steps(1.1) == 150.0
    assert exp.runs == 7
    assert exp.qw_grid == (0.1, 0.9)
    assert exp.k_grid == (1, 8)
    # untouched keys keep their defaults
    assert exp.obs_spacing != default_config().obs_spacing
    assert exp.truth_dt == default_config().truth_dt


def test_moment_steps_auto_scales_with_noise():
    exp = default_config()
    assert exp.moment_steps_per_unit_time is None
    assert exp.moment_steps(0.5) == pytest.approx(100.0)
    assert exp.moment_steps(1.1) == pytest.approx(220.0)


def test_load_config_rejects_unknown_section(tmp_path):
    config = write_ini(tmp_path / "bad.ini", "[mdoel]\nqw = 0.7\n")
    with pytest.raises(ConfigError, match=r"unknown section \[mdoel\]"):
        load_config(config)


def test_load_config_rejects_bad_value(tmp_path):
    config = write_ini(tmp_path / "bad.ini", "[bench]\nruns = three\n")
    with pytest.raises(ConfigError, match="bad value"):
        load_config(config)


def test_load_config_rejects_inconsistent_values(tmp_path):
    config = write_ini(tmp_path / "bad.ini", "[bench]\nruns = 0\n")
    with pytest.raises(ConfigError, match="at least 1"):
        load_config(config)


def test_config_validation_direct():
    with pytest.raises(ValueError, match="unknown filter variant"):
        ExperimentConfig(variants=("kalman",))
    with pytest.raises(ValueError, match="positive"):
        ExperimentConfig(truth_dt=0.0)
    with pytest.raises(ValueError, match="seven"):
        ExperimentConfig(prior_mean=(1.0, 2.0), prior_std=(1.0, 2.0))
