"""Experiment configuration: a flat dataclass of knobs plus an INI loader.

The file format uses sections mirroring the package modules; every key has a
default matching the aircraft tracking benchmark, so an empty file is a
valid configuration.  Unknown sections or keys are rejected rather than
ignored, and the string ``auto`` selects the documented adaptive default
where a key supports it.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields

import math


class ConfigError(Exception):
    """Configuration file is malformed or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of the simulators, filters, and benchmark harness."""

    # [model]
    model_name: str = "aircraft"
    model_qw: float = 1.1
    noise_diag: tuple[float, ...] = (10.0, 0.2, 0.2)
    theta: float = 0.5
    sigma: float = 1.0
    # [measurement]
    meas_noise_diag: tuple[float, ...] = (50.0, 0.1, 0.1)
    # [prior]
    prior_mean: tuple[float, ...] = (1000.0, 0.0, 2650.0, 150.0, 200.0, 0.0, 6.0)
    prior_std: tuple[float, ...] = (100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 0.1)
    # [observations]
    obs_count: int = 20
    obs_spacing: float = 8.0
    truth_dt: float = 0.005
    # [filter]
    variants: tuple[str, ...] = ("se_ukf", "moment_ode_ukf")
    basis_family: str = "fourier_sine"
    order: int = 8
    subintervals: int = 1
    alpha: float = 1.0
    beta: float = 0.0
    kappa: float | None = None  # None = auto: pin the spread n_aug + lambda at 7
    sqrt_kind: str = "symmetric"
    # [ode]
    ode_method: str = "dormand_prince"
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    max_steps: int = 100_000
    moment_steps_per_unit_time: float | None = None  # None = auto: 200 * qw
    # [bench]
    runs: int = 100
    seed: int = 0
    qw_grid: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9, 1.1)
    k_grid: tuple[int, ...] = (1, 2, 4, 8, 16, 32)
    sweep_qw: float = 1.1
    jobs: int = 1
    out_dir: str = "results"
    # [simulate]
    paths: int = 10_000
    sim_orders: tuple[int, ...] = (1, 4, 6, 10)
    sim_horizon: float = 8.0
    sim_dt: float = 0.005

    def __post_init__(self) -> None:
        if self.model_name not in ("aircraft", "ou"):
            raise ValueError(f"unknown model {self.model_name!r}")
        if self.model_name == "aircraft":
            if len(self.noise_diag) != 3:
                raise ValueError("noise_diag needs the three fixed variance rates")
            if len(self.prior_mean) != 7 or len(self.prior_std) != 7:
                raise ValueError("aircraft prior needs seven components")
            if len(self.meas_noise_diag) != 3:
                raise ValueError("meas_noise_diag needs three entries")
        if len(self.prior_mean) != len(self.prior_std):
            raise ValueError("prior mean and std lengths differ")
        for v in self.variants:
            if v not in ("se_ukf", "moment_ode_ukf"):
                raise ValueError(f"unknown filter variant {v!r}")
        if not self.variants:
            raise ValueError("at least one filter variant is required")
        if self.basis_family not in ("fourier_sine", "haar", "linear_optimal"):
            raise ValueError(f"unknown basis family {self.basis_family!r}")
        if self.sqrt_kind not in ("cholesky", "symmetric"):
            raise ValueError(f"unknown sqrt_kind {self.sqrt_kind!r}")
        if self.ode_method not in ("dormand_prince", "rk4_fixed"):
            raise ValueError(f"unknown ode method {self.ode_method!r}")
        positive = {
            "model_qw": self.model_qw,
            "obs_spacing": self.obs_spacing,
            "truth_dt": self.truth_dt,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "sweep_qw": self.sweep_qw,
            "sim_horizon": self.sim_horizon,
            "sim_dt": self.sim_dt,
        }
        for name, value in positive.items():
            if not value > 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        at_least_one = {
            "obs_count": self.obs_count,
            "order": self.order,
            "subintervals": self.subintervals,
            "runs": self.runs,
            "jobs": self.jobs,
            "paths": self.paths,
            "max_steps": self.max_steps,
        }
        for name, value in at_least_one.items():
            if value < 1:
                raise ValueError(f"{name} must be at least 1, got {value}")
        for qw in (*self.qw_grid, self.model_qw):
            if not qw > 0.0:
                raise ValueError(f"Q_W values must be positive, got {qw}")
        for k in self.k_grid:
            if k < 1:
                raise ValueError(f"subinterval counts must be at least 1, got {k}")
        for order in self.sim_orders:
            if order < 1:
                raise ValueError(f"expansion orders must be at least 1, got {order}")

    def moment_steps(self, qw: float) -> float:
        """Fixed-grid density for the moment integrator at noise level qw."""
        if self.moment_steps_per_unit_time is not None:
            return self.moment_steps_per_unit_time
        return 200.0 * qw


def _parse_float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_auto_float(text: str) -> float | None:
    text = text.strip()
    return None if text.lower() == "auto" else _parse_float(text)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(_parse_float(part) for part in text.split(",") if part.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(_parse_int(part.strip()) for part in text.split(",") if part.strip())


def _parse_strs(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


# section -> key -> (dataclass field, parser)
_SCHEMA = {
    "model": {
        "name": ("model_name", _parse_str),
        "qw": ("model_qw", _parse_float),
        "noise_diag": ("noise_diag", _parse_floats),
        "theta": ("theta", _parse_float),
        "sigma": ("sigma", _parse_float),
    },
    "measurement": {
        "noise_diag": ("meas_noise_diag", _parse_floats),
    },
    "prior": {
        "mean": ("prior_mean", _parse_floats),
        "std": ("prior_std", _parse_floats),
    },
    "observations": {
        "count": ("obs_count", _parse_int),
        "spacing": ("obs_spacing", _parse_float),
        "truth_dt": ("truth_dt", _parse_float),
    },
    "filter": {
        "variants": ("variants", _parse_strs),
        "basis_family": ("basis_family", _parse_str),
        "order": ("order", _parse_int),
        "subintervals": ("subintervals", _parse_int),
        "alpha": ("alpha", _parse_float),
        "beta": ("beta", _parse_float),
        "kappa": ("kappa", _parse_auto_float),
        "sqrt_kind": ("sqrt_kind", _parse_str),
    },
    "ode": {
        "method": ("ode_method", _parse_str),
        "rel_tol": ("rel_tol", _parse_float),
        "abs_tol": ("abs_tol", _parse_float),
        "max_steps": ("max_steps", _parse_int),
        "moment_steps_per_unit_time": (
            "moment_steps_per_unit_time",
            _parse_auto_float,
        ),
    },
    "bench": {
        "runs": ("runs", _parse_int),
        "seed": ("seed", _parse_int),
        "qw_grid": ("qw_grid", _parse_floats),
        "k_grid": ("k_grid", _parse_ints),
        "sweep_qw": ("sweep_qw", _parse_float),
        "jobs": ("jobs", _parse_int),
        "out_dir": ("out_dir", _parse_str),
    },
    "simulate": {
        "paths": ("paths", _parse_int),
        "orders": ("sim_orders", _parse_ints),
        "horizon": ("sim_horizon", _parse_float),
        "dt": ("sim_dt", _parse_float),
    },
}


def default_config() -> ExperimentConfig:
    """The benchmark defaults; equivalent to loading an empty file."""
    return ExperimentConfig()


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an INI experiment file.

    Raises ConfigError for unknown sections/keys, unparsable values, or
    values that fail cross-field validation; I/O problems (missing file,
    permissions) surface as the original OSError.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, "r", encoding="utf-8") as handle:
        try:
            parser.read_file(handle, source=path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    kwargs: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            field_name, parse = _SCHEMA[section][key]
            try:
                kwargs[field_name] = parse(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: bad value for [{section}] {key} = {raw!r}: {exc}"
                ) from exc
    try:
        return ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
for _section, _keys in _SCHEMA.items():
    for _key, (_field, _) in _keys.items():
        assert _field in _FIELD_NAMES, f"schema maps to unknown field {_field}"
