"""Stochastic simulation: reference paths, terminal-law samplers, and the
moment study comparing the smooth-noise surrogate against Euler-Maruyama.

Randomness is organized as one root seed plus a counter-based substream per
path, so results are reproducible bit for bit regardless of chunking or the
order in which paths are generated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .basis import BrownianBasis, make_basis
from .matrix import symmetric_sqrt
from .models import GaussianBelief, MeasurementModel, SdeModel
from .filters import ObservationSequence
from .ode import NonFiniteState, SolverConfig
from .randode import propagate_series

Array = NDArray[np.float64]

DEFAULT_CHUNK = 512


def substream(seed: int, index: int | tuple[int, ...]) -> np.random.Generator:
    """Independent counter-based generator for one unit of work.

    ``index`` may be a single integer or a tuple of them (a multi-level
    key).  Streams for different indices under the same seed never overlap,
    and stream ``index`` is the same no matter how many other streams exist.
    """
    key = index if isinstance(index, tuple) else (index,)
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=key))
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a uniform time grid, including the initial point."""

    times: Array
    states: Array

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] != times.size:
            raise ValueError(
                f"states must have shape ({times.size}, n), got {states.shape}"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)


def _resolve_steps(horizon: float, dt: float) -> int:
    if dt <= 0.0 or horizon <= 0.0:
        raise ValueError("horizon and dt must be positive")
    steps = round(horizon / dt)
    if steps < 1 or abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} must be an integer multiple of dt {dt}")
    return steps


def euler_maruyama(
    model: SdeModel,
    x0: Array,
    horizon: float,
    dt: float,
    rng: np.random.Generator,
) -> Trajectory:
    """One Euler-Maruyama path: X_{j+1} = X_j + a dt + b (sqrt(dt) Z_j)."""
    steps = _resolve_steps(horizon, dt)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    states = np.empty((steps + 1, x0.size))
    states[0] = x0
    sqrt_dt = np.sqrt(dt)
    increments = rng.standard_normal((steps, model.d)) * sqrt_dt
    x = x0.copy()
    for j in range(steps):
        x = x + model.drift(x) * dt + model.diffusion(x) @ increments[j]
        states[j + 1] = x
    if not np.all(np.isfinite(states)):
        raise NonFiniteState("Euler-Maruyama path became non-finite")
    return Trajectory(times=np.arange(steps + 1) * dt, states=states)


def sample_terminal_euler(
    model: SdeModel,
    x0: Array,
    horizon: float,
    dt: float,
    n_paths: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> Array:
    """Terminal states of ``n_paths`` Euler-Maruyama paths, shape (n_paths, n).

    Path p always uses substream p of ``seed``; ``chunk`` only bounds the
    number of paths advanced simultaneously.
    """
    steps = _resolve_steps(horizon, dt)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    out = np.empty((n_paths, x0.size))
    sqrt_dt = np.sqrt(dt)
    for start in range(0, n_paths, chunk):
        stop = min(start + chunk, n_paths)
        size = stop - start
        z = np.empty((size, steps, model.d))
        for p in range(size):
            z[p] = substream(seed, start + p).standard_normal((steps, model.d))
        x = np.broadcast_to(x0, (size, x0.size)).copy()
        for j in range(steps):
            drive = np.einsum("bnd,bd->bn", model.diffusion(x), z[:, j, :])
            x = x + model.drift(x) * dt + drive * sqrt_dt
        if not np.all(np.isfinite(x)):
            raise NonFiniteState("Euler-Maruyama batch became non-finite")
        out[start:stop] = x
    return out


def series_expansion_path(
    model: SdeModel,
    x0: Array,
    basis: BrownianBasis,
    rng: np.random.Generator,
    config: SolverConfig | None = None,
) -> Array:
    """Terminal state of one smooth-surrogate path over [0, basis.horizon]."""
    config = config or SolverConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    coeffs = rng.standard_normal((1, basis.order, model.d))
    return propagate_series(model, x0[None, :], coeffs, basis, config)[0]


def sample_terminal_series(
    model: SdeModel,
    x0: Array,
    basis: BrownianBasis,
    n_paths: int,
    seed: int,
    config: SolverConfig | None = None,
) -> Array:
    """Terminal states of ``n_paths`` smooth-surrogate paths, (n_paths, n).

    Each path is integrated on its own (coefficients from substream p, one
    adaptive solve per path), so path p's result never depends on how many
    other paths were requested.  Batching the solves would be faster per
    call but would couple step-size control across paths.
    """
    config = config or SolverConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    out = np.empty((n_paths, x0.size))
    for p in range(n_paths):
        coeffs = substream(seed, p).standard_normal((1, basis.order, model.d))
        out[p] = propagate_series(model, x0[None, :], coeffs, basis, config)[0]
    return out


@dataclass(frozen=True, eq=False)
class MomentStudy:
    """Terminal-law summary for Euler-Maruyama and each expansion order.

    Row e of ``means``/``stds``/``quantile_values`` belongs to
    ``estimators[e]``; the first estimator is always the Euler reference.
    ``quantile_values`` has shape (estimators, n, levels) for quantile
    levels ``quantile_levels``.
    """

    estimators: tuple[str, ...]
    means: Array
    stds: Array
    quantile_levels: Array
    quantile_values: Array


def moment_study(
    model: SdeModel,
    x0: Array,
    horizon: float,
    dt: float,
    orders: tuple[int, ...],
    n_paths: int,
    seed: int,
    basis_family: str = "fourier_sine",
    config: SolverConfig | None = None,
    chunk: int = DEFAULT_CHUNK,
    quantile_count: int = 99,
) -> MomentStudy:
    """Compare terminal moments of the surrogate against Euler-Maruyama.

    Uses ``n_paths`` draws per estimator with common per-path substreams, so
    quantile comparisons between estimators see common random numbers.
    """
    if n_paths < 1000:
        raise ValueError("moment_study needs at least 1000 paths per estimator")
    levels = (np.arange(quantile_count) + 1.0) / (quantile_count + 1.0)
    samples = [sample_terminal_euler(model, x0, horizon, dt, n_paths, seed, chunk)]
    names = ["euler"]
    for order in orders:
        basis = make_basis(basis_family, horizon, order)
        samples.append(
            sample_terminal_series(model, x0, basis, n_paths, seed, config)
        )
        names.append(f"se_N{order}")
    means = np.array([s.mean(axis=0) for s in samples])
    stds = np.array([s.std(axis=0, ddof=1) for s in samples])
    quantile_values = np.array(
        [np.quantile(s, levels, axis=0).T for s in samples]
    )
    return MomentStudy(
        estimators=tuple(names),
        means=means,
        stds=stds,
        quantile_levels=levels,
        quantile_values=quantile_values,
    )


def synthesize_run(
    model: SdeModel,
    measurement: MeasurementModel,
    prior: GaussianBelief,
    n_obs: int,
    spacing: float,
    dt: float,
    rng: np.random.Generator,
) -> tuple[Trajectory, ObservationSequence]:
    """Draw one truth path from the prior and observe it at regular times.

    The initial state comes from the prior via its symmetric matrix root
    (so a zero prior variance reproduces the mean exactly), the path from
    Euler-Maruyama at resolution ``dt``, and the observations from the
    measurement model with fresh noise, all off the same generator in a
    fixed order.
    """
    if n_obs < 1:
        raise ValueError("n_obs must be at least 1")
    steps_per_obs = _resolve_steps(spacing, dt)
    x0 = prior.mean + symmetric_sqrt(prior.cov) @ rng.standard_normal(prior.n)
    trajectory = euler_maruyama(model, x0, n_obs * spacing, dt, rng)
    obs_idx = steps_per_obs * (np.arange(n_obs) + 1)
    clean = measurement.h(trajectory.states[obs_idx])
    noise_root = symmetric_sqrt(measurement.noise_cov)
    noise = rng.standard_normal((n_obs, measurement.s)) @ noise_root.T
    times = (np.arange(n_obs) + 1.0) * spacing
    return trajectory, ObservationSequence(times=times, values=clean + noise)
