"""Ito diffusion and measurement models, plus the concrete systems used in
the tests and benchmarks.

All state-valued callables are batched: they accept arrays of shape
``(..., n)`` and vectorize over the leading axes, which lets sigma-point sets
and Monte Carlo path bundles evaluate in a single call.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _aircraft_fast

Array = NDArray[np.float64]

# Central-difference step scale for diffusion derivatives when a model does
# not supply analytic partials.
FD_STEP_SCALE = 1e-5


@dataclass(frozen=True, eq=False)
class SdeModel:
    """Ito diffusion dX = a(X) dt + b(X) dW with n states, d noise sources.

    ``drift`` maps ``(..., n)`` to ``(..., n)`` and ``diffusion`` to
    ``(..., n, d)``.  The driving Brownian motion W is standard (identity
    covariance rate); model-specific noise scaling belongs inside ``b``.

    ``diffusion_partials``, when given, returns every state gradient of the
    diffusion entries with shape ``(..., n, d, n)`` indexed as
    ``[i, k, j] = d b[i,k] / d x[j]``; without it the drift correction below
    falls back to central finite differences.  ``drift_jacobian`` is carried
    for linearization-based consumers and is not used here.

    The two fused callables are optional compiled fast paths that must agree
    with the generic composition to floating-point accuracy.
    ``fused_series_rhs(x, noise)`` maps batches ``(m, n), (m, d)`` to the
    corrected drift plus diffusion times noise, ``(m, n)``.
    ``fused_moment_rhs(packed)`` maps the flattened pair (mean, cov) of
    length ``n + n**2`` to its time derivative under the cubature closure
    with Cholesky roots; consumers must check that their sigma-point rule
    matches before using it.
    """

    n: int
    d: int
    drift: Callable[[Array], Array]
    diffusion: Callable[[Array], Array]
    diffusion_partials: Callable[[Array], Array] | None = None
    drift_jacobian: Callable[[Array], Array] | None = None
    fused_series_rhs: Callable[[Array, Array], Array] | None = None
    fused_moment_rhs: Callable[[Array], Array] | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.n < 1 or self.d < 1:
            raise ValueError("state and noise dimensions must be positive")


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Discrete observation Y = h(X) + r with r ~ N(0, noise_cov)."""

    s: int
    h: Callable[[Array], Array]
    noise_cov: Array

    def __post_init__(self) -> None:
        cov = np.asarray(self.noise_cov, dtype=float)
        if cov.shape != (self.s, self.s):
            raise ValueError(f"noise_cov must have shape ({self.s}, {self.s})")
        object.__setattr__(self, "noise_cov", cov)


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """Gaussian state estimate (mean, cov) tagged with its time."""

    mean: Array
    cov: Array
    time: float = 0.0

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"cov shape {cov.shape} does not match state dimension {mean.size}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n(self) -> int:
        return self.mean.size


def stratonovich_correction(model: SdeModel, x: Array) -> Array:
    """Drift adjustment c with c_i = -1/2 sum_{j,k} b[j,k] * d b[i,k]/d x[j].

    Adding c to the drift of the smooth-noise approximating ODE makes its
    limiting law the Ito law of ``model`` instead of the Stratonovich one.
    Uses analytic ``diffusion_partials`` when available, otherwise central
    finite differences with per-coordinate step 1e-5 * (1 + |x_j|).
    """
    x = np.asarray(x, dtype=float)
    b = model.diffusion(x)
    if model.diffusion_partials is not None:
        partials = model.diffusion_partials(x)
        return -0.5 * np.einsum("...jk,...ikj->...i", b, partials)
    out = np.zeros(x.shape, dtype=float)
    for j in range(model.n):
        step = FD_STEP_SCALE * (1.0 + np.abs(x[..., j]))
        x_plus = x.copy()
        x_plus[..., j] += step
        x_minus = x.copy()
        x_minus[..., j] -= step
        db_dxj = (model.diffusion(x_plus) - model.diffusion(x_minus)) / (
            2.0 * step
        )[..., None, None]
        out -= 0.5 * np.einsum("...k,...ik->...i", b[..., j, :], db_dxj)
    return out


def ito_to_stratonovich(model: SdeModel) -> SdeModel:
    """Return a model with the correction folded into the drift.

    Solving the smooth-noise ODE with the returned drift targets the Ito law
    of the original model.  For state-independent diffusion the correction is
    identically zero and the drift is unchanged in value.
    """

    def corrected_drift(x: Array) -> Array:
        return model.drift(x) + stratonovich_correction(model, x)

    return SdeModel(
        n=model.n,
        d=model.d,
        drift=corrected_drift,
        diffusion=model.diffusion,
        diffusion_partials=model.diffusion_partials,
        name=f"{model.name}+correction" if model.name else "+correction",
    )


def linear_model(theta: float, sigma: float) -> SdeModel:
    """Scalar Ornstein-Uhlenbeck process dX = -theta X dt + sigma dW."""
    theta = float(theta)
    sigma = float(sigma)

    def drift(x: Array) -> Array:
        return -theta * np.asarray(x, dtype=float)

    def diffusion(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (1, 1), dtype=float)
        out[...] = sigma
        return out

    def diffusion_partials(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (1, 1, 1), dtype=float)

    def drift_jacobian(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (1, 1), dtype=float)
        out[...] = -theta
        return out

    return SdeModel(
        n=1,
        d=1,
        drift=drift,
        diffusion=diffusion,
        diffusion_partials=diffusion_partials,
        drift_jacobian=drift_jacobian,
        name=f"ou(theta={theta:g}, sigma={sigma:g})",
    )


def aircraft_model(w_cov_diag: Sequence[float] | None = None) -> SdeModel:
    """Seven-state coordinated-turn model driven by four noise sources.

    States 1..7 are planar position/velocity pairs (x1, x2) and (x3, x4),
    the vertical pair (x5, x6), and the turn rate x7.  The planar velocity
    rotates at rate x7; noise enters the velocities through unit vectors
    along-track, cross-track in the horizontal plane, and vertically, and
    drives the turn rate directly.

    ``w_cov_diag`` gives the variance rate q_k of each noise source; column k
    of the diffusion is scaled by sqrt(q_k) so the driving Brownian motion
    itself stays standard.  Defaults to all ones.
    """
    if w_cov_diag is None:
        scale = np.ones(4)
    else:
        scale = np.sqrt(np.asarray(list(w_cov_diag), dtype=float))
        if scale.shape != (4,):
            raise ValueError("w_cov_diag must have four entries")
        if np.any(~np.isfinite(scale)):
            raise ValueError("w_cov_diag entries must be finite and non-negative")

    def drift(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        out[..., 0] = x[..., 1]
        out[..., 1] = -x[..., 6] * x[..., 3]
        out[..., 2] = x[..., 3]
        out[..., 3] = x[..., 6] * x[..., 1]
        out[..., 4] = x[..., 5]
        out[..., 5] = 0.0
        out[..., 6] = 0.0
        return out

    def diffusion(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        p = x[..., 1]
        q = x[..., 3]
        r = x[..., 5]
        sp = 1.0 + p * p
        sq = 1.0 + q * q
        sr = 1.0 + r * r
        w2 = sp + q * q  # 1 + p^2 + q^2, squared horizontal speed measure
        v2 = w2 + r * r  # 1 + p^2 + q^2 + r^2
        v = np.sqrt(v2)
        w = np.sqrt(w2)
        rsp = np.sqrt(sp)
        rsq = np.sqrt(sq)
        rsr = np.sqrt(sr)
        out = np.zeros(x.shape[:-1] + (7, 4), dtype=float)
        out[..., 1, 0] = scale[0] * rsp / v
        out[..., 1, 1] = scale[1] * rsq / w
        out[..., 1, 2] = scale[2] * rsp * rsr / (v * w)
        out[..., 3, 0] = scale[0] * rsq / v
        out[..., 3, 1] = -scale[1] * rsp / w
        out[..., 3, 2] = scale[2] * rsq * rsr / (v * w)
        out[..., 5, 0] = scale[0] * rsr / v
        out[..., 5, 2] = -scale[2] * w / v
        out[..., 6, 3] = scale[3]
        return out

    def diffusion_partials(x: Array) -> Array:
        # Only velocity rows (i in {2,4,6}) depend on the state, and only on
        # the velocity coordinates (j in {2,4,6}); everything else is zero.
        x = np.asarray(x, dtype=float)
        p = x[..., 1]
        q = x[..., 3]
        r = x[..., 5]
        sp = 1.0 + p * p
        sq = 1.0 + q * q
        sr = 1.0 + r * r
        w2 = sp + q * q
        v2 = w2 + r * r
        v = np.sqrt(v2)
        w = np.sqrt(w2)
        rsp = np.sqrt(sp)
        rsq = np.sqrt(sq)
        rsr = np.sqrt(sr)
        v3 = v2 * v
        w3 = w2 * w
        inv_v2 = 1.0 / v2
        inv_w2 = 1.0 / w2
        vw = v * w
        out = np.zeros(x.shape[:-1] + (7, 4, 7), dtype=float)

        # Column 1: along-track unit vector (rsp, rsq, rsr) / v.
        out[..., 1, 0, 1] = scale[0] * p * (q * q + r * r) / (rsp * v3)
        out[..., 1, 0, 3] = -scale[0] * rsp * q / v3
        out[..., 1, 0, 5] = -scale[0] * rsp * r / v3
        out[..., 3, 0, 1] = -scale[0] * rsq * p / v3
        out[..., 3, 0, 3] = scale[0] * q * (p * p + r * r) / (rsq * v3)
        out[..., 3, 0, 5] = -scale[0] * rsq * r / v3
        out[..., 5, 0, 1] = -scale[0] * rsr * p / v3
        out[..., 5, 0, 3] = -scale[0] * rsr * q / v3
        out[..., 5, 0, 5] = scale[0] * r * (p * p + q * q) / (rsr * v3)

        # Column 2: horizontal cross-track (rsq, -rsp, 0) / w.
        out[..., 1, 1, 1] = -scale[1] * rsq * p / w3
        out[..., 1, 1, 3] = scale[1] * q * p * p / (rsq * w3)
        out[..., 3, 1, 1] = -scale[1] * p * q * q / (rsp * w3)
        out[..., 3, 1, 3] = scale[1] * rsp * q / w3

        # Column 3: vertical tilt (rsp*rsr, rsq*rsr, -w^2) / (v*w).
        out[..., 1, 2, 1] = (
            scale[2] * p * rsr / vw * (1.0 / sp - inv_v2 - inv_w2) * rsp
        )
        out[..., 1, 2, 3] = -scale[2] * q * rsp * rsr / vw * (inv_v2 + inv_w2)
        out[..., 1, 2, 5] = scale[2] * r * rsp / vw * (1.0 / sr - inv_v2) * rsr
        out[..., 3, 2, 1] = -scale[2] * p * rsq * rsr / vw * (inv_v2 + inv_w2)
        out[..., 3, 2, 3] = (
            scale[2] * q * rsr / vw * (1.0 / sq - inv_v2 - inv_w2) * rsq
        )
        out[..., 3, 2, 5] = scale[2] * r * rsq / vw * (1.0 / sr - inv_v2) * rsr
        out[..., 5, 2, 1] = -scale[2] * p * r * r / (w * v3)
        out[..., 5, 2, 3] = -scale[2] * q * r * r / (w * v3)
        out[..., 5, 2, 5] = scale[2] * w * r / v3

        return out

    fused_series = None
    fused_moment = None
    if _aircraft_fast.HAVE_NUMBA:
        q_rates = np.ascontiguousarray(scale * scale)

        def fused_series(x: Array, noise: Array) -> Array:
            return _aircraft_fast.series_rhs(x, noise, q_rates)

        def fused_moment(packed: Array) -> Array:
            return _aircraft_fast.moment_rhs(packed, q_rates)

    return SdeModel(
        n=7,
        d=4,
        drift=drift,
        diffusion=diffusion,
        diffusion_partials=diffusion_partials,
        fused_series_rhs=fused_series,
        fused_moment_rhs=fused_moment,
        name="aircraft",
    )


def radar_measurement(
    noise_diag: Sequence[float] = (50.0, 0.1, 0.1)
) -> MeasurementModel:
    """Range, azimuth, and elevation of the position (x1, x3, x5)."""

    def h(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        x1 = x[..., 0]
        x3 = x[..., 2]
        x5 = x[..., 4]
        horiz = np.hypot(x1, x3)
        out = np.empty(x.shape[:-1] + (3,), dtype=float)
        out[..., 0] = np.hypot(horiz, x5)
        out[..., 1] = np.arctan2(x3, x1)
        out[..., 2] = np.arctan2(x5, horiz)
        return out

    return MeasurementModel(s=3, h=h, noise_cov=np.diag(list(noise_diag)))
