"""Continuous-discrete Gaussian filters built on sigma-point transforms.

Both filters alternate a continuous prediction with the same discrete
measurement update.  They differ only in how the prediction pushes the
belief through the SDE:

* ``se_ukf`` augments the state with the coefficient block of a truncated
  Brownian expansion, places sigma points over the joint Gaussian, and runs
  each point through the smooth-noise ODE.  Optionally the horizon is split
  into subintervals, re-Gaussianizing and drawing a fresh augmented set per
  segment so the expansion only ever has to cover a short interval.
* ``moment_ode_ukf`` integrates closed moment differential equations for
  (mean, cov), evaluating the Gaussian expectations with sigma points that
  are regenerated at every stage evaluation.

The update regenerates sigma points on the predictive belief; predictive
and posterior moments therefore never depend on how the prediction was
produced, which keeps the two variants interchangeable after the predict
step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .basis import BrownianBasis
from .matrix import EigenFailure, NotPositiveDefinite, validate_covariance
from .models import GaussianBelief, MeasurementModel, SdeModel
from .ode import IvpProblem, MaxStepsExceeded, NonFiniteState, SolverConfig, solve_ivp
from .randode import propagate_series
from .sigma import DegenerateScaling, SigmaRule, generate, transform_moments

Array = NDArray[np.float64]

# Spread n_aug + lambda targeted by the default series-expansion rule; equals
# the state dimension of the seven-state benchmark model so the spread matches
# the plain state-space transform.
DEFAULT_SE_SPREAD_SQ = 7.0


class SingularInnovation(ValueError):
    """Innovation covariance is numerically singular."""


def default_se_rule(
    n_aug: int, spread_sq: float = DEFAULT_SE_SPREAD_SQ, sqrt_kind: str = "symmetric"
) -> SigmaRule:
    """Scaled-UT rule pinning the spread n_aug + lambda at ``spread_sq``.

    With alpha = 1 and beta = 0 this reduces the scaled transform to the
    classic one with kappa = spread_sq - n_aug; the augmented-space points
    then sit at the same radius as a plain transform in ``spread_sq``
    dimensions instead of drifting outward with the expansion order.
    """
    return SigmaRule(
        scheme="scaled_ut",
        alpha=1.0,
        kappa=float(spread_sq) - float(n_aug),
        beta=0.0,
        sqrt_kind=sqrt_kind,
    )


def default_moment_rule(sqrt_kind: str = "cholesky") -> SigmaRule:
    """Spherical cubature rule used by the moment-ODE baseline."""
    return SigmaRule(scheme="cubature", sqrt_kind=sqrt_kind)


@dataclass(frozen=True, eq=False)
class FilterConfig:
    """Everything a filter run needs beyond the data.

    ``rule`` and ``update_rule`` default to the variant's standard choices:
    the series-expansion filter uses the pinned-spread scaled transform with
    a symmetric matrix root over the augmented space, the moment baseline
    uses spherical cubature with a Cholesky root, and the update always
    falls back to spherical cubature with the prediction's root kind.
    ``subintervals`` splits every prediction horizon into that many
    re-Gaussianized segments (series-expansion variant only).
    """

    model: SdeModel
    measurement: MeasurementModel
    variant: str = "se_ukf"
    basis: BrownianBasis | None = None
    rule: SigmaRule | None = None
    update_rule: SigmaRule | None = None
    ode: SolverConfig = field(default_factory=SolverConfig)
    subintervals: int = 1

    def __post_init__(self) -> None:
        if self.variant not in ("se_ukf", "moment_ode_ukf"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "se_ukf" and self.basis is None:
            raise ValueError("se_ukf needs a basis")
        if self.subintervals < 1:
            raise ValueError("subintervals must be at least 1")

    def resolved_rule(self) -> SigmaRule:
        if self.rule is not None:
            return self.rule
        if self.variant == "se_ukf":
            assert self.basis is not None
            n_aug = self.model.n + self.basis.order * self.model.d
            return default_se_rule(n_aug)
        return default_moment_rule()

    def resolved_update_rule(self) -> SigmaRule:
        if self.update_rule is not None:
            return self.update_rule
        return SigmaRule(scheme="cubature", sqrt_kind=self.resolved_rule().sqrt_kind)


@dataclass(frozen=True, eq=False)
class ObservationSequence:
    """Measurement times (strictly increasing) and stacked values."""

    times: Array
    values: Array

    def __post_init__(self) -> None:
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != times.size:
            raise ValueError(
                f"values must have shape ({times.size}, s), got {values.shape}"
            )
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise ValueError("observation times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return self.times.size


@dataclass(frozen=True, eq=False)
class FilterRunResult:
    """Posterior and predictive beliefs per observation, plus failure info.

    A diverged run keeps the beliefs accumulated before the failure;
    ``failed_at`` is the observation time being processed when it happened.
    """

    posteriors: tuple[GaussianBelief, ...]
    predictives: tuple[GaussianBelief, ...]
    diverged: bool = False
    reason: str | None = None
    failed_at: float | None = None

    def posterior_means(self) -> Array:
        return np.array([b.mean for b in self.posteriors])


def se_predict(
    prior: GaussianBelief, config: FilterConfig, horizon: float
) -> GaussianBelief:
    """Push a belief through the SDE via the series-expansion transform."""
    if config.variant != "se_ukf":
        raise ValueError("se_predict needs a se_ukf configuration")
    if horizon < 0.0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    if horizon == 0.0:
        return prior
    assert config.basis is not None
    model = config.model
    n = model.n
    order = config.basis.order
    d = model.d
    n_coeff = order * d
    rule = config.resolved_rule()
    segments = config.subintervals
    seg_basis = config.basis.with_horizon(horizon / segments)
    aug_mean = np.zeros(n + n_coeff)
    aug_cov = np.eye(n + n_coeff)
    mean, cov = prior.mean, prior.cov
    for _ in range(segments):
        aug_mean[:n] = mean
        aug_cov[:n, :n] = cov
        sigma = generate(aug_mean, aug_cov, rule)
        states = sigma.points[:, :n]
        coeffs = sigma.points[:, n:].reshape(sigma.count, order, d)
        images = propagate_series(model, states, coeffs, seg_basis, config.ode)
        mean, cov, _ = transform_moments(sigma, images)
    return GaussianBelief(mean=mean, cov=cov, time=prior.time + horizon)


def moment_ode_predict(
    prior: GaussianBelief, config: FilterConfig, horizon: float
) -> GaussianBelief:
    """Integrate sigma-point moment differential equations for (mean, cov).

    d mean/dt is the expected drift; d cov/dt collects the symmetrized
    drift/state cross moment plus the expected diffusion outer product.
    Expectations are Gaussian with sigma points regenerated from the current
    (mean, cov) at every stage evaluation of the integrator.
    """
    if horizon < 0.0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    if horizon == 0.0:
        return prior
    model = config.model
    n = model.n
    rule = config.resolved_rule() if config.variant == "moment_ode_ukf" else default_moment_rule()
    # alpha/kappa/beta are ignored for the cubature scheme, so scheme and
    # root kind fully determine whether the compiled moment kernel applies.
    fused = model.fused_moment_rhs
    if fused is not None and rule.scheme == "cubature" and rule.sqrt_kind == "cholesky":

        def rhs(t: float, packed: Array) -> Array:
            try:
                return fused(packed)
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(
                    "covariance lost definiteness during moment integration"
                ) from exc

    else:

        def rhs(t: float, packed: Array) -> Array:
            mean = packed[:n]
            cov = packed[n:].reshape(n, n)
            sigma = generate(mean, cov, rule)
            drift_pts = model.drift(sigma.points)
            drift_mean = sigma.w_mean @ drift_pts
            dev = sigma.points - mean
            drift_dev = drift_pts - drift_mean
            cross = (dev * sigma.w_cov[:, None]).T @ drift_dev
            diff_pts = model.diffusion(sigma.points)
            weighted = diff_pts * sigma.w_mean[:, None, None]
            outer = np.tensordot(weighted, diff_pts, axes=([0, 2], [0, 2]))
            dcov = cross + cross.T + outer
            return np.concatenate([drift_mean, dcov.ravel()])

    packed0 = np.concatenate([prior.mean, prior.cov.ravel()])
    problem = IvpProblem(rhs=rhs, y0=packed0, t_span=(0.0, horizon))
    packed1 = solve_ivp(problem, config.ode)
    mean = packed1[:n]
    cov = 0.5 * (packed1[n:].reshape(n, n) + packed1[n:].reshape(n, n).T)
    return GaussianBelief(mean=mean, cov=cov, time=prior.time + horizon)


def update(
    predictive: GaussianBelief, y: Array, config: FilterConfig
) -> GaussianBelief:
    """Condition a predictive belief on one measurement.

    Sigma points are generated on the predictive belief and pushed through
    the measurement function; the Kalman gain then follows from the
    innovation and cross covariances.  The posterior covariance is checked
    for numerical definiteness so a collapse surfaces here rather than at
    some later factorization.
    """
    measurement = config.measurement
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (measurement.s,):
        raise ValueError(f"measurement must have shape ({measurement.s},)")
    rule = config.resolved_update_rule()
    sigma = generate(predictive.mean, predictive.cov, rule)
    images = measurement.h(sigma.points)
    mu, innovation_cov, cross = transform_moments(sigma, images)
    innovation_cov = innovation_cov + measurement.noise_cov
    try:
        gain = np.linalg.solve(innovation_cov, cross.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is singular") from exc
    mean = predictive.mean + gain @ (y - mu)
    cov = predictive.cov - gain @ innovation_cov @ gain.T
    cov = 0.5 * (cov + cov.T)
    validate_covariance(cov, name="posterior covariance")
    return GaussianBelief(mean=mean, cov=cov, time=predictive.time)


#: Exception types that count as filter divergence rather than usage errors.
DIVERGENCE_ERRORS = (
    NotPositiveDefinite,
    EigenFailure,
    DegenerateScaling,
    SingularInnovation,
    MaxStepsExceeded,
    NonFiniteState,
)


def run_filter(
    initial: GaussianBelief,
    observations: ObservationSequence,
    config: FilterConfig,
) -> FilterRunResult:
    """Alternate prediction and update over an observation sequence.

    Numerical failures (covariance collapse, singular innovation, ODE
    blow-up) are recorded as divergence instead of raised; everything
    already computed stays in the result.
    """
    predict = se_predict if config.variant == "se_ukf" else moment_ode_predict
    posteriors: list[GaussianBelief] = []
    predictives: list[GaussianBelief] = []
    belief = initial
    for t_k, y_k in zip(observations.times, observations.values):
        try:
            predictive = predict(belief, config, t_k - belief.time)
            predictive = GaussianBelief(
                mean=predictive.mean, cov=predictive.cov, time=t_k
            )
            posterior = update(predictive, y_k, config)
        except DIVERGENCE_ERRORS as exc:
            return FilterRunResult(
                posteriors=tuple(posteriors),
                predictives=tuple(predictives),
                diverged=True,
                reason=type(exc).__name__,
                failed_at=float(t_k),
            )
        predictives.append(predictive)
        posteriors.append(posterior)
        belief = posterior
    return FilterRunResult(
        posteriors=tuple(posteriors), predictives=tuple(predictives)
    )
