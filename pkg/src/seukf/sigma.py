"""Deterministic sigma-point sets and the weighted moment transform.

Three schemes share one interface: the scaled unscented transform with
parameters (alpha, kappa, beta), the spherical cubature rule (the alpha=1,
kappa=0, beta=0 special case, kept as its own name because it is the common
baseline), and a degree-3 Gauss-Hermite tensor grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .matrix import cholesky_sqrt, symmetric_sqrt

Array = NDArray[np.float64]

# Tensor grids grow as 3^n; beyond this the transform is not worth running.
GAUSS_HERMITE_MAX_DIM = 12


class DegenerateScaling(ValueError):
    """Scaled-transform spread n + lambda is not positive."""


class DimensionTooLarge(ValueError):
    """Tensor-grid scheme requested in too many dimensions."""


@dataclass(frozen=True)
class SigmaRule:
    """Scheme selector plus scaling parameters and matrix-root choice."""

    scheme: str = "scaled_ut"
    alpha: float = 1.0
    kappa: float = 0.0
    beta: float = 0.0
    sqrt_kind: str = "cholesky"

    def __post_init__(self) -> None:
        if self.scheme not in ("scaled_ut", "cubature", "gauss_hermite_3"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.sqrt_kind not in ("cholesky", "symmetric"):
            raise ValueError(f"unknown sqrt_kind {self.sqrt_kind!r}")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True, eq=False)
class SigmaSet:
    """Points with their mean/covariance weights and the generating mean.

    The generating mean is kept so cross-covariances against the input
    space can be formed without re-deriving it from the points.
    """

    points: Array  # (count, n)
    w_mean: Array  # (count,)
    w_cov: Array  # (count,)
    center: Array  # (n,)

    @property
    def count(self) -> int:
        return self.points.shape[0]


def generate(mean: Array, cov: Array, rule: SigmaRule) -> SigmaSet:
    """Sigma points for N(mean, cov) under the given rule."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.asarray(cov, dtype=float)
    n = mean.size
    if cov.shape != (n, n):
        raise ValueError(f"cov shape {cov.shape} does not match dimension {n}")
    root = cholesky_sqrt(cov) if rule.sqrt_kind == "cholesky" else symmetric_sqrt(cov)
    if rule.scheme == "gauss_hermite_3":
        return _gauss_hermite_3(mean, root)
    if rule.scheme == "cubature":
        lam = 0.0
        w_mean_0 = 0.0
        w_cov_0 = 0.0
    else:
        lam = rule.alpha**2 * (n + rule.kappa) - n
        if n + lam <= 0.0:
            raise DegenerateScaling(
                f"n + lambda = {n + lam:.6g} must be positive (n={n}, "
                f"alpha={rule.alpha}, kappa={rule.kappa})"
            )
        w_mean_0 = lam / (n + lam)
        w_cov_0 = lam / (n + lam) + (1.0 - rule.alpha**2 + rule.beta)
    spread = np.sqrt(n + lam)
    points = np.empty((2 * n + 1, n))
    points[0] = mean
    points[1 : n + 1] = mean + spread * root.T
    points[n + 1 :] = mean - spread * root.T
    w_rest = 1.0 / (2.0 * (n + lam))
    w_mean = np.full(2 * n + 1, w_rest)
    w_cov = np.full(2 * n + 1, w_rest)
    w_mean[0] = w_mean_0
    w_cov[0] = w_cov_0
    return SigmaSet(points=points, w_mean=w_mean, w_cov=w_cov, center=mean)


def _gauss_hermite_3(mean: Array, root: Array) -> SigmaSet:
    n = mean.size
    if n > GAUSS_HERMITE_MAX_DIM:
        raise DimensionTooLarge(
            f"gauss_hermite_3 needs 3^n points; n={n} exceeds the cap "
            f"{GAUSS_HERMITE_MAX_DIM}"
        )
    nodes = np.array([-np.sqrt(3.0), 0.0, np.sqrt(3.0)])
    node_w = np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])
    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    xi = np.stack([g.ravel() for g in grids], axis=-1)  # (3^n, n)
    w_grids = np.meshgrid(*([node_w] * n), indexing="ij")
    weights = np.ones(3**n)
    for g in w_grids:
        weights *= g.ravel()
    points = mean + xi @ root.T
    return SigmaSet(points=points, w_mean=weights, w_cov=weights, center=mean)


def transform_moments(
    sigma: SigmaSet, images: Array
) -> tuple[Array, Array, Array]:
    """Weighted mean, covariance, and input/output cross-covariance.

    ``images`` holds the transformed points, one row per sigma point.  The
    returned covariance has no additive noise term; callers add their own.
    """
    images = np.asarray(images, dtype=float)
    if images.ndim != 2 or images.shape[0] != sigma.count:
        raise ValueError(
            f"images must have shape ({sigma.count}, p), got {images.shape}"
        )
    mu = sigma.w_mean @ images
    dev = images - mu
    weighted = dev * sigma.w_cov[:, None]
    cov = weighted.T @ dev
    cov = 0.5 * (cov + cov.T)
    cross = ((sigma.points - sigma.center) * sigma.w_cov[:, None]).T @ dev
    return mu, cov, cross
