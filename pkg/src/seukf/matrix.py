"""Symmetric positive-definite matrix primitives shared by the filters.

Covariances accumulate round-off asymmetry through repeated predict/update
cycles, so every factorization here symmetrizes its input first.  Two square
roots are provided because sigma-point spreads built from different roots of
the same covariance propagate differently through a nonlinear map even though
they encode identical second moments.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]

# Eigenvalues in [-SLACK * lambda_max, 0] are treated as round-off and clamped
# to zero; anything more negative is a genuine loss of definiteness.
NEGATIVE_EIGENVALUE_SLACK = 1e-10

# Relative Frobenius asymmetry allowed by validate_covariance.
SYMMETRY_RTOL = 1e-12


class NotPositiveDefinite(ValueError):
    """Matrix is numerically not positive (semi-)definite."""


class EigenFailure(RuntimeError):
    """Eigendecomposition did not converge."""


def symmetrize(p: Array) -> Array:
    """Average a square matrix with its transpose."""
    p = np.asarray(p, dtype=float)
    return 0.5 * (p + p.T)


def cholesky_sqrt(p: Array) -> Array:
    """Lower-triangular L with L @ L.T == p.

    Strict: a semi-definite input (for example a zero prior variance) raises
    NotPositiveDefinite, matching the behavior of filters that treat a failed
    Cholesky as divergence.
    """
    a = symmetrize(p)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            "Cholesky factorization failed; matrix is not positive definite"
        ) from exc


def symmetric_sqrt(p: Array) -> Array:
    """Symmetric S with S @ S == p, via eigendecomposition.

    Eigenvalues within round-off below zero (relative to the largest
    eigenvalue) are clamped to zero so that semi-definite covariances still
    factor; anything more negative raises NotPositiveDefinite.
    """
    a = symmetrize(p)
    try:
        eigvals, eigvecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure("eigendecomposition failed to converge") from exc
    top = float(eigvals[-1]) if eigvals.size else 0.0
    floor = -NEGATIVE_EIGENVALUE_SLACK * max(top, 0.0)
    if np.any(eigvals < floor):
        raise NotPositiveDefinite(
            f"eigenvalue {eigvals.min():.3e} below round-off floor {floor:.3e}"
        )
    root = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    return symmetrize(root)


def validate_covariance(p: Array, *, name: str = "covariance") -> Array:
    """Check symmetry and numerical positive semi-definiteness; return p.

    Raises ValueError on asymmetry beyond SYMMETRY_RTOL (relative Frobenius)
    and NotPositiveDefinite when any eigenvalue sits below the round-off
    floor used by symmetric_sqrt.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {p.shape}")
    scale = np.linalg.norm(p)
    if scale > 0.0 and np.linalg.norm(p - p.T) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric to relative tolerance {SYMMETRY_RTOL}")
    eigvals = np.linalg.eigvalsh(symmetrize(p))
    top = float(eigvals[-1]) if eigvals.size else 0.0
    floor = -NEGATIVE_EIGENVALUE_SLACK * max(top, 0.0)
    if np.any(eigvals < floor):
        raise NotPositiveDefinite(
            f"{name} has eigenvalue {eigvals.min():.3e} below round-off floor"
        )
    return p
