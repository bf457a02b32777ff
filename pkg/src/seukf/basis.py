"""Orthonormal function families used to build smooth Brownian surrogates.

A truncated expansion W_hat(t) = sum_i Z_i * int_0^t phi_i(u) du with iid
standard-normal coefficient vectors Z_i approximates Brownian motion on
[0, T] whenever {phi_i} is orthonormal in L^2[0, T].  Filters and samplers
only ever need the basis values (for the ODE right-hand side) and their
running integrals (for path reconstruction), so that is the whole interface.

Indices are 1-based to match the usual math convention phi_1..phi_N.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]

# Squared norm below which a Gram-Schmidt candidate is considered linearly
# dependent on the functions already kept (candidates start at norm 1).
GRAM_SCHMIDT_DROP_TOL = 1e-12


class IndexOutOfRange(IndexError):
    """Basis index outside 1..N."""


class BrownianBasis:
    """Orthonormal family phi_1..phi_N on [0, T].

    Subclasses fill in ``values`` and ``integrals``; everything else
    (scalar accessors, index checks, horizon rescaling) is shared.
    """

    family = "abstract"

    def __init__(self, horizon: float, order: int) -> None:
        if not horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {horizon}")
        if order < 1:
            raise ValueError(f"order must be at least 1, got {order}")
        self.horizon = float(horizon)
        self.order = int(order)

    def values(self, t: float) -> Array:
        """All phi_i(t) as an array of shape (order,)."""
        raise NotImplementedError

    def integrals(self, t: float) -> Array:
        """All int_0^t phi_i(u) du as an array of shape (order,)."""
        raise NotImplementedError

    def with_horizon(self, horizon: float) -> "BrownianBasis":
        """Same family and order, rescaled to a new interval [0, horizon]."""
        raise NotImplementedError

    def value(self, i: int, t: float) -> float:
        self._check_index(i)
        return float(self.values(t)[i - 1])

    def integral(self, i: int, t: float) -> float:
        self._check_index(i)
        return float(self.integrals(t)[i - 1])

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.order:
            raise IndexOutOfRange(f"index {i} outside 1..{self.order}")


class FourierSineBasis(BrownianBasis):
    """phi_k(t) = sqrt(2/T) sin((k - 1/2) pi t / T)."""

    family = "fourier_sine"

    def __init__(self, horizon: float, order: int) -> None:
        super().__init__(horizon, order)
        self._omega = (np.arange(order) + 0.5) * np.pi / self.horizon
        self._amp = np.sqrt(2.0 / self.horizon)

    def values(self, t: float) -> Array:
        return self._amp * np.sin(self._omega * t)

    def integrals(self, t: float) -> Array:
        return self._amp * (1.0 - np.cos(self._omega * t)) / self._omega

    def with_horizon(self, horizon: float) -> "FourierSineBasis":
        return FourierSineBasis(horizon, self.order)


class HaarBasis(BrownianBasis):
    """Constant function then Haar wavelets, coarse to fine, left to right.

    Index 1 is 1/sqrt(T).  Index i >= 2 is the wavelet at level
    j = floor(log2(i - 1)) and shift m = i - 1 - 2^j, supported on
    [m, m + 1] * T / 2^j.  With order N = 2^J the truncated expansion
    matches Brownian motion exactly on the dyadic grid of spacing T / 2^J.
    """

    family = "haar"

    def __init__(self, horizon: float, order: int) -> None:
        super().__init__(horizon, order)
        idx = np.arange(2, order + 1)
        level = np.floor(np.log2(idx - 1)).astype(int) if idx.size else idx
        shift = idx - 1 - (1 << level) if idx.size else idx
        width = self.horizon / np.power(2.0, level) if idx.size else idx
        self._left = shift * width
        self._mid = self._left + 0.5 * width
        self._right = self._left + width
        self._amp = np.power(2.0, level / 2.0) / np.sqrt(self.horizon) if idx.size else idx

    def values(self, t: float) -> Array:
        out = np.empty(self.order)
        out[0] = 1.0 / np.sqrt(self.horizon)
        if self.order > 1:
            # Half-open support: +amp on [left, mid), -amp on [mid, right).
            pos = (self._left <= t) & (t < self._mid)
            neg = (self._mid <= t) & (t < self._right)
            out[1:] = self._amp * (pos.astype(float) - neg.astype(float))
        return out

    def integrals(self, t: float) -> Array:
        out = np.empty(self.order)
        out[0] = t / np.sqrt(self.horizon)
        if self.order > 1:
            up = np.clip(t, self._left, self._mid) - self._left
            down = np.clip(t, self._mid, self._right) - self._mid
            out[1:] = self._amp * (up - down)
        return out

    def with_horizon(self, horizon: float) -> "HaarBasis":
        return HaarBasis(horizon, self.order)


class LinearOptimalBasis(BrownianBasis):
    """First function matched to a scalar linear drift, completed with sines.

    For dX = -theta X dt + sigma dW the one-term expansion error is minimized
    by phi_1(u) proportional to exp(theta u).  The remaining functions come
    from orthonormalizing the half-period sine family against phi_1.  Every
    function is a linear combination of {exp(theta u), sines}, so values and
    integrals reduce to a coefficient matrix applied to closed forms.
    """

    family = "linear_optimal"

    def __init__(self, horizon: float, order: int, theta: float) -> None:
        super().__init__(horizon, order)
        self.theta = float(theta)
        n_sines = order + 2
        self._omega = (np.arange(n_sines) + 0.5) * np.pi / self.horizon
        self._sine_amp = np.sqrt(2.0 / self.horizon)
        self._coeffs, self._residual = self._orthonormalize(n_sines)

    def _gram(self, n_sines: int) -> Array:
        """Exact inner products over the raw set {exp(theta u), sines}."""
        th = self.theta
        big_t = self.horizon
        gram = np.eye(1 + n_sines)
        if abs(th) > 1e-12:
            exp_sq = (np.exp(2.0 * th * big_t) - 1.0) / (2.0 * th)
        else:
            exp_sq = big_t * (1.0 + th * big_t + 2.0 * (th * big_t) ** 2 / 3.0)
        gram[0, 0] = exp_sq
        om = self._omega
        # int_0^T exp(th u) sin(om u) du, closed form.
        cross = (
            np.exp(th * big_t) * (th * np.sin(om * big_t) - om * np.cos(om * big_t))
            + om
        ) / (th * th + om * om)
        gram[0, 1:] = gram[1:, 0] = self._sine_amp * cross
        return gram

    def _orthonormalize(self, n_sines: int) -> tuple[Array, float]:
        gram = self._gram(n_sines)
        dim = 1 + n_sines
        kept: list[Array] = []
        candidates = np.eye(dim)
        candidates[0, 0] = 1.0 / np.sqrt(gram[0, 0])  # normalize exp first
        for cand in candidates:
            vec = cand.copy()
            # Two Gram-Schmidt passes keep orthogonality near round-off.
            for _ in range(2):
                for prev in kept:
                    vec -= (prev @ gram @ vec) * prev
            norm_sq = float(vec @ gram @ vec)
            if norm_sq < GRAM_SCHMIDT_DROP_TOL:
                continue  # linearly dependent direction, drop it
            kept.append(vec / np.sqrt(norm_sq))
            if len(kept) == self.order:
                break
        if len(kept) < self.order:
            raise RuntimeError("could not assemble enough independent directions")
        coeffs = np.array(kept)
        overlap = coeffs @ gram @ coeffs.T
        residual = float(np.max(np.abs(overlap - np.eye(self.order))))
        return coeffs, residual

    @property
    def orthogonality_residual(self) -> float:
        """Largest deviation of the final Gram matrix from identity."""
        return self._residual

    def _raw_values(self, t: float) -> Array:
        out = np.empty(1 + self._omega.size)
        out[0] = np.exp(self.theta * t)
        out[1:] = self._sine_amp * np.sin(self._omega * t)
        return out

    def _raw_integrals(self, t: float) -> Array:
        out = np.empty(1 + self._omega.size)
        if abs(self.theta) > 1e-12:
            out[0] = (np.exp(self.theta * t) - 1.0) / self.theta
        else:
            out[0] = t * (1.0 + 0.5 * self.theta * t)
        out[1:] = self._sine_amp * (1.0 - np.cos(self._omega * t)) / self._omega
        return out

    def values(self, t: float) -> Array:
        return self._coeffs @ self._raw_values(t)

    def integrals(self, t: float) -> Array:
        return self._coeffs @ self._raw_integrals(t)

    def with_horizon(self, horizon: float) -> "LinearOptimalBasis":
        return LinearOptimalBasis(horizon, self.order, self.theta)


def make_basis(
    family: str, horizon: float, order: int, theta: float = 0.0
) -> BrownianBasis:
    """Construct a basis by family name; theta only matters for linear_optimal."""
    if family == "fourier_sine":
        return FourierSineBasis(horizon, order)
    if family == "haar":
        return HaarBasis(horizon, order)
    if family == "linear_optimal":
        return make_linear_optimal_basis(theta, horizon, order)
    raise ValueError(f"unknown basis family {family!r}")


def make_linear_optimal_basis(
    theta: float, horizon: float, order: int
) -> LinearOptimalBasis:
    """Basis whose first function is optimal for the drift -theta * x."""
    return LinearOptimalBasis(horizon, order, theta)


def reconstruct_path(basis: BrownianBasis, coeffs: Array, t: float) -> Array:
    """Evaluate W_hat(t) = sum_i coeffs[i] * int_0^t phi_i for (N, d) coeffs."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[0] != basis.order:
        raise ValueError(
            f"coeffs must have shape ({basis.order}, d), got {coeffs.shape}"
        )
    return basis.integrals(t) @ coeffs
