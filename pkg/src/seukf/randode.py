"""Propagation of states through the smooth-noise approximating ODE.

Replacing the Brownian driver of dX = a(X) dt + b(X) dW with a truncated
expansion W_hat(t) = sum_i Z_i int_0^t phi_i(u) du turns the SDE into the
random ODE

    dX/dt = a_c(X) + b(X) @ (sum_i Z_i phi_i(t)),

one deterministic initial-value problem per draw of the coefficient block
Z in R^{N x d}.  The drift a_c carries the correction that makes the
limiting law the Ito law of the original model.  Solving a whole batch of
initial states and coefficient blocks at once amortizes the solver overhead;
the batch is flattened into one long vector so the same error control spans
every member.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .basis import BrownianBasis
from .models import SdeModel, ito_to_stratonovich
from .ode import IvpProblem, SolverConfig, solve_ivp

Array = NDArray[np.float64]


def propagate_series(
    model: SdeModel,
    states: Array,
    coeffs: Array,
    basis: BrownianBasis,
    config: SolverConfig,
) -> Array:
    """Terminal states at t = basis.horizon for a batch of expansions.

    ``states`` has shape (batch, n) and ``coeffs`` (batch, N, d); row b of
    the result is the solution at the end of [0, basis.horizon] started at
    ``states[b]`` and driven by the smooth surrogate with coefficients
    ``coeffs[b]``.  ``model`` is the Ito model; the drift correction is
    applied here.
    """
    states = np.asarray(states, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    if states.ndim != 2:
        raise ValueError(f"states must have shape (batch, n), got {states.shape}")
    batch, n = states.shape
    if n != model.n:
        raise ValueError(f"state dimension {n} does not match model.n={model.n}")
    if coeffs.shape != (batch, basis.order, model.d):
        raise ValueError(
            f"coeffs must have shape ({batch}, {basis.order}, {model.d}), "
            f"got {coeffs.shape}"
        )
    values = basis.values
    fused = model.fused_series_rhs
    if fused is not None:

        def rhs(t: float, flat: Array) -> Array:
            x = flat.reshape(batch, n)
            noise = np.tensordot(values(t), coeffs, axes=([0], [1]))
            return fused(x, noise).reshape(-1)

    else:
        corrected = ito_to_stratonovich(model)
        drift = corrected.drift
        diffusion = model.diffusion

        def rhs(t: float, flat: Array) -> Array:
            x = flat.reshape(batch, n)
            # Surrogate noise velocity per batch member: (batch, d).
            noise = np.tensordot(values(t), coeffs, axes=([0], [1]))
            out = drift(x)
            out += np.einsum("bnd,bd->bn", diffusion(x), noise)
            return out.reshape(-1)

    problem = IvpProblem(rhs=rhs, y0=states.reshape(-1), t_span=(0.0, basis.horizon))
    return solve_ivp(problem, config).reshape(batch, n)
