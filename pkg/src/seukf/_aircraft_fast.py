"""Compiled kernels for the seven-state aircraft model.

The batched right-hand sides evaluated inside the ODE solvers dominate the
benchmark runtime, and at a batch of ~80 sigma points the interpreter
overhead of assembling them from the generic model callables exceeds the
arithmetic by an order of magnitude.  These kernels compute the identical
quantities (same formulas, same drift-correction convention) in one pass of
scalar code; the test suite pins them against the generic composition.

Everything here is optional: when numba is unavailable the module exports
``HAVE_NUMBA = False`` and the model simply runs the generic path.
"""

from __future__ import annotations

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=False)
    def series_rhs(x, noise, q):
        """Corrected drift plus diffusion times the surrogate noise velocity.

        ``x`` is (batch, 7), ``noise`` (batch, 4), ``q`` the four variance
        rates.  Matches drift + Stratonovich-to-Ito correction + b @ noise
        of the generic aircraft model.
        """
        out = np.empty_like(x)
        s0 = np.sqrt(q[0])
        s1 = np.sqrt(q[1])
        s2 = np.sqrt(q[2])
        s3 = np.sqrt(q[3])
        for m in range(x.shape[0]):
            p = x[m, 1]
            qv = x[m, 3]
            r = x[m, 5]
            om = x[m, 6]
            p2 = p * p
            qv2 = qv * qv
            r2 = r * r
            sp = 1.0 + p2
            sq = 1.0 + qv2
            sr = 1.0 + r2
            w2 = sp + qv2
            v2 = w2 + r2
            v = np.sqrt(v2)
            w = np.sqrt(w2)
            rsp = np.sqrt(sp)
            rsq = np.sqrt(sq)
            rsr = np.sqrt(sr)
            v3 = v2 * v
            w3 = w2 * w
            vw = v * w
            iv2 = 1.0 / v2
            iw2 = 1.0 / w2

            b10 = rsp / v
            b11 = rsq / w
            b12 = rsp * rsr / vw
            b30 = rsq / v
            b31 = -rsp / w
            b32 = rsq * rsr / vw
            b50 = rsr / v
            b52 = -w / v

            # Gradients of the along-track column.
            d101 = p * (qv2 + r2) / (rsp * v3)
            d103 = -rsp * qv / v3
            d105 = -rsp * r / v3
            d301 = -rsq * p / v3
            d303 = qv * (p2 + r2) / (rsq * v3)
            d305 = -rsq * r / v3
            d501 = -rsr * p / v3
            d503 = -rsr * qv / v3
            d505 = r * (p2 + qv2) / (rsr * v3)
            sum0_1 = b10 * d101 + b30 * d103 + b50 * d105
            sum0_3 = b10 * d301 + b30 * d303 + b50 * d305
            sum0_5 = b10 * d501 + b30 * d503 + b50 * d505

            # Gradients of the horizontal cross-track column.
            d111 = -rsq * p / w3
            d113 = qv * p2 / (rsq * w3)
            d311 = -p * qv2 / (rsp * w3)
            d313 = rsp * qv / w3
            sum1_1 = b11 * d111 + b31 * d113
            sum1_3 = b11 * d311 + b31 * d313

            # Gradients of the vertical tilt column.
            d121 = p * rsr / vw * (1.0 / sp - iv2 - iw2) * rsp
            d123 = -qv * rsp * rsr / vw * (iv2 + iw2)
            d125 = r * rsp / vw * (1.0 / sr - iv2) * rsr
            d321 = -p * rsq * rsr / vw * (iv2 + iw2)
            d323 = qv * rsr / vw * (1.0 / sq - iv2 - iw2) * rsq
            d325 = r * rsq / vw * (1.0 / sr - iv2) * rsr
            d521 = -p * r2 / (w * v3)
            d523 = -qv * r2 / (w * v3)
            d525 = w * r / v3
            sum2_1 = b12 * d121 + b32 * d123 + b52 * d125
            sum2_3 = b12 * d321 + b32 * d323 + b52 * d325
            sum2_5 = b12 * d521 + b32 * d523 + b52 * d525

            c1 = -0.5 * (q[0] * sum0_1 + q[1] * sum1_1 + q[2] * sum2_1)
            c3 = -0.5 * (q[0] * sum0_3 + q[1] * sum1_3 + q[2] * sum2_3)
            c5 = -0.5 * (q[0] * sum0_5 + q[2] * sum2_5)

            n0 = noise[m, 0]
            n1 = noise[m, 1]
            n2 = noise[m, 2]
            out[m, 0] = p
            out[m, 1] = -om * qv + c1 + s0 * b10 * n0 + s1 * b11 * n1 + s2 * b12 * n2
            out[m, 2] = qv
            out[m, 3] = om * p + c3 + s0 * b30 * n0 + s1 * b31 * n1 + s2 * b32 * n2
            out[m, 4] = r
            out[m, 5] = c5 + s0 * b50 * n0 + s2 * b52 * n2
            out[m, 6] = s3 * noise[m, 3]
        return out

    @numba.njit(cache=True, fastmath=False)
    def moment_rhs(packed, q):
        """Time derivative of packed (mean, cov) under cubature closure.

        Matches the generic moment differential equations with spherical
        cubature points from the Cholesky root: d mean = E[a], d cov =
        E[(X-m) a^T] + transpose + E[b b^T].  Raises LinAlgError when the
        covariance fails to factor.
        """
        mean = packed[:7]
        cov = np.empty((7, 7))
        for i in range(7):
            for j in range(7):
                cov[i, j] = 0.5 * (packed[7 + 7 * i + j] + packed[7 + 7 * j + i])
        root = np.linalg.cholesky(cov)
        spread = np.sqrt(7.0)
        pts = np.empty((14, 7))
        for c in range(7):
            for j in range(7):
                step = spread * root[j, c]
                pts[c, j] = mean[j] + step
                pts[7 + c, j] = mean[j] - step
        drifts = np.empty((14, 7))
        drift_mean = np.zeros(7)
        for k in range(14):
            drifts[k, 0] = pts[k, 1]
            drifts[k, 1] = -pts[k, 6] * pts[k, 3]
            drifts[k, 2] = pts[k, 3]
            drifts[k, 3] = pts[k, 6] * pts[k, 1]
            drifts[k, 4] = pts[k, 5]
            drifts[k, 5] = 0.0
            drifts[k, 6] = 0.0
            for j in range(7):
                drift_mean[j] += drifts[k, j]
        for j in range(7):
            drift_mean[j] /= 14.0
        cross = np.zeros((7, 7))
        for k in range(14):
            for i in range(7):
                dev = pts[k, i] - mean[i]
                for j in range(7):
                    cross[i, j] += dev * (drifts[k, j] - drift_mean[j])
        diffusion_outer = np.zeros((7, 7))
        g66 = 0.0
        g11 = g13 = g15 = g33 = g35 = g55 = 0.0
        for k in range(14):
            p = pts[k, 1]
            qv = pts[k, 3]
            r = pts[k, 5]
            sp = 1.0 + p * p
            sq = 1.0 + qv * qv
            sr = 1.0 + r * r
            w2 = sp + qv * qv
            v2 = w2 + r * r
            v = np.sqrt(v2)
            w = np.sqrt(w2)
            rsp = np.sqrt(sp)
            rsq = np.sqrt(sq)
            rsr = np.sqrt(sr)
            vw = v * w
            b10 = rsp / v
            b11 = rsq / w
            b12 = rsp * rsr / vw
            b30 = rsq / v
            b31 = -rsp / w
            b32 = rsq * rsr / vw
            b50 = rsr / v
            b52 = -w / v
            g11 += q[0] * b10 * b10 + q[1] * b11 * b11 + q[2] * b12 * b12
            g13 += q[0] * b10 * b30 + q[1] * b11 * b31 + q[2] * b12 * b32
            g15 += q[0] * b10 * b50 + q[2] * b12 * b52
            g33 += q[0] * b30 * b30 + q[1] * b31 * b31 + q[2] * b32 * b32
            g35 += q[0] * b30 * b50 + q[2] * b32 * b52
            g55 += q[0] * b50 * b50 + q[2] * b52 * b52
            g66 += q[3]
        diffusion_outer[1, 1] = g11 / 14.0
        diffusion_outer[1, 3] = diffusion_outer[3, 1] = g13 / 14.0
        diffusion_outer[1, 5] = diffusion_outer[5, 1] = g15 / 14.0
        diffusion_outer[3, 3] = g33 / 14.0
        diffusion_outer[3, 5] = diffusion_outer[5, 3] = g35 / 14.0
        diffusion_outer[5, 5] = g55 / 14.0
        diffusion_outer[6, 6] = g66 / 14.0
        out = np.empty(56)
        out[:7] = drift_mean
        for i in range(7):
            for j in range(7):
                out[7 + 7 * i + j] = (
                    cross[i, j] / 14.0 + cross[j, i] / 14.0 + diffusion_outer[i, j]
                )
        return out
