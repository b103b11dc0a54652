"""Numpy implementations of the per-coordinate denoiser kernels.

Same signatures as the compiled ``_kernels`` module: each kernel writes the
denoised values into ``out`` (and the partial derivative w.r.t. the
pseudo-data into ``dout`` where applicable) and returns the divergence.
"""
import math

import numpy as np

LOG_CLAMP = 745.0


def _logistic_pair(z):
    """Return ``(1/(1+e^z), e^z/(1+e^z))`` without overflow."""
    e = np.exp(-np.abs(z))
    small = 1.0 / (1.0 + e)
    large = e / (1.0 + e)
    pos = z > 0
    return np.where(pos, large, small), np.where(pos, small, large)


def bg_eval(a, b, lam, eps, sigma, out, dout):
    s2 = sigma * sigma
    l2 = lam * lam
    D = s2 + l2 + s2 * l2
    u = s2 * a + l2 * b
    if eps >= 1.0:
        p = np.ones_like(u)
        q = np.zeros_like(u)
    else:
        log_t = math.log((1.0 - eps) / eps) + 0.5 * math.log(D / (l2 * s2)) - u * u / (2.0 * s2 * l2 * D)
        np.clip(log_t, -LOG_CLAMP, LOG_CLAMP, out=log_t)
        p, q = _logistic_pair(log_t)
    out[:] = p * (u / D)
    dout[:] = p * (s2 / D) + p * q * (u * u) / (l2 * D * D)
    return float(np.sum(dout))


def bern_eval(a, b, lam, sigma, K, out, dout):
    if K == 1:
        out[:] = 1.0
        dout[:] = 0.0
        return 0.0
    l2 = lam * lam
    s2 = sigma * sigma
    logit = -math.log(K - 1.0) + (2.0 * a - 1.0) / (2.0 * l2) + (2.0 * b - 1.0) / (2.0 * s2)
    np.clip(logit, -LOG_CLAMP, LOG_CLAMP, out=logit)
    q, p = _logistic_pair(logit)
    out[:] = p
    dout[:] = p * q / l2
    return float(np.sum(dout))


def block_eval(a, b, K, lam, sigma, out):
    z = (a / (lam * lam) + b / (sigma * sigma)).reshape(-1, K)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    total = e.sum(axis=1, keepdims=True)
    g = e / total
    others = (total - e) / total
    out[:] = g.ravel()
    return float(np.sum(g * others)) / (lam * lam)
