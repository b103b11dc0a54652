"""Brute-force posterior means used to validate the closed-form denoisers.

Nothing here reuses the closed forms: continuous priors are integrated
numerically against full Gaussian densities and discrete priors are
enumerated hypothesis by hypothesis.  Everything is accumulated in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, roots_hermite

from .errors import DimensionError, NotComputableError, ParameterError

_LOG_2PI = math.log(2.0 * math.pi)


def log_gauss(x, var):
    """Log of the zero-mean Gaussian density with variance ``var`` at ``x``."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (_LOG_2PI + math.log(var)) - x * x / (2.0 * var)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes and weights for ``int exp(-t^2) h(t) dt``.

    Extreme nodes whose weights underflow to zero are dropped; they carry
    no mass in double precision.
    """

    n_nodes: int = 256
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    log_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_nodes < 64:
            raise ParameterError(f"quadrature needs at least 64 nodes, got {self.n_nodes}")
        t, w = roots_hermite(self.n_nodes)
        keep = w > 0
        object.__setattr__(self, "nodes", t[keep])
        object.__setattr__(self, "log_weights", np.log(w[keep]))


DEFAULT_RULE = QuadratureRule(256)


def _log_slab_integrals(prior_sd, a, b, lam, sigma, rule):
    """``log int N(x;0,s^2) rho_lam2(a-x) rho_sig2(b-x) dx`` and the x-moment.

    The Hermite change of variables is anchored on the narrowest of the
    three Gaussian factors, so the rule always resolves the integrand's
    sharpest feature.  Returns ``(log Z, log |M|, sign M)``.
    """
    factors = [(0.0, prior_sd), (a, lam), (b, sigma)]
    anchor = min(range(3), key=lambda i: factors[i][1])
    centre, width = factors[anchor]
    x = centre + math.sqrt(2.0) * width * rule.nodes
    # exp(-t^2) weight reproduces the anchor density up to 1/(sqrt(pi)).
    log_h = rule.log_weights - 0.5 * math.log(math.pi)
    for i, (c, s) in enumerate(factors):
        if i != anchor:
            log_h = log_h + log_gauss(c - x, s * s)
    log_z = logsumexp(log_h)
    # signed moment: a shifted plain sum survives exact cancellation
    shift = float(np.max(log_h))
    moment = float(np.sum(x * np.exp(log_h - shift)))
    if moment == 0.0:
        return log_z, -np.inf, 0.0
    return log_z, math.log(abs(moment)) + shift, math.copysign(1.0, moment)


def quad_posterior_mean(prior, a, b, lam, sigma, rule=DEFAULT_RULE, sigma_x=1.0, epsilon=1.0):
    """``E[X | X + lam Z = a, X + sigma Z' = b]`` by numerical integration.

    ``prior`` is ``"gaussian"`` (``N(0, sigma_x^2)``) or
    ``"bernoulli_gaussian"`` (``epsilon N(0,1) + (1-epsilon) delta_0``).
    The point mass only enters the normaliser.
    """
    if not (lam > 0 and sigma > 0):
        raise ParameterError("lam and sigma must be positive")
    if prior == "gaussian":
        if not sigma_x > 0:
            raise ParameterError("sigma_x must be positive")
        log_z, log_m, sign_m = _log_slab_integrals(sigma_x, a, b, lam, sigma, rule)
        terms = [log_z]
    elif prior == "bernoulli_gaussian":
        if not 0 < epsilon <= 1:
            raise ParameterError("epsilon must lie in (0, 1]")
        log_z, log_m, sign_m = _log_slab_integrals(1.0, a, b, lam, sigma, rule)
        log_m += math.log(epsilon)
        terms = [log_z + math.log(epsilon)]
        if epsilon < 1:
            terms.append(math.log1p(-epsilon) + log_gauss(a, lam * lam) + log_gauss(b, sigma * sigma))
    else:
        raise ParameterError(f"unknown prior {prior!r}")
    log_norm = logsumexp(terms)
    if not np.isfinite(log_norm):
        raise NotComputableError(f"posterior normaliser is degenerate at a={a}, b={b}")
    if sign_m == 0:
        return 0.0
    return float(sign_m * math.exp(log_m - log_norm))


def discrete_posterior_mean(support, probs, a, b, lam, sigma):
    """Posterior mean of a scalar with a finite-support prior."""
    support = np.asarray(support, dtype=float)
    probs = np.asarray(probs, dtype=float)
    keep = probs > 0
    support, probs = support[keep], probs[keep]
    log_post = np.log(probs) + log_gauss(a - support, lam * lam) + log_gauss(b - support, sigma * sigma)
    log_norm = logsumexp(log_post)
    if not np.isfinite(log_norm):
        raise NotComputableError(f"posterior normaliser is degenerate at a={a}, b={b}")
    return float(np.sum(support * np.exp(log_post - log_norm)))


def bernoulli_posterior(a, b, lam, sigma, K):
    """``P(X = 1 | a, b)`` for ``X ~ Bernoulli(1/K)`` by enumeration."""
    return discrete_posterior_mean([0.0, 1.0], [1.0 - 1.0 / K, 1.0 / K], a, b, lam, sigma)


def enum_block_posterior(a, b, lam, sigma):
    """Exact Bayes over the K equiprobable one-hot block hypotheses.

    Each hypothesis' likelihood is the product of 2K Gaussian densities of
    the residuals ``a - e_k`` and ``b - e_k``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise DimensionError(f"block inputs must be equal-length vectors, got {a.shape} and {b.shape}")
    K = a.size
    hyps = np.eye(K)
    log_lik = (
        log_gauss(a[None, :] - hyps, lam * lam).sum(axis=1)
        + log_gauss(b[None, :] - hyps, sigma * sigma).sum(axis=1)
        - math.log(K)
    )
    log_norm = logsumexp(log_lik)
    if not np.isfinite(log_norm):
        raise NotComputableError("block posterior normaliser is degenerate")
    # E[X_i] = sum_k P(H_k) [e_k]_i = P(H_i)
    return np.exp(log_lik - log_norm)
