"""Conditional-expectation denoisers and their divergences.

Every denoiser maps pseudo-data ``a`` (the signal observed in Gaussian noise
of standard deviation ``lam``) and side information ``b`` to the posterior
mean ``E[X | X + lam Z = a, X_tilde = b]``.  The AMP residual update also
needs the divergence ``sum_i d g_i / d a_i``, which is computed analytically
here in the same pass as the estimate.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import DimensionError, ParameterError


def _positive(**kw):
    for name, value in kw.items():
        if not value > 0 or not math.isfinite(value):
            raise ParameterError(f"{name} must be positive and finite, got {value}")


def _as_flat(*arrays):
    arrs = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in arrays])
    shape = arrs[0].shape
    return shape, [np.ascontiguousarray(x).ravel() for x in arrs]


def _shaped(values, shape):
    return float(values[0]) if shape == () else values.reshape(shape)


# -- Gaussian signal, Gaussian side information -----------------------------

def gg_denoise(a, b, lam, sigma_x, sigma):
    """Posterior mean for a Gaussian signal; linear in ``a`` and ``b``."""
    _positive(lam=lam, sigma_x=sigma_x, sigma=sigma)
    sx2, s2, l2 = sigma_x**2, sigma**2, lam**2
    denom = sx2 * (s2 + l2) + s2 * l2
    return (sx2 * s2 * np.asarray(a, dtype=float) + sx2 * l2 * np.asarray(b, dtype=float)) / denom


def gg_deriv(lam, sigma_x, sigma):
    """Constant slope ``d eta / d a`` of :func:`gg_denoise`."""
    _positive(lam=lam, sigma_x=sigma_x, sigma=sigma)
    sx2, s2, l2 = sigma_x**2, sigma**2, lam**2
    return sx2 * s2 / (sx2 * (s2 + l2) + s2 * l2)


# -- Bernoulli-Gaussian signal ------------------------------------------------

def _bg_check(lam, epsilon, sigma):
    _positive(lam=lam, sigma=sigma)
    if not 0 < epsilon <= 1:
        raise ParameterError(f"epsilon must lie in (0, 1], got {epsilon}")


def bg_denoise(a, b, lam, epsilon, sigma):
    """Posterior mean for ``X ~ eps N(0,1) + (1-eps) delta_0``.

    Equals ``f(a, b) / (1 + T(a, b))`` where ``f`` is the slab posterior mean
    and ``T`` the null-to-slab likelihood ratio (evaluated in log space).
    """
    _bg_check(lam, epsilon, sigma)
    shape, (a, b) = _as_flat(a, b)
    out = np.empty_like(a)
    kernels.bg_eval(a, b, float(lam), float(epsilon), float(sigma), out, np.empty_like(a))
    return _shaped(out, shape)


def bg_deriv(a, b, lam, epsilon, sigma):
    """Exact ``d eta / d a`` of :func:`bg_denoise` (quotient rule)."""
    _bg_check(lam, epsilon, sigma)
    shape, (a, b) = _as_flat(a, b)
    dout = np.empty_like(a)
    kernels.bg_eval(a, b, float(lam), float(epsilon), float(sigma), np.empty_like(a), dout)
    return _shaped(dout, shape)


def bg_deriv_bound(lam, epsilon):
    """Upper bound ``1 + 2(1-eps)/(lam eps)`` on ``|d eta / d a|``."""
    return 1.0 + 2.0 * (1.0 - epsilon) / (lam * epsilon)


# -- Block-sparse signal: softmax over the block ------------------------------

def _block_check(a, b, lam, sigma):
    _positive(lam=lam, sigma=sigma)
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise DimensionError(f"block inputs must be equal-length 1-D vectors, got {a.shape} and {b.shape}")
    return a, b


def block_denoise(a, b, lam, sigma):
    """Posterior probabilities of the K one-hot hypotheses for one block."""
    a, b = _block_check(a, b, lam, sigma)
    out = np.empty_like(a)
    kernels.block_eval(a, b, a.size, float(lam), float(sigma), out)
    return out


def block_divergence(a, b, lam, sigma):
    """``sum_i d g_i / d a_i = sum_i g_i (1 - g_i) / lam^2``."""
    a, b = _block_check(a, b, lam, sigma)
    return kernels.block_eval(a, b, a.size, float(lam), float(sigma), np.empty_like(a))


def block_lipschitz_bound(K, lam, sigma):
    """Vector Lipschitz constant ``sqrt(2) K (1/lam^2 + 1/sigma^2)``."""
    return math.sqrt(2.0) * K * (1.0 / lam**2 + 1.0 / sigma**2)


# -- Per-entry Bernoulli(1/K) approximation -----------------------------------

def _bern_check(lam, sigma, K):
    _positive(lam=lam, sigma=sigma)
    if int(K) != K or K < 1:
        raise ParameterError(f"K must be a positive integer, got {K}")


def bernoulli_sep_denoise(a, b, lam, sigma, K):
    """``P(X = 1 | a, b)`` for ``X ~ Bernoulli(1/K)``, normalised."""
    _bern_check(lam, sigma, K)
    shape, (a, b) = _as_flat(a, b)
    out = np.empty_like(a)
    kernels.bern_eval(a, b, float(lam), float(sigma), int(K), out, np.empty_like(a))
    return _shaped(out, shape)


def bernoulli_sep_deriv(a, b, lam, sigma, K):
    _bern_check(lam, sigma, K)
    shape, (a, b) = _as_flat(a, b)
    dout = np.empty_like(a)
    kernels.bern_eval(a, b, float(lam), float(sigma), int(K), np.empty_like(a), dout)
    return _shaped(dout, shape)


# -- Denoiser objects bound to model parameters -------------------------------

class Denoiser:
    """Vector denoiser bound to a signal model's parameters.

    Subclasses implement :meth:`evaluate`, returning the estimate and the
    divergence together.
    """

    block_size = 1

    def evaluate(self, pseudo, side_info, lam):
        raise NotImplementedError

    def apply(self, pseudo, side_info, lam):
        return self.evaluate(pseudo, side_info, lam)[0]

    def divergence(self, pseudo, side_info, lam):
        return self.evaluate(pseudo, side_info, lam)[1]

    def _inputs(self, pseudo, side_info, lam):
        _positive(lam=lam)
        pseudo = np.ascontiguousarray(pseudo, dtype=float)
        side_info = np.ascontiguousarray(side_info, dtype=float)
        if pseudo.ndim != 1 or pseudo.shape != side_info.shape:
            raise DimensionError(f"pseudo-data {pseudo.shape} and side info {side_info.shape} must match")
        if pseudo.size % self.block_size:
            raise DimensionError(f"length {pseudo.size} is not divisible by block size {self.block_size}")
        return pseudo, side_info


class GGDenoiser(Denoiser):
    def __init__(self, sigma_x, sigma):
        _positive(sigma_x=sigma_x, sigma=sigma)
        self.sigma_x = sigma_x
        self.sigma = sigma

    def evaluate(self, pseudo, side_info, lam):
        pseudo, side_info = self._inputs(pseudo, side_info, lam)
        est = gg_denoise(pseudo, side_info, lam, self.sigma_x, self.sigma)
        return est, pseudo.size * gg_deriv(lam, self.sigma_x, self.sigma)


class BGDenoiser(Denoiser):
    def __init__(self, epsilon, sigma):
        _bg_check(1.0, epsilon, sigma)
        self.epsilon = epsilon
        self.sigma = sigma

    def evaluate(self, pseudo, side_info, lam):
        pseudo, side_info = self._inputs(pseudo, side_info, lam)
        out = np.empty_like(pseudo)
        div = kernels.bg_eval(pseudo, side_info, float(lam), self.epsilon, self.sigma, out, np.empty_like(pseudo))
        return out, div


class BlockDenoiser(Denoiser):
    def __init__(self, K, sigma):
        _bern_check(1.0, sigma, K)
        self.block_size = int(K)
        self.sigma = sigma

    def evaluate(self, pseudo, side_info, lam):
        pseudo, side_info = self._inputs(pseudo, side_info, lam)
        out = np.empty_like(pseudo)
        div = kernels.block_eval(pseudo, side_info, self.block_size, float(lam), self.sigma, out)
        return out, div


class BernoulliSepDenoiser(Denoiser):
    def __init__(self, K, sigma):
        _bern_check(1.0, sigma, K)
        self.K = int(K)
        self.sigma = sigma

    def evaluate(self, pseudo, side_info, lam):
        pseudo, side_info = self._inputs(pseudo, side_info, lam)
        out = np.empty_like(pseudo)
        div = kernels.bern_eval(pseudo, side_info, float(lam), self.sigma, self.K, out, np.empty_like(pseudo))
        return out, div


DENOISER_MODES = ("conditional", "block", "separable_bernoulli")


def make_denoiser(model, mode="conditional"):
    """Build the denoiser for ``model``.

    ``mode="conditional"`` gives the Bayes-optimal denoiser of the model.
    ``"block"`` and ``"separable_bernoulli"`` select between the blockwise
    softmax and the per-entry Bernoulli(1/K) approximation; both require a
    model carrying ``K`` (BlockSparse or BernoulliSep).
    """
    if mode not in DENOISER_MODES:
        raise ParameterError(f"unknown denoiser mode {mode!r}")
    if mode != "conditional" and model.kind not in ("BlockSparse", "BernoulliSep"):
        raise ParameterError(f"denoiser mode {mode!r} needs a BlockSparse or BernoulliSep model")
    if mode == "block" or (mode == "conditional" and model.kind == "BlockSparse"):
        return BlockDenoiser(model.K, model.sigma)
    if mode == "separable_bernoulli" or model.kind == "BernoulliSep":
        return BernoulliSepDenoiser(model.K, model.sigma)
    if model.kind == "GG":
        return GGDenoiser(model.sigma_x, model.sigma)
    return BGDenoiser(model.epsilon, model.sigma)


def apply_denoiser(d, pseudo, side_info, lam):
    """Denoise a full length-n vector; returns ``(estimate, divergence)``."""
    return d.evaluate(pseudo, side_info, lam)
