"""State evolution: the scalar recursion for the effective noise variance.

``lambda_0^2 = sigma_w^2 + E[X^2] / delta`` and, for ``t >= 1``,
``lambda_t^2 = sigma_w^2 + E[(g(X + lambda_{t-1} Z, X_tilde) - X)^2] / delta``
where the expectation is per coordinate.  The GG model has a closed form;
every other model (or any mismatched denoiser) is evaluated by Monte Carlo.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .denoise import make_denoiser
from .errors import ParameterError
from .linmodel import prior_second_moment

DEFAULT_MC_SAMPLES = {"BG": 1_000_000, "BernoulliSep": 1_000_000, "GG": 1_000_000, "BlockSparse": 200_000}
MIN_MC_SAMPLES = 1_000


@dataclass
class SePath:
    """``lambda_sq[t]`` for ``t = 0..T`` plus Monte-Carlo standard errors."""

    lambda_sq: np.ndarray
    model: object
    delta: float
    sigma_w: float
    method: str
    mc_samples: int | None = None
    std_errors: np.ndarray = field(default=None)

    @property
    def T(self):
        return len(self.lambda_sq) - 1

    @property
    def lambdas(self):
        return np.sqrt(self.lambda_sq)


def _check(delta, sigma_w):
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if not sigma_w >= 0:
        raise ParameterError(f"sigma_w must be non-negative, got {sigma_w}")


def se_init(model, delta, sigma_w):
    _check(delta, sigma_w)
    return sigma_w**2 + prior_second_moment(model) / delta


def gg_se_step(lambda_sq, sigma_x, sigma, delta, sigma_w):
    """Closed-form GG update; the bracket is the MMSE of the linear denoiser."""
    _check(delta, sigma_w)
    if not (sigma_x > 0 and sigma > 0) or lambda_sq < 0:
        raise ParameterError("sigma_x, sigma must be positive and lambda_sq non-negative")
    sx2, s2 = sigma_x**2, sigma**2
    mmse = sx2 * s2 * lambda_sq / (sx2 * (s2 + lambda_sq) + s2 * lambda_sq)
    return sigma_w**2 + mmse / delta


def _draw(model, n_samples, rng):
    """Samples ``(x, x_tilde)`` shaped ``(n_samples, block)``."""
    K = model.block_size
    if model.kind == "BlockSparse":
        # WLOG the nonzero sits in position 0 of every block.
        x = np.zeros((n_samples, K))
        x[:, 0] = 1.0
    elif model.kind == "GG":
        x = model.sigma_x * rng.standard_normal((n_samples, 1))
    elif model.kind == "BG":
        support = rng.random((n_samples, 1)) < model.epsilon
        x = np.where(support, rng.standard_normal((n_samples, 1)), 0.0)
    else:
        x = (rng.random((n_samples, 1)) < 1.0 / model.K).astype(float)
    noise = rng.standard_normal(x.shape)
    return x, noise


def _mc_sums(x, si_noise, z, model, lam, denoiser):
    """Per-block squared errors reduced to ``(count, sum, sum of squares)``."""
    x_tilde = x + model.sigma * si_noise
    pseudo = x + lam * z
    est = denoiser.apply(pseudo.ravel(), x_tilde.ravel(), lam).reshape(x.shape)
    per_sample = np.mean((est - x) ** 2, axis=1)
    return per_sample.size, float(np.sum(per_sample)), float(np.sum(per_sample**2))


def _combine(parts):
    # fixed shard order keeps the reduction deterministic
    count = sum(p[0] for p in parts)
    total = sum(p[1] for p in parts)
    total_sq = sum(p[2] for p in parts)
    mean = total / count
    var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    return mean, math.sqrt(var / count)


def _mc_term(x, si_noise, z, model, lam, denoiser):
    return _combine([_mc_sums(x, si_noise, z, model, lam, denoiser)])


def _shard_sizes(n_samples, shards):
    base, extra = divmod(n_samples, shards)
    return [base + (i < extra) for i in range(shards)]


def mc_se_step(model, lambda_sq, delta, sigma_w, n_samples, rng, denoiser=None, shards=1, workers=1):
    """Monte-Carlo SE update; returns ``(lambda_sq_next, std_error)``.

    ``n_samples`` counts scalar draws for separable models and whole blocks
    for BlockSparse.  ``denoiser`` defaults to the model's conditional one.
    With ``shards > 1`` the draws are split into shards with their own child
    streams of ``rng``, optionally evaluated on ``workers`` threads; the
    result depends on ``shards`` but never on ``workers``.
    """
    _check(delta, sigma_w)
    if n_samples < MIN_MC_SAMPLES:
        raise ParameterError(f"need at least {MIN_MC_SAMPLES} Monte-Carlo samples, got {n_samples}")
    if not lambda_sq > 0:
        raise ParameterError(f"lambda_sq must be positive, got {lambda_sq}")
    if shards < 1 or n_samples < 2 * shards:
        raise ParameterError(f"invalid shard count {shards} for {n_samples} samples")
    denoiser = denoiser or make_denoiser(model)
    lam = math.sqrt(lambda_sq)

    def shard(args):
        size, gen = args
        x, si_noise = _draw(model, size, gen)
        z = gen.standard_normal(x.shape)
        return _mc_sums(x, si_noise, z, model, lam, denoiser)

    if shards == 1:
        parts = [shard((n_samples, rng))]
    else:
        jobs = list(zip(_shard_sizes(n_samples, shards), rng.spawn(shards)))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(shard, jobs))
        else:
            parts = [shard(j) for j in jobs]
    mean, se = _combine(parts)
    return sigma_w**2 + mean / delta, se / delta


def se_path(model, delta, sigma_w, T, n_samples=None, rng=None, denoiser=None, method=None,
            common_random_numbers=False, shards=1, workers=1):
    """Run the SE recursion for ``T`` steps.

    GG with its own denoiser uses the closed form unless ``method`` is
    forced to ``"monte_carlo"``.  With ``common_random_numbers`` the same
    draws are reused at every step, which makes paths for nearby parameters
    directly comparable.
    """
    if T < 1:
        raise ParameterError(f"T must be at least 1, got {T}")
    if method is None:
        method = "closed_form" if model.kind == "GG" and denoiser is None else "monte_carlo"
    if method == "closed_form" and (model.kind != "GG" or denoiser is not None):
        raise ParameterError("closed-form SE is only available for the GG model with its own denoiser")
    lam_sq = [se_init(model, delta, sigma_w)]
    errs = [0.0]
    if method == "closed_form":
        for _ in range(T):
            lam_sq.append(gg_se_step(lam_sq[-1], model.sigma_x, model.sigma, delta, sigma_w))
            errs.append(0.0)
        return SePath(np.array(lam_sq), model, delta, sigma_w, method, None, np.array(errs))

    if n_samples is None:
        n_samples = DEFAULT_MC_SAMPLES[model.kind]
    if rng is None:
        rng = np.random.default_rng(0)
    denoiser = denoiser or make_denoiser(model)
    fixed = None
    if common_random_numbers:
        x, si_noise = _draw(model, n_samples, rng)
        fixed = (x, si_noise, rng.standard_normal(x.shape))
    for _ in range(T):
        if fixed is None:
            value, err = mc_se_step(model, lam_sq[-1], delta, sigma_w, n_samples, rng, denoiser, shards, workers)
        else:
            mean, se = _mc_term(*fixed, model, math.sqrt(lam_sq[-1]), denoiser)
            value, err = sigma_w**2 + mean / delta, se / delta
        lam_sq.append(value)
        errs.append(err)
    return SePath(np.array(lam_sq), model, delta, sigma_w, method, n_samples, np.array(errs))


def predicted_estimate_mse(path):
    """``delta (lambda_{t+1}^2 - sigma_w^2)`` for ``t + 1 = 1..T``."""
    return path.delta * (path.lambda_sq[1:] - path.sigma_w**2)
