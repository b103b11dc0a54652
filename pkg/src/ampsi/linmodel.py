"""Problem-instance generation for the linear model ``y = A x + w``.

Four signal/side-information laws are supported, all with side information
``x_tilde = x + N(0, sigma^2)``:

* ``GG``           -- ``x ~ N(0, sigma_x^2)`` i.i.d.
* ``BG``           -- ``x ~ eps N(0, 1) + (1 - eps) delta_0`` i.i.d.
* ``BlockSparse``  -- blocks of ``K`` entries, exactly one entry per block is 1
* ``BernoulliSep`` -- ``x ~ Bernoulli(1/K)`` i.i.d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

MODEL_KINDS = ("GG", "BG", "BlockSparse", "BernoulliSep")


@dataclass(frozen=True)
class SignalModel:
    """Joint law of the signal and its side information.

    Only the parameters relevant to ``kind`` are read; the others keep their
    defaults.
    """

    kind: str
    sigma: float
    sigma_x: float = 1.0
    epsilon: float = 1.0
    K: int = 1

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ParameterError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if not self.sigma > 0 or not math.isfinite(self.sigma):
            raise ParameterError(f"sigma must be positive and finite, got {self.sigma}")
        if self.kind == "GG" and not self.sigma_x > 0:
            raise ParameterError(f"sigma_x must be positive, got {self.sigma_x}")
        if self.kind == "BG" and not 0 < self.epsilon <= 1:
            raise ParameterError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.kind in ("BlockSparse", "BernoulliSep"):
            if int(self.K) != self.K or self.K < 1:
                raise ParameterError(f"K must be a positive integer, got {self.K}")
            object.__setattr__(self, "K", int(self.K))

    @classmethod
    def gg(cls, sigma_x, sigma):
        return cls("GG", sigma=sigma, sigma_x=sigma_x)

    @classmethod
    def bg(cls, epsilon, sigma):
        return cls("BG", sigma=sigma, epsilon=epsilon)

    @classmethod
    def block_sparse(cls, K, sigma):
        return cls("BlockSparse", sigma=sigma, K=K)

    @classmethod
    def bernoulli_sep(cls, K, sigma):
        return cls("BernoulliSep", sigma=sigma, K=K)

    @property
    def block_size(self):
        """Length of the coupled blocks (1 for separable models)."""
        return self.K if self.kind == "BlockSparse" else 1

    def params(self):
        """The parameters that define this model, as a plain dict."""
        if self.kind == "GG":
            return {"type": "GG", "sigma_x": self.sigma_x, "sigma": self.sigma}
        if self.kind == "BG":
            return {"type": "BG", "epsilon": self.epsilon, "sigma": self.sigma}
        return {"type": self.kind, "K": self.K, "sigma": self.sigma}


@dataclass
class LinearSystem:
    """A single problem instance."""

    A: np.ndarray
    y: np.ndarray
    x_true: np.ndarray
    side_info: np.ndarray
    sigma_w: float

    def __post_init__(self):
        if self.A.ndim != 2:
            raise DimensionError(f"A must be 2-D, got shape {self.A.shape}")
        m, n = self.A.shape
        if self.y.shape != (m,):
            raise DimensionError(f"y has shape {self.y.shape}, expected ({m},)")
        if self.x_true.shape != (n,) or self.side_info.shape != (n,):
            raise DimensionError(
                f"x_true {self.x_true.shape} and side_info {self.side_info.shape} must both be ({n},)"
            )

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def delta(self):
        return self.m / self.n


def split_streams(seed, count):
    """Derive ``count`` independent generators from one master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(c) for c in children]


def gen_matrix(m, n, rng):
    """Dense ``m x n`` matrix with i.i.d. ``N(0, 1/m)`` entries."""
    if m < 1 or n < 1:
        raise DimensionError(f"matrix dimensions must be positive, got ({m}, {n})")
    A = rng.standard_normal((m, n))
    A *= 1.0 / math.sqrt(m)
    return A


def gen_signal_pair(model, n, rng):
    """Draw ``(x_true, side_info)`` of length ``n`` from ``model``."""
    if n < 1:
        raise DimensionError(f"signal length must be positive, got {n}")
    if model.kind == "GG":
        x = model.sigma_x * rng.standard_normal(n)
    elif model.kind == "BG":
        support = rng.random(n) < model.epsilon
        x = np.where(support, rng.standard_normal(n), 0.0)
    elif model.kind == "BlockSparse":
        K = model.K
        if n % K:
            raise DimensionError(f"n={n} is not divisible by block size K={K}")
        L = n // K
        x = np.zeros(n)
        x[np.arange(L) * K + rng.integers(0, K, size=L)] = 1.0
    else:
        x = (rng.random(n) < 1.0 / model.K).astype(float)
    side_info = x + model.sigma * rng.standard_normal(n)
    return x, side_info


def measure(A, x_true, sigma_w, rng):
    """``A @ x_true`` plus i.i.d. ``N(0, sigma_w^2)`` noise."""
    if A.ndim != 2 or x_true.shape != (A.shape[1],):
        raise DimensionError(f"cannot multiply A {A.shape} by x {x_true.shape}")
    if sigma_w < 0:
        raise ParameterError(f"sigma_w must be non-negative, got {sigma_w}")
    y = A @ x_true
    if sigma_w > 0:
        y += sigma_w * rng.standard_normal(A.shape[0])
    return y


def prior_second_moment(model):
    """Per-entry ``E[X^2]`` under the signal prior."""
    if model.kind == "GG":
        return model.sigma_x**2
    if model.kind == "BG":
        return model.epsilon
    return 1.0 / model.K


def make_system(model, n, m, sigma_w, rng_matrix, rng_signal, rng_noise):
    """Assemble a full :class:`LinearSystem` from three generator streams."""
    A = gen_matrix(m, n, rng_matrix)
    x, x_tilde = gen_signal_pair(model, n, rng_signal)
    y = measure(A, x, sigma_w, rng_noise)
    return LinearSystem(A=A, y=y, x_true=x, side_info=x_tilde, sigma_w=sigma_w)
