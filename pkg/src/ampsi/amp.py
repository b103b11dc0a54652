"""The AMP iteration with side information.

One step computes the Onsager-corrected residual

    r^t = y - A x^t + (div_{t-1} / m) r^{t-1}

and denoises the pseudo-data ``x^t + A^T r^t`` together with the side
information to obtain ``x^{t+1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .denoise import apply_denoiser
from .errors import ConfigError, DimensionError, NumericDivergenceError, ParameterError


@dataclass
class AmpState:
    t: int
    x: np.ndarray
    r_prev: np.ndarray
    div_prev: float = 0.0
    pseudo: np.ndarray | None = None
    lam: float | None = None

    @classmethod
    def initial(cls, system):
        return cls(t=0, x=np.zeros(system.n), r_prev=np.zeros(system.m), div_prev=0.0)


@dataclass
class IterationRecord:
    t: int
    mse_estimate: float
    mse_pseudo: float
    lambda_used: float


@dataclass
class Trajectory:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def mse_estimate(self):
        return self.column("mse_estimate")

    @property
    def mse_pseudo(self):
        return self.column("mse_pseudo")

    @property
    def lambdas(self):
        return self.column("lambda_used")


def amp_step(state, system, denoiser, lambda_t=None, onsager=True):
    """Advance ``state`` by one iteration.

    ``lambda_t=None`` estimates the effective noise level from the residual
    as ``||r^t|| / sqrt(m)`` instead of taking it from state evolution.
    """
    if state.x.shape != (system.n,) or state.r_prev.shape != (system.m,):
        raise DimensionError("AMP state does not match the linear system")
    r = system.y - system.A @ state.x
    if onsager and state.t > 0:
        r += (state.div_prev / system.m) * state.r_prev
    if lambda_t is None:
        lambda_t = float(np.linalg.norm(r)) / math.sqrt(system.m)
    if not lambda_t > 0:
        raise ParameterError(f"lambda_t must be positive at iteration {state.t}, got {lambda_t}")
    pseudo = state.x + system.A.T @ r
    x_next, div = apply_denoiser(denoiser, pseudo, system.side_info, lambda_t)
    if not (np.isfinite(div) and np.all(np.isfinite(x_next)) and np.all(np.isfinite(r))):
        raise NumericDivergenceError(f"non-finite values at iteration {state.t}", iteration=state.t)
    return AmpState(t=state.t + 1, x=x_next, r_prev=r, div_prev=float(div), pseudo=pseudo, lam=lambda_t)


def pseudo_data(state, system):
    """``x^t + A^T r^t`` for the most recent residual of ``state``."""
    if state.pseudo is not None:
        return state.pseudo
    if state.x.shape != (system.n,):
        raise DimensionError("AMP state does not match the linear system")
    return state.x + system.A.T @ (system.y - system.A @ state.x)


def run_amp(system, denoiser, lambdas, T, onsager=True, stop_tol=None):
    """Run ``T`` iterations and record per-iteration diagnostics.

    ``lambdas`` is an :class:`~ampsi.se.SePath` (its ``lambda_sq[t]`` feeds
    step ``t``) or ``None`` for the empirical residual estimate.  With
    ``stop_tol`` set, iteration stops once consecutive ``lambda^2`` values
    differ by less than ``stop_tol`` relative.
    """
    if T < 1:
        raise ConfigError(f"T must be at least 1, got {T}", key="iterations")
    if lambdas is not None and len(lambdas.lambda_sq) < T:
        raise ConfigError(f"SE path has {len(lambdas.lambda_sq)} entries, need {T}", key="iterations")
    state = AmpState.initial(system)
    traj = Trajectory()
    x = system.x_true
    prev_sq = None
    for t in range(T):
        lam = None if lambdas is None else math.sqrt(lambdas.lambda_sq[t])
        state = amp_step(state, system, denoiser, lam, onsager=onsager)
        lam = state.lam
        with np.errstate(over="ignore"):
            rec = IterationRecord(
                t=t,
                mse_estimate=float(np.mean((state.x - x) ** 2)),
                mse_pseudo=float(np.mean((state.pseudo - x) ** 2)),
                lambda_used=lam,
            )
        if not (math.isfinite(rec.mse_estimate) and math.isfinite(rec.mse_pseudo)):
            raise NumericDivergenceError(f"error overflowed at iteration {t}", iteration=t)
        traj.records.append(rec)
        if stop_tol is not None and prev_sq is not None and abs(lam**2 - prev_sq) < stop_tol * prev_sq:
            break
        prev_sq = lam**2
    return traj
