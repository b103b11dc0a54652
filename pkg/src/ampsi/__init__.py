"""Approximate message passing with side information (AMP-SI)."""
from .amp import AmpState, Trajectory, amp_step, pseudo_data, run_amp
from .denoise import apply_denoiser, make_denoiser
from .errors import (
    AmpSiError,
    ConfigError,
    DimensionError,
    NotComputableError,
    NumericDivergenceError,
    ParameterError,
)
from .kernels import BACKEND
from .linmodel import LinearSystem, SignalModel, gen_matrix, gen_signal_pair, measure, prior_second_moment
from .se import SePath, predicted_estimate_mse, se_init, se_path

__version__ = "0.1.0"
