"""Scale functions of spectrally negative Levy processes."""

from ._accel import BACKEND as KERNEL_BACKEND
from .errors import (BracketError, ChecksumError, ConfigError, DomainError, LevyScaleError,
                     NumericalError, PoleError, PreconditionError, RouteError, SearchLimitError,
                     TruncationError)
from .inversion import FilonConfig, MpConfig
from .model import LevyModel, boundary_values, classify, load_model, model_from_dict, phi_q
from .scale import eval_scale, scale_W

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "LevyModel", "FilonConfig", "MpConfig", "boundary_values", "classify",
    "load_model", "model_from_dict", "phi_q", "eval_scale", "scale_W",
    "LevyScaleError", "ConfigError", "DomainError", "PoleError", "RouteError",
    "PreconditionError", "NumericalError", "ChecksumError", "BracketError", "TruncationError",
    "SearchLimitError",
]
