"""
ResShift - Residual-shifting diffusion for image restoration at desk scale
"""

# Load environment variables from .env file if it exists
try:
    from dotenv import load_dotenv
    from pathlib import Path

    # Get the project root (parent directory of resshift package)
    project_root = Path(__file__).parent.parent
    env_file = project_root / ".env"

    # Load .env file from project root
    load_dotenv(dotenv_path=env_file)
except ImportError:
    # python-dotenv not installed, skip loading .env file
    pass

from resshift.core.config import RunConfig, load_run_config, preset_config
from resshift.core.errors import ResShiftError
from resshift.core.kernel import (
    marginal_params,
    posterior_params,
    reverse_step,
    sample_marginal,
)
from resshift.core.pipeline import evaluate, sample, train
from resshift.core.schedule import Schedule, ScheduleParams, build_schedule
from resshift.degrade import DegradationSpec, ToyImageDataset, apply_degradation
from resshift.oracles import OracleRunner

__version__ = "0.1.0"
__all__ = [
    "RunConfig",
    "load_run_config",
    "preset_config",
    "ResShiftError",
    "marginal_params",
    "posterior_params",
    "reverse_step",
    "sample_marginal",
    "evaluate",
    "sample",
    "train",
    "Schedule",
    "ScheduleParams",
    "build_schedule",
    "DegradationSpec",
    "ToyImageDataset",
    "apply_degradation",
    "OracleRunner",
]
