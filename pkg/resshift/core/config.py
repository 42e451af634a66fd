"""
Run Configuration - RunConfig model, YAML loading, presets and environment settings
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from resshift.core.errors import FormatError
from resshift.core.objective import ObjectiveSpec
from resshift.core.predictor import PredictorLayout, reference_layout
from resshift.core.schedule import PRESETS as SCHEDULE_PRESETS
from resshift.core.schedule import ScheduleParams
from resshift.degrade.datasets import DatasetSpec
from resshift.degrade.spec import DegradationKind, DegradationSpec

logger = logging.getLogger(__name__)

ENV_THREADS = "RESSHIFT_THREADS"
ENV_HOME = "RESSHIFT_HOME"
ENV_LOG_LEVEL = "RESSHIFT_LOG_LEVEL"


class PredictorSpec(BaseModel):
    """Size of the reference predictor"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    hidden_width: int = 32
    t_embed_dim: int = 32
    first_kernel: int = 5
    init_seed: Optional[int] = Field(None, description="Defaults to the run seed")

    def layout(self, channels: int) -> PredictorLayout:
        return reference_layout(
            channels=channels,
            hidden_width=self.hidden_width,
            t_embed_dim=self.t_embed_dim,
            first_kernel=self.first_kernel,
        )


def _no_perceptual() -> ObjectiveSpec:
    return ObjectiveSpec(lambda_=0.0, perceptual=None)


class RunConfig(BaseModel):
    """Every hyper-parameter of a training run; keys in config files mirror these fields"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    schedule: ScheduleParams = Field(default_factory=ScheduleParams)
    objective: ObjectiveSpec = Field(default_factory=_no_perceptual)
    degradation: DegradationSpec = Field(default_factory=DegradationSpec)
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    predictor: PredictorSpec = Field(default_factory=PredictorSpec)
    batch_size: int = 8
    iterations: int = 1000
    lr_max: float = 1e-3
    lr_min: float = 1e-4
    seed: int = 0
    checkpoint_every: int = Field(0, description="0 writes only the final checkpoint")
    log_every: int = 100
    workers: int = Field(0, description="0 defers to RESSHIFT_THREADS / CPU count")

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr_max >= self.lr_min >= 0:
            raise ValueError(
                f"Require lr_max >= lr_min >= 0, got lr_max={self.lr_max}, lr_min={self.lr_min}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.checkpoint_every < 0 or self.log_every < 1 or self.workers < 0:
            raise ValueError("checkpoint_every and workers must be >= 0, log_every >= 1")
        size = self.dataset.size
        if self.degradation.kind == DegradationKind.SUPERRES and size % self.degradation.scale:
            raise ValueError(
                f"dataset.size {size} is not divisible by degradation.scale "
                f"{self.degradation.scale}"
            )
        if self.objective.perceptual_active and size < self.objective.perceptual.min_size:
            raise ValueError(
                f"dataset.size {size} is below the perceptual stack's minimum "
                f"{self.objective.perceptual.min_size}"
            )
        return self

    @property
    def init_seed(self) -> int:
        return self.seed if self.predictor.init_seed is None else self.predictor.init_seed

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)

    def with_seed(self, seed: int) -> "RunConfig":
        return self.model_copy(update={"seed": seed})


def config_digest(config: Union[RunConfig, Dict[str, Any]]) -> str:
    """SHA-256 of the canonical JSON form"""
    data = config.to_dict() if isinstance(config, RunConfig) else config
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def preset_config(name: str, **overrides: Any) -> RunConfig:
    """Named training presets: resshift (T=15, lambda=0) and resshift-l (T=4, lambda=1)"""
    if name == "resshift":
        base = RunConfig(schedule=SCHEDULE_PRESETS["resshift"], objective=_no_perceptual())
    elif name == "resshift-l":
        base = RunConfig(
            schedule=SCHEDULE_PRESETS["resshift-l"], objective=ObjectiveSpec(lambda_=1.0)
        )
    else:
        raise ValueError(f"Unknown preset '{name}'; choose resshift or resshift-l")
    if not overrides:
        return base
    return RunConfig.model_validate({**base.to_dict(), **overrides})


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Load a YAML (or JSON) run config; unknown keys are validation errors"""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise FormatError(f"Config file {path} is not valid YAML: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise FormatError(f"Config file {path} must contain a mapping at the top level")
    return RunConfig.model_validate(data)


def dump_run_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True, allow_unicode=True)


class Settings(BaseModel):
    """Process-wide settings taken from the environment (and .env)"""

    threads: int = 0
    home: Path = Field(default_factory=lambda: Path.home() / ".resshift")
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        values: Dict[str, Any] = {}
        threads = os.environ.get(ENV_THREADS)
        if threads:
            try:
                values["threads"] = max(int(threads), 0)
            except ValueError:
                logger.warning(f"Ignoring non-integer {ENV_THREADS}={threads!r}")
        if os.environ.get(ENV_HOME):
            values["home"] = Path(os.environ[ENV_HOME]).expanduser()
        if os.environ.get(ENV_LOG_LEVEL):
            values["log_level"] = os.environ[ENV_LOG_LEVEL].upper()
        return cls(**values)


def resolve_workers(requested: int = 0) -> int:
    """Explicit request, then RESSHIFT_THREADS, then the CPU count"""
    if requested > 0:
        return requested
    threads = Settings.from_env().threads
    if threads > 0:
        return threads
    return os.cpu_count() or 1
