"""
Shifting Schedule - The monotone sequence {eta_t} and its increments {alpha_t}
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from resshift.core.errors import ScheduleError, StepRangeError

# kappa * sqrt(eta_1) is held at this value unless the cap is smaller
FIRST_STEP_NOISE = 0.04


class ScheduleParams(BaseModel):
    """Hyper-parameters of the non-uniform geometric schedule"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    T: int = Field(15, description="Number of diffusion steps")
    p: float = Field(0.3, description="Growth exponent of the shifting speed")
    kappa: float = Field(2.0, description="Global noise scale")
    eta_1_cap: float = Field(0.001, description="Upper bound on eta_1")
    eta_T: float = Field(0.999, description="Terminal shift fraction")

    @model_validator(mode="after")
    def _check_bounds(self) -> "ScheduleParams":
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not self.p > 0:
            raise ValueError(f"p must be > 0, got {self.p}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not 0 < self.eta_1_cap < self.eta_T < 1:
            raise ValueError(
                f"Require 0 < eta_1_cap < eta_T < 1, got eta_1_cap={self.eta_1_cap}, "
                f"eta_T={self.eta_T}"
            )
        return self

    @property
    def eta_1(self) -> float:
        """First shift fraction: min((0.04/kappa)^2, eta_1_cap)"""
        return min((FIRST_STEP_NOISE / self.kappa) ** 2, self.eta_1_cap)

    @property
    def b0(self) -> float:
        """Geometric base so that sqrt(eta_T) = sqrt(eta_1) * b0^(T-1)"""
        if self.T < 2:
            return 1.0
        return math.exp(math.log(self.eta_T / self.eta_1) / (2 * (self.T - 1)))

    def beta(self, t: int) -> float:
        """Exponent beta_t = ((t-1)/(T-1))^p * (T-1)"""
        if self.T < 2:
            return 0.0
        return ((t - 1) / (self.T - 1)) ** self.p * (self.T - 1)


PRESETS: Dict[str, ScheduleParams] = {
    "resshift": ScheduleParams(T=15, p=0.3, kappa=2.0),
    "resshift-l": ScheduleParams(T=4, p=0.3, kappa=2.0),
    "ldm": ScheduleParams(T=1000, p=0.8, kappa=40.0),
}


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class Schedule:
    """Immutable precomputed schedule; index 0 of the arrays holds t = 1"""

    kappa: float
    eta: np.ndarray
    alpha: np.ndarray
    params: Optional[ScheduleParams] = None
    eta_0: float = field(default=0.0)

    def __post_init__(self):
        if self.eta.ndim != 1 or self.eta.size < 1:
            raise ScheduleError("eta must be a non-empty 1-D sequence")
        if self.alpha.shape != self.eta.shape:
            raise ScheduleError("alpha and eta must have the same length")
        if not self.kappa > 0:
            raise ScheduleError(f"kappa must be > 0, got {self.kappa}")
        if not np.all(np.isfinite(self.eta)):
            raise ScheduleError("eta contains non-finite values")
        if self.eta[0] <= 0 or self.eta[-1] >= 1:
            raise ScheduleError("eta must lie inside (0, 1)")
        if np.any(np.diff(self.eta) <= 0):
            raise ScheduleError("eta must be strictly increasing")

    @classmethod
    def from_sequence(cls, eta: Sequence[float], kappa: float) -> "Schedule":
        """Build a schedule from an explicit strictly increasing eta sequence"""
        eta_arr = np.asarray(eta, dtype=np.float64)
        alpha = np.diff(eta_arr, prepend=0.0)
        return cls(kappa=float(kappa), eta=_frozen(eta_arr), alpha=_frozen(alpha))

    @property
    def T(self) -> int:
        return int(self.eta.size)

    def check_step(self, t: int) -> int:
        """Validate 1 <= t <= T and return t as int"""
        t = int(t)
        if not 1 <= t <= self.T:
            raise StepRangeError(t, self.T)
        return t

    def eta_at(self, t: int) -> float:
        """eta_t with the convention eta_0 = 0"""
        if t == 0:
            return self.eta_0
        return float(self.eta[self.check_step(t) - 1])

    def alpha_at(self, t: int) -> float:
        return float(self.alpha[self.check_step(t) - 1])


def build_schedule(params: ScheduleParams) -> Schedule:
    """Construct the shifting sequence for the given hyper-parameters"""
    T = params.T
    if T == 1:
        # Single full shift
        eta = np.array([params.eta_T])
    else:
        eta = np.empty(T, dtype=np.float64)
        eta[0] = params.eta_1
        eta[-1] = params.eta_T
        if T > 2:
            t = np.arange(2, T, dtype=np.float64)
            beta = ((t - 1) / (T - 1)) ** params.p * (T - 1)
            sqrt_eta = math.sqrt(params.eta_1) * params.b0**beta
            eta[1:-1] = sqrt_eta**2
    alpha = np.diff(eta, prepend=0.0)
    try:
        return Schedule(kappa=params.kappa, eta=_frozen(eta), alpha=_frozen(alpha), params=params)
    except ScheduleError as e:
        raise ScheduleError(f"Schedule for {params!r} is invalid: {e}") from e


def relative_noise_intensity(s: Schedule, signal_power: float = 1.0) -> np.ndarray:
    """sqrt(kappa^2 eta_t / signal_power) for t = 1..T (inverse square-root SNR)"""
    if not signal_power > 0:
        raise ValueError(f"signal_power must be > 0, got {signal_power}")
    return np.sqrt(s.kappa**2 * s.eta / signal_power)


def shifting_speed(s: Schedule) -> np.ndarray:
    """sqrt(eta_t) for t = 1..T"""
    return np.sqrt(s.eta)


def schedule_table(s: Schedule, signal_power: float = 1.0) -> List[Dict[str, float]]:
    """Rows (t, eta, alpha, sqrt_eta, rel_noise) for curve export"""
    rel = relative_noise_intensity(s, signal_power)
    speed = shifting_speed(s)
    return [
        {
            "t": t,
            "eta": float(s.eta[t - 1]),
            "alpha": float(s.alpha[t - 1]),
            "sqrt_eta": float(speed[t - 1]),
            "rel_noise": float(rel[t - 1]),
        }
        for t in range(1, s.T + 1)
    ]
