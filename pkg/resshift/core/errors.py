"""
Errors - Exception hierarchy shared by every ResShift module
"""

from pathlib import Path
from typing import Optional


class ResShiftError(Exception):
    """Base class for all ResShift errors"""


class ScheduleError(ResShiftError, ValueError):
    """Invalid shifting schedule"""


class ShapeError(ResShiftError, ValueError):
    """Tensor shapes that should agree do not"""


class StepRangeError(ResShiftError, ValueError):
    """Timestep outside 1..T"""

    def __init__(self, t: int, T: int):
        super().__init__(f"Timestep t={t} outside the valid range 1..{T}")
        self.t = t
        self.T = T


class NonFiniteError(ResShiftError, ArithmeticError):
    """A NaN or Inf appeared where finite values are required"""


class NonFiniteLossError(NonFiniteError):
    """Loss evaluated to a non-finite value"""

    def __init__(self, batch_index: int, value: float):
        super().__init__(f"Non-finite loss {value!r} at batch index {batch_index}")
        self.batch_index = batch_index
        self.value = value


class NonFiniteGradientError(NonFiniteError):
    """Gradient has non-finite entries; the optimizer step was rejected"""


class SamplingError(NonFiniteError):
    """Reverse chain produced a non-finite state"""

    def __init__(self, step: int):
        super().__init__(f"Non-finite state produced at reverse step t={step}")
        self.step = step


class DegradationError(ResShiftError, ValueError):
    """Degradation operator cannot be applied to the given input"""


class FormatError(ResShiftError, ValueError):
    """File does not follow the expected on-disk format"""


class OracleError(ResShiftError, ValueError):
    """Oracle was configured in a way that cannot produce a meaningful verdict"""


class TrainingAborted(ResShiftError):
    """Training stopped early; a diagnostic dump was written"""

    def __init__(self, message: str, dump_path: Optional[Path] = None):
        super().__init__(message)
        self.dump_path = dump_path
