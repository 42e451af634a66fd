"""
Base Oracle Class - Foundation for every independent verification check
"""

import asyncio
from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from resshift.core.rng import STREAM_ORACLE, make_rng


class OracleReport(BaseModel):
    """Verdict of one oracle; reproducible from (name, seed)"""

    model_config = ConfigDict(frozen=True)

    name: str
    statistic: float
    tolerance: float
    passed: bool
    samples: int = 0
    seed: int = 0
    details: Dict[str, Any] = Field(default_factory=dict)

    def to_record(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def oracle_rng(seed: int, name: str) -> np.random.Generator:
    """Every oracle draws from its own stream keyed by its name"""
    return make_rng(seed, STREAM_ORACLE, name)


class BaseOracle(ABC):
    """Base class for all oracles"""

    # Oracle metadata (must be overridden)
    name: str = ""
    suite: str = ""
    description: str = ""

    @abstractmethod
    def check(self, seed: int) -> OracleReport:
        """Run the check synchronously and return its report"""

    async def run(self, seed: int) -> OracleReport:
        """Run the check in a worker thread"""
        return await asyncio.to_thread(self.check, seed)

    def __repr__(self) -> str:
        return f"<Oracle: {self.name}>"
