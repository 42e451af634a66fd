"""
Oracle Registry - Named oracle instances grouped into suites
"""

import logging
from typing import Any, Dict, List, Optional

from resshift.core.schedule import PRESETS, build_schedule
from resshift.oracles.base import BaseOracle
from resshift.oracles.flow import FlowCloudOracle, FlowEquivalenceOracle
from resshift.oracles.marginal import MarginalCompositionOracle
from resshift.oracles.posterior import PosteriorBayesOracle
from resshift.oracles.schedule_checks import (
    ScheduleExactnessOracle,
    SnrCurveOracle,
    TelescopingOracle,
)

logger = logging.getLogger(__name__)

SUITES = ("all", "marginal", "posterior", "flow", "snr", "schedule")
FLOW_STEPS = (1, 4, 8, 15)
FLOW_CLOUD_STEPS = (1, 8)


class OracleRegistry:
    """Registry of oracle instances"""

    def __init__(self, load_builtin: bool = True, n_samples: int = 100_000):
        self.oracles: Dict[str, BaseOracle] = {}
        self.n_samples = n_samples
        if load_builtin:
            self._load_builtin_oracles()

    def _load_builtin_oracles(self):
        """The desk-scale suite for the resshift and ldm schedules"""
        main = build_schedule(PRESETS["resshift"])
        ldm = build_schedule(PRESETS["ldm"])

        for label in ("resshift", "ldm"):
            self.register_oracle(ScheduleExactnessOracle(label, PRESETS[label]))
        for label, s in (("resshift", main), ("ldm", ldm)):
            self.register_oracle(TelescopingOracle(label, s))
            self.register_oracle(SnrCurveOracle(label, s))
        for t in range(1, main.T + 1):
            self.register_oracle(MarginalCompositionOracle("resshift", main, t, self.n_samples))
        for t in range(2, main.T + 1):
            self.register_oracle(PosteriorBayesOracle("resshift", main, t))
        for step in FLOW_STEPS:
            self.register_oracle(FlowEquivalenceOracle("resshift", main, step, self.n_samples))
        for step in FLOW_CLOUD_STEPS:
            self.register_oracle(FlowCloudOracle("resshift", main, step, self.n_samples))

    def register_oracle(self, oracle: BaseOracle):
        if not isinstance(oracle, BaseOracle):
            raise ValueError(f"{oracle!r} is not a BaseOracle")
        if not oracle.name or oracle.suite not in SUITES:
            raise ValueError(f"Oracle {oracle!r} needs a name and one of the suites {SUITES}")
        if oracle.name in self.oracles:
            raise ValueError(f"Oracle '{oracle.name}' is already registered")
        self.oracles[oracle.name] = oracle

    def get_oracle(self, name: str) -> Optional[BaseOracle]:
        return self.oracles.get(name)

    def suite(self, name: str = "all") -> List[BaseOracle]:
        """Oracles of a suite, sorted by name"""
        if name not in SUITES:
            raise ValueError(f"Unknown suite '{name}'; choose one of {', '.join(SUITES)}")
        selected = [o for o in self.oracles.values() if name == "all" or o.suite == name]
        return sorted(selected, key=lambda o: o.name)

    def list_oracles(self) -> List[Dict[str, Any]]:
        return [
            {"name": o.name, "suite": o.suite, "description": o.description}
            for o in self.suite("all")
        ]
