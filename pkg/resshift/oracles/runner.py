"""
Oracle Runner - Runs a suite of independent oracles concurrently and collects their reports
"""

import asyncio
import logging
from typing import List, Optional

from resshift.core.config import resolve_workers
from resshift.core.errors import OracleError
from resshift.oracles.base import BaseOracle, OracleReport
from resshift.oracles.registry import OracleRegistry

logger = logging.getLogger(__name__)


class OracleRunner:
    """Async orchestrator for oracle suites"""

    def __init__(
        self, registry: Optional[OracleRegistry] = None, max_concurrency: Optional[int] = None
    ):
        self.registry = registry if registry is not None else OracleRegistry()
        self.max_concurrency = resolve_workers(max_concurrency or 0)

    async def _run_one(
        self, oracle: BaseOracle, seed: int, semaphore: asyncio.Semaphore
    ) -> OracleReport:
        async with semaphore:
            try:
                report = await oracle.run(seed)
            except OracleError as e:
                logger.error(f"Oracle {oracle.name} could not reach a verdict: {e}")
                report = OracleReport(
                    name=oracle.name,
                    statistic=float("inf"),
                    tolerance=0.0,
                    passed=False,
                    seed=seed,
                    details={"error": str(e)},
                )
        status = "passed" if report.passed else "FAILED"
        logger.debug(f"{oracle.name}: {status} ({report.statistic:.3e} vs {report.tolerance:.3e})")
        return report

    async def run(self, suite: str = "all", seed: int = 0) -> List[OracleReport]:
        """Run every oracle of the suite; reports come back sorted by name"""
        oracles = self.registry.suite(suite)
        semaphore = asyncio.Semaphore(self.max_concurrency)
        reports = await asyncio.gather(*(self._run_one(o, seed, semaphore) for o in oracles))
        reports = sorted(reports, key=lambda r: r.name)
        failed = sum(not r.passed for r in reports)
        logger.info(f"Suite '{suite}': {len(reports) - failed}/{len(reports)} oracles passed")
        return reports

    def run_sync(self, suite: str = "all", seed: int = 0) -> List[OracleReport]:
        return asyncio.run(self.run(suite, seed))
