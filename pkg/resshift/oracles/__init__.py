"""
Verification oracles for the ResShift closed forms
"""

from resshift.oracles.base import BaseOracle, OracleReport
from resshift.oracles.flow import (
    FlowPath,
    flow_sample,
    verify_flow_equivalence,
    verify_flow_equivalence_cloud,
)
from resshift.oracles.marginal import verify_marginal_composition
from resshift.oracles.posterior import grid_posterior_moments, verify_posterior_bayes
from resshift.oracles.registry import SUITES, OracleRegistry
from resshift.oracles.runner import OracleRunner
from resshift.oracles.schedule_checks import (
    verify_schedule_exactness,
    verify_snr_curve_monotone,
    verify_variance_telescoping,
)

__all__ = [
    "BaseOracle",
    "OracleReport",
    "OracleRegistry",
    "OracleRunner",
    "SUITES",
    "FlowPath",
    "flow_sample",
    "verify_flow_equivalence",
    "verify_flow_equivalence_cloud",
    "verify_marginal_composition",
    "grid_posterior_moments",
    "verify_posterior_bayes",
    "verify_schedule_exactness",
    "verify_snr_curve_monotone",
    "verify_variance_telescoping",
]
