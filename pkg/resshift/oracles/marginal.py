"""
Marginal Composition Oracle - Composed one-step transitions vs the closed-form marginal
"""

import math
from typing import Optional

import numpy as np

from resshift.core.errors import OracleError
from resshift.core.kernel import forward_chain, marginal_params
from resshift.core.schedule import Schedule
from resshift.oracles.base import BaseOracle, OracleReport, oracle_rng

MIN_CHAINS = 10_000
MEAN_SE_MULTIPLE = 4.0
VARIANCE_REL_TOL = 0.02


def verify_marginal_composition(
    s: Schedule,
    t: int,
    n_chains: int = 100_000,
    seed: int = 0,
    x0: float = 0.2,
    y0: float = 0.8,
    name: Optional[str] = None,
) -> OracleReport:
    """Run n_chains scalar chains through transitions 1..t and compare moments"""
    if n_chains < MIN_CHAINS:
        raise OracleError(f"n_chains must be >= {MIN_CHAINS}, got {n_chains}")
    t = s.check_step(t)
    name = name or f"marginal/T={s.T}/t={t:04d}"

    x0_vec = np.full(n_chains, x0)
    y0_vec = np.full(n_chains, y0)
    samples = forward_chain(x0_vec, y0_vec, t, s, oracle_rng(seed, name))
    q = marginal_params(np.float64(x0), np.float64(y0), t, s)
    mean_analytic = float(q.mean)

    mean_err = abs(float(samples.mean()) - mean_analytic)
    mean_tol = MEAN_SE_MULTIPLE * q.std / math.sqrt(n_chains)
    var_emp = float(np.var(samples, ddof=1))
    rel_var = abs(var_emp - q.var) / q.var
    return OracleReport(
        name=name,
        statistic=mean_err,
        tolerance=mean_tol,
        passed=mean_err <= mean_tol and rel_var <= VARIANCE_REL_TOL,
        samples=n_chains,
        seed=seed,
        details={
            "mean_analytic": mean_analytic,
            "mean_empirical": float(samples.mean()),
            "var_analytic": q.var,
            "var_empirical": var_emp,
            "var_rel_error": rel_var,
            "var_rel_tolerance": VARIANCE_REL_TOL,
        },
    )


class MarginalCompositionOracle(BaseOracle):
    suite = "marginal"
    description = "Composing transitions 1..t reproduces q(x_t | x0, y0)"

    def __init__(self, label: str, s: Schedule, t: int, n_chains: int = 100_000):
        self.schedule = s
        self.t = t
        self.n_chains = n_chains
        self.name = f"marginal/{label}/t={t:04d}"

    def check(self, seed: int) -> OracleReport:
        return verify_marginal_composition(
            self.schedule, self.t, self.n_chains, seed, name=self.name
        )
