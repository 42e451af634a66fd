"""
Flow Path - Noisy LQ-to-HQ interpolation and its equivalence to the diffusion marginals

With the interpolation coefficient c = 1 - eta_s, a flow sample
    c x0 + (1 - c) y0 + kappa sqrt(1 - c) xi
has the same Gaussian law as x_s ~ q(x_s | x0, y0). The flow runs LQ -> HQ as c grows, which is
the diffusion chain read backwards in time.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from resshift.core.errors import OracleError
from resshift.core.kernel import as_tensor, check_same_shape, sample_marginal
from resshift.core.schedule import Schedule
from resshift.degrade.datasets import make_point_cloud
from resshift.oracles.base import BaseOracle, OracleReport, oracle_rng

MEAN_IDENTITY_TOL = 1e-12
VARIANCE_REL_TOL = 0.02
MEAN_SE_MULTIPLE = 4.0
KS_ALPHA = 1e-4
# LQ points sit halfway between their HQ point and the cloud center
CLOUD_SHRINK = 0.5


def _check_coeff(coeff: float) -> float:
    coeff = float(coeff)
    if not 0.0 <= coeff <= 1.0:
        raise ValueError(f"Flow coefficient must lie in [0, 1], got {coeff}")
    return coeff


def flow_sample(
    x0: np.ndarray, y0: np.ndarray, coeff: float, kappa: float, rng: np.random.Generator
) -> np.ndarray:
    """coeff x0 + (1 - coeff) y0 + kappa sqrt(1 - coeff) xi"""
    coeff = _check_coeff(coeff)
    x0, y0 = as_tensor(x0), as_tensor(y0)
    check_same_shape(x0, y0)
    mean = coeff * x0 + (1.0 - coeff) * y0
    std = kappa * math.sqrt(1.0 - coeff)
    if std == 0.0:
        return mean
    return mean + std * rng.standard_normal(mean.shape)


@dataclass(frozen=True, eq=False)
class FlowPath:
    """Probability path indexed by the diffusion step it corresponds to"""

    schedule: Schedule
    lq_at_time_zero: bool = True

    def coeff(self, step: int) -> float:
        """Interpolation coefficient c = 1 - eta_s for diffusion step s (0..T)"""
        return 1.0 - self.schedule.eta_at(step)

    def mean(self, x0: np.ndarray, y0: np.ndarray, coeff: float) -> np.ndarray:
        coeff = _check_coeff(coeff)
        return coeff * as_tensor(x0) + (1.0 - coeff) * as_tensor(y0)

    def std(self, coeff: float) -> float:
        return self.schedule.kappa * math.sqrt(1.0 - _check_coeff(coeff))

    def sample(
        self, x0: np.ndarray, y0: np.ndarray, coeff: float, rng: np.random.Generator
    ) -> np.ndarray:
        return flow_sample(x0, y0, coeff, self.schedule.kappa, rng)

    def conditional_velocity(
        self, x0: np.ndarray, y0: np.ndarray, coeff: float, xi: np.ndarray
    ) -> np.ndarray:
        """d/dc of the flow map at fixed noise xi; diverges as c -> 1"""
        coeff = _check_coeff(coeff)
        if coeff == 1.0:
            raise ValueError("Velocity is unbounded at coeff = 1")
        x0, y0, xi = as_tensor(x0), as_tensor(y0), as_tensor(xi)
        check_same_shape(x0, y0, xi)
        return x0 - y0 - self.schedule.kappa * xi / (2.0 * math.sqrt(1.0 - coeff))


def verify_flow_equivalence(
    s: Schedule,
    step: int,
    n: int = 100_000,
    seed: int = 0,
    x0: float = 0.2,
    y0: float = 0.8,
    name: Optional[str] = None,
) -> OracleReport:
    """Flow sample at c = 1 - eta_s vs the diffusion marginal at s (mean and variance)"""
    if n < 2:
        raise OracleError(f"Need at least 2 draws, got {n}")
    step = s.check_step(step)
    name = name or f"flow/T={s.T}/s={step:04d}"
    path = FlowPath(s)
    c = path.coeff(step)
    eta = s.eta_at(step)

    mean_gap = abs(float(path.mean(x0, y0, c)) - (x0 + eta * (y0 - x0)))
    rng = oracle_rng(seed, name)
    flow = flow_sample(np.full(n, x0), np.full(n, y0), c, s.kappa, rng)
    diffusion = sample_marginal(np.full(n, x0), np.full(n, y0), step, s, rng=rng)

    var_analytic = s.kappa**2 * eta
    var_flow = float(np.var(flow, ddof=1))
    var_diff = float(np.var(diffusion, ddof=1))
    rel_var = abs(var_flow - var_analytic) / var_analytic
    rel_var_diff = abs(var_diff - var_analytic) / var_analytic
    se = math.sqrt(var_flow / n + var_diff / n)
    two_sample_gap = abs(float(flow.mean()) - float(diffusion.mean()))

    passed = (
        mean_gap <= MEAN_IDENTITY_TOL
        and rel_var <= VARIANCE_REL_TOL
        and rel_var_diff <= VARIANCE_REL_TOL
        and two_sample_gap <= MEAN_SE_MULTIPLE * se
    )
    return OracleReport(
        name=name,
        statistic=rel_var,
        tolerance=VARIANCE_REL_TOL,
        passed=passed,
        samples=n,
        seed=seed,
        details={
            "coeff": c,
            "mean_identity_gap": mean_gap,
            "var_analytic": var_analytic,
            "var_flow": var_flow,
            "var_diffusion": var_diff,
            "two_sample_mean_gap": two_sample_gap,
            "two_sample_mean_tolerance": MEAN_SE_MULTIPLE * se,
        },
    )


class FlowEquivalenceOracle(BaseOracle):
    suite = "flow"
    description = "Flow interpolation at c = 1 - eta_s matches q(x_s | x0, y0)"

    def __init__(self, label: str, s: Schedule, step: int, n: int = 100_000):
        self.schedule = s
        self.step = step
        self.n = n
        self.name = f"flow/{label}/s={step:04d}"

    def check(self, seed: int) -> OracleReport:
        return verify_flow_equivalence(self.schedule, self.step, self.n, seed, name=self.name)


def ks_critical(n: int, m: int, alpha: float = KS_ALPHA) -> float:
    """Asymptotic two-sample Kolmogorov-Smirnov critical distance"""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) * math.sqrt((n + m) / (n * m))


def verify_flow_equivalence_cloud(
    s: Schedule,
    step: int,
    n: int = 100_000,
    seed: int = 0,
    name: Optional[str] = None,
) -> OracleReport:
    """Flow and diffusion marginal at step s agree in law over a 2-D mixture of HQ points

    Each HQ point x0 is paired with an LQ point pulled toward the cloud center, and both
    coordinates of the flow and diffusion samples are compared with two-sample KS tests.
    """
    if n < 2:
        raise OracleError(f"Need at least 2 draws, got {n}")
    step = s.check_step(step)
    name = name or f"flow-cloud/T={s.T}/s={step:04d}"
    path = FlowPath(s)
    rng = oracle_rng(seed, name)
    x0 = make_point_cloud(n, rng)
    center = x0.mean(axis=0)
    y0 = center + CLOUD_SHRINK * (x0 - center)

    flow = path.sample(x0, y0, path.coeff(step), rng)
    diffusion = sample_marginal(x0, y0, step, s, rng=rng)
    tests = [stats.ks_2samp(flow[:, k], diffusion[:, k]) for k in range(2)]
    distance = max(float(r.statistic) for r in tests)
    tolerance = ks_critical(n, n)
    return OracleReport(
        name=name,
        statistic=distance,
        tolerance=tolerance,
        passed=distance <= tolerance,
        samples=n,
        seed=seed,
        details={
            "coeff": path.coeff(step),
            "ks_pvalues": [float(r.pvalue) for r in tests],
            "mean_gap": float(np.max(np.abs(flow.mean(axis=0) - diffusion.mean(axis=0)))),
        },
    )


class FlowCloudOracle(BaseOracle):
    suite = "flow"
    description = "Flow and diffusion samples over a 2-D point cloud agree coordinate-wise (KS)"

    def __init__(self, label: str, s: Schedule, step: int, n: int = 100_000):
        self.schedule = s
        self.step = step
        self.n = n
        self.name = f"flow-cloud/{label}/s={step:04d}"

    def check(self, seed: int) -> OracleReport:
        return verify_flow_equivalence_cloud(self.schedule, self.step, self.n, seed, name=self.name)
