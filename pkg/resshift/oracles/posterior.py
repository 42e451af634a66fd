"""
Posterior Grid-Bayes Oracle - Closed-form posterior vs numerically normalised prior x likelihood
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from resshift.core.errors import OracleError
from resshift.core.kernel import marginal_params, posterior_params
from resshift.core.schedule import Schedule
from resshift.oracles.base import BaseOracle, OracleReport

GRID_POINTS = 20001
WIDTH_SIGMAS = 6.0
ABS_TOL = 1e-4


@dataclass(frozen=True)
class GridMoments:
    mean: float
    var: float
    quadrature_error: float


def _moments(grid: np.ndarray, log_density: np.ndarray):
    w = np.exp(log_density - log_density.max())
    z = integrate.trapezoid(w, grid)
    mean = integrate.trapezoid(w * grid, grid) / z
    var = integrate.trapezoid(w * (grid - mean) ** 2, grid) / z
    return float(mean), float(var)


def grid_posterior_moments(
    x_t: float,
    x0: float,
    y0: float,
    eta_prev: float,
    eta_t: float,
    kappa: float,
    grid_points: int = GRID_POINTS,
    width_sigmas: float = WIDTH_SIGMAS,
) -> GridMoments:
    """Mean and variance of q(x_t | x_{t-1}, y0) q(x_{t-1} | x0, y0) over x_{t-1}

    The quadrature error is estimated against the same rule on every other grid point.
    """
    if grid_points < 5 or grid_points % 2 == 0:
        raise OracleError(f"grid_points must be an odd number >= 5, got {grid_points}")
    if width_sigmas <= 0:
        raise OracleError(f"width_sigmas must be > 0, got {width_sigmas}")
    if not 0 < eta_prev < eta_t:
        raise OracleError(f"Need 0 < eta_prev < eta_t, got {eta_prev}, {eta_t}")

    alpha = eta_t - eta_prev
    e0 = y0 - x0
    prior_mean, prior_var = x0 + eta_prev * e0, kappa**2 * eta_prev
    lik_var = kappa**2 * alpha

    center = (eta_prev / eta_t) * x_t + (alpha / eta_t) * x0
    half_width = width_sigmas * math.sqrt(prior_var + lik_var)
    grid = np.linspace(center - half_width, center + half_width, grid_points)

    log_density = -((x_t - grid - alpha * e0) ** 2) / (2 * lik_var) - (
        (grid - prior_mean) ** 2
    ) / (2 * prior_var)
    mean, var = _moments(grid, log_density)
    coarse_mean, coarse_var = _moments(grid[::2], log_density[::2])
    error = max(abs(mean - coarse_mean), abs(var - coarse_var))
    return GridMoments(mean=mean, var=var, quadrature_error=error)


def verify_posterior_bayes(
    s: Schedule,
    t: int,
    grid_points: int = GRID_POINTS,
    width_sigmas: float = WIDTH_SIGMAS,
    x0: float = 0.2,
    y0: float = 0.8,
    x_t: Optional[float] = None,
    seed: int = 0,
    name: Optional[str] = None,
) -> OracleReport:
    """Closed-form posterior mean/variance vs trapezoidal Bayes on a grid, at step t >= 2"""
    t = s.check_step(t)
    if t < 2:
        raise OracleError("The posterior at t = 1 is a point mass; grid Bayes needs t >= 2")
    name = name or f"posterior/T={s.T}/t={t:04d}"
    if x_t is None:
        x_t = float(marginal_params(np.float64(x0), np.float64(y0), t, s).mean)

    grid = grid_posterior_moments(
        x_t, x0, y0, s.eta_at(t - 1), s.eta_at(t), s.kappa, grid_points, width_sigmas
    )
    if grid.quadrature_error > ABS_TOL:
        raise OracleError(
            f"Grid too coarse for {name}: estimated quadrature error {grid.quadrature_error:.3e}"
        )
    q = posterior_params(np.float64(x_t), np.float64(x0), t, s)
    mean_err = abs(grid.mean - float(q.mean))
    var_err = abs(grid.var - q.var)
    statistic = max(mean_err, var_err)
    return OracleReport(
        name=name,
        statistic=statistic,
        tolerance=ABS_TOL,
        passed=statistic <= ABS_TOL,
        samples=grid_points,
        seed=seed,
        details={
            "x_t": x_t,
            "mean_closed_form": float(q.mean),
            "mean_grid": grid.mean,
            "var_closed_form": q.var,
            "var_grid": grid.var,
            "quadrature_error": grid.quadrature_error,
        },
    )


class PosteriorBayesOracle(BaseOracle):
    suite = "posterior"
    description = "Closed-form q(x_{t-1} | x_t, x0, y0) matches grid Bayes"

    def __init__(self, label: str, s: Schedule, t: int):
        self.schedule = s
        self.t = t
        self.name = f"posterior/{label}/t={t:04d}"

    def check(self, seed: int) -> OracleReport:
        return verify_posterior_bayes(self.schedule, self.t, seed=seed, name=self.name)
