"""
Schedule Oracles - High-precision recomputation and variance checks of the shifting schedule
"""

from typing import Optional, Sequence

import mpmath
import numpy as np

from resshift.core.schedule import (
    FIRST_STEP_NOISE,
    Schedule,
    ScheduleParams,
    build_schedule,
    relative_noise_intensity,
)
from resshift.oracles.base import BaseOracle, OracleReport

TELESCOPING_TOL = 1e-12
EXACTNESS_REL_TOL = 1e-10
ENDPOINT_TOL = 1e-6
MP_DIGITS = 50


def reference_eta(params: ScheduleParams, digits: int = MP_DIGITS) -> list:
    """eta_1..eta_T recomputed with mpmath at the given decimal precision"""
    with mpmath.workdps(digits):
        kappa = mpmath.mpf(params.kappa)
        eta_1 = min((mpmath.mpf(FIRST_STEP_NOISE) / kappa) ** 2, mpmath.mpf(params.eta_1_cap))
        eta_T = mpmath.mpf(params.eta_T)
        T = params.T
        if T == 1:
            return [eta_T]
        b0 = mpmath.exp(mpmath.log(eta_T / eta_1) / (2 * (T - 1)))
        etas = [eta_1]
        for t in range(2, T):
            beta = (mpmath.mpf(t - 1) / (T - 1)) ** mpmath.mpf(params.p) * (T - 1)
            etas.append((mpmath.sqrt(eta_1) * b0**beta) ** 2)
        etas.append(eta_T)
        return etas


def verify_schedule_exactness(
    params: ScheduleParams, seed: int = 0, name: Optional[str] = None
) -> OracleReport:
    """Every eta_t of build_schedule vs the mpmath recomputation, relative error"""
    name = name or f"schedule/exactness/T={params.T}"
    s = build_schedule(params)
    reference = reference_eta(params)
    with mpmath.workdps(MP_DIGITS):
        errors = [
            float(abs(mpmath.mpf(float(got)) - ref) / ref) for got, ref in zip(s.eta, reference)
        ]
        b0_ref = float(
            mpmath.exp(mpmath.log(reference[-1] / reference[0]) / (2 * (params.T - 1)))
            if params.T > 1
            else 1
        )
    b0_err = abs(params.b0 - b0_ref) / b0_ref
    worst = max(max(errors), b0_err)
    return OracleReport(
        name=name,
        statistic=worst,
        tolerance=EXACTNESS_REL_TOL,
        passed=worst < EXACTNESS_REL_TOL,
        samples=params.T,
        seed=seed,
        details={"eta_1": float(s.eta[0]), "eta_T": float(s.eta[-1]), "b0": params.b0},
    )


def verify_variance_telescoping(
    s: Schedule,
    alpha: Optional[Sequence[float]] = None,
    seed: int = 0,
    name: Optional[str] = None,
) -> OracleReport:
    """kappa^2 eta_{t-1} + kappa^2 alpha_t == kappa^2 eta_t for every t

    Passing alpha overrides the schedule's increments (fault injection).
    """
    name = name or f"schedule/telescoping/T={s.T}"
    alpha_arr = s.alpha if alpha is None else np.asarray(alpha, dtype=np.float64)
    if alpha_arr.shape != s.eta.shape:
        raise ValueError(f"alpha must have {s.T} entries, got {alpha_arr.shape}")
    k2 = s.kappa**2
    eta_prev = np.concatenate([[s.eta_0], s.eta[:-1]])
    gap = np.abs(k2 * eta_prev + k2 * alpha_arr - k2 * s.eta)
    worst = float(gap.max())
    return OracleReport(
        name=name,
        statistic=worst,
        tolerance=TELESCOPING_TOL,
        passed=worst <= TELESCOPING_TOL,
        samples=s.T,
        seed=seed,
        details={"worst_t": int(gap.argmax()) + 1, "kappa": s.kappa},
    )


def verify_snr_curve_monotone(
    s: Schedule, seed: int = 0, name: Optional[str] = None
) -> OracleReport:
    """Relative noise intensity strictly increasing, from 0.04 up to kappa sqrt(eta_T)

    The endpoints are taken from the schedule parameters, not from the built eta array.
    """
    name = name or f"snr/T={s.T}"
    params = s.params or ScheduleParams(kappa=s.kappa)
    rel = relative_noise_intensity(s)
    monotone = bool(np.all(np.diff(rel) > 0))
    first_expected = min(FIRST_STEP_NOISE, s.kappa * np.sqrt(params.eta_1_cap))
    last_expected = s.kappa * np.sqrt(params.eta_T)
    endpoint_gap = max(abs(rel[0] - first_expected), abs(rel[-1] - last_expected))
    return OracleReport(
        name=name,
        statistic=float(endpoint_gap),
        tolerance=ENDPOINT_TOL,
        passed=bool(monotone and endpoint_gap <= ENDPOINT_TOL),
        samples=s.T,
        seed=seed,
        details={
            "monotone": monotone,
            "first": float(rel[0]),
            "last": float(rel[-1]),
        },
    )


class ScheduleExactnessOracle(BaseOracle):
    suite = "schedule"
    description = "build_schedule agrees with a 50-digit recomputation"

    def __init__(self, label: str, params: ScheduleParams):
        self.params = params
        self.name = f"schedule/{label}/exactness"

    def check(self, seed: int) -> OracleReport:
        return verify_schedule_exactness(self.params, seed, name=self.name)


class TelescopingOracle(BaseOracle):
    suite = "schedule"
    description = "Transition variances add up to the marginal variance"

    def __init__(self, label: str, s: Schedule):
        self.schedule = s
        self.name = f"schedule/{label}/telescoping"

    def check(self, seed: int) -> OracleReport:
        return verify_variance_telescoping(self.schedule, seed=seed, name=self.name)


class SnrCurveOracle(BaseOracle):
    suite = "snr"
    description = "Relative noise intensity is strictly increasing with the expected endpoints"

    def __init__(self, label: str, s: Schedule):
        self.schedule = s
        self.name = f"snr/{label}"

    def check(self, seed: int) -> OracleReport:
        return verify_snr_curve_monotone(self.schedule, seed, name=self.name)
