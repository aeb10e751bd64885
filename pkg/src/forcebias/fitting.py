"""Least-squares fit of the transfer model ``h/r = alpha * r**beta``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bias_model import BiasParameters, check_force

__all__ = [
    "ReproductionTrial",
    "FitResult",
    "DegenerateFitError",
    "fit_power_law",
    "rmse",
    "normalize_trials",
    "BETA_BOUNDS",
]

BETA_BOUNDS = (-10.0, -1e-6)
OBJ_RTOL = 1e-12
GRAD_TOL = 1e-10
MAX_ITER = 500
MAX_HALVINGS = 60


class DegenerateFitError(ValueError):
    """Data cannot identify the model parameters."""


@dataclass(frozen=True)
class ReproductionTrial:
    stimulus: float
    response: float

    def __post_init__(self):
        check_force(self.stimulus, "stimulus")
        check_force(self.response, "response")

    @property
    def ratio(self) -> float:
        return self.response / self.stimulus


@dataclass(frozen=True)
class FitResult:
    params: BiasParameters
    rmse: float
    n_trials: int
    converged: bool
    iterations: int
    grad_norm: float = float("nan")
    at_bound: bool = False

    @property
    def gamma(self) -> float:
        return self.params.gamma


def _arrays(trials: Sequence[ReproductionTrial]) -> tuple[np.ndarray, np.ndarray]:
    r = np.array([t.stimulus for t in trials], dtype=float)
    y = np.array([t.response for t in trials], dtype=float) / r
    return r, y


def rmse(trials: Sequence[ReproductionTrial], params: BiasParameters) -> float:
    if len(trials) == 0:
        raise ValueError("rmse of an empty trial set")
    r, y = _arrays(trials)
    res = y - params.alpha * r**params.beta
    return float(np.sqrt(np.mean(res**2)))


def _log_linear_start(r: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.log(r), np.log(y), 1)
    return math.exp(intercept), float(np.clip(slope, *BETA_BOUNDS))


def fit_power_law(trials: Sequence[ReproductionTrial],
                  initial: Optional[BiasParameters] = None) -> FitResult:
    """Minimize ``sum (h/r - alpha r**beta)**2`` over alpha > 0, beta < 0.

    Damped Gauss-Newton from a log-linear start: each step is halved until the
    objective decreases and the iterate is admissible. Iteration stops when
    the relative objective decrease falls below 1e-12 or the gradient norm
    below 1e-10. ``beta`` is clipped into ``BETA_BOUNDS``; a fit that ends on
    a bound is reported as not converged.
    """
    if len(trials) < 3:
        raise DegenerateFitError("need at least 3 trials")
    r, y = _arrays(trials)
    if np.unique(r).size < 2:
        raise DegenerateFitError("need at least two distinct stimulus levels")
    lnr = np.log(r)

    if initial is None:
        alpha, beta = _log_linear_start(r, y)
    else:
        alpha, beta = initial.alpha, float(np.clip(initial.beta, *BETA_BOUNDS))

    def residual(a: float, b: float) -> np.ndarray:
        return y - a * np.exp(b * lnr)

    res = residual(alpha, beta)
    obj = float(res @ res)
    converged = False
    grad_norm = float("nan")
    it = 0
    while it < MAX_ITER:
        it += 1
        model = alpha * np.exp(beta * lnr)
        jac = np.column_stack([model / alpha, model * lnr])  # d(model)/d(alpha, beta)
        grad = -2.0 * jac.T @ res
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < GRAD_TOL:
            converged = True
            break
        step, *_ = np.linalg.lstsq(jac, res, rcond=None)
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            a_new = alpha + t * step[0]
            b_new = float(np.clip(beta + t * step[1], *BETA_BOUNDS))
            if a_new > 0:
                res_new = residual(a_new, b_new)
                obj_new = float(res_new @ res_new)
                if obj_new <= obj:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            # no admissible descent along the Gauss-Newton direction
            converged = grad_norm < GRAD_TOL or obj == 0.0
            break
        decrease = obj - obj_new
        alpha, beta, res, obj = a_new, b_new, res_new, obj_new
        if obj == 0.0 or decrease <= OBJ_RTOL * obj:
            converged = True
            model = alpha * np.exp(beta * lnr)
            jac = np.column_stack([model / alpha, model * lnr])
            grad_norm = float(np.linalg.norm(-2.0 * jac.T @ res))
            break

    at_bound = beta <= BETA_BOUNDS[0] * (1 - 1e-9) or beta >= BETA_BOUNDS[1] * (1 + 1e-9)
    params = BiasParameters(alpha, beta)
    return FitResult(
        params=params,
        rmse=math.sqrt(obj / r.size),
        n_trials=int(r.size),
        converged=converged and not at_bound,
        iterations=it,
        grad_norm=grad_norm,
        at_bound=at_bound,
    )


def normalize_trials(trials: Sequence[ReproductionTrial], gamma: float
                     ) -> list[ReproductionTrial]:
    """Express stimuli and responses in units of ``gamma``."""
    gamma = check_force(gamma, "gamma")
    return [ReproductionTrial(t.stimulus / gamma, t.response / gamma) for t in trials]
