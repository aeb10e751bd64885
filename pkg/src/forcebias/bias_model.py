"""Power-law force-reproduction bias.

A human asked to reproduce a force ``r`` applies ``h = alpha * r**(1 + beta)``.
Written as a signed multiplicative bias,

    h = (1 + U(r)) * r,    U(r) = delta(r) * sgn(gamma - r),

with implicit gain ``delta(r) = |1 - alpha * r**beta|`` and implicit equilibrium
point ``gamma = (1 / alpha)**(1 / beta)``. Forces below ``gamma`` are
over-reproduced, forces above it under-reproduced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BiasParameters",
    "check_force",
    "sgn",
    "implicit_equilibrium",
    "implicit_gain",
    "bias",
    "reproduce",
]


def check_force(value: float, name: str = "force") -> float:
    """Return ``value`` as float, raising ValueError unless it is finite and > 0."""
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive force, got {value!r}")
    return value


def sgn(x: float) -> int:
    # sgn(0) == 0 exactly
    return int(x > 0) - int(x < 0)


@dataclass(frozen=True)
class BiasParameters:
    """Parameters of the transfer model ``h / r = alpha * r**beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not math.isfinite(self.beta) or self.beta >= 0:
            # beta == 0 leaves gamma undefined
            raise ValueError(f"beta must be negative, got {self.beta!r}")

    @property
    def gamma(self) -> float:
        return implicit_equilibrium(self)

    @classmethod
    def from_equilibrium(cls, gamma: float, beta: float) -> "BiasParameters":
        """Parameters with exponent ``beta`` whose equilibrium point is ``gamma``."""
        gamma = check_force(gamma, "gamma")
        return cls(alpha=gamma ** (-beta), beta=beta)


def implicit_equilibrium(params: BiasParameters) -> float:
    return (1.0 / params.alpha) ** (1.0 / params.beta)


def implicit_gain(params: BiasParameters, r: float) -> float:
    r = check_force(r, "r")
    return abs(1.0 - params.alpha * r**params.beta)


def bias(params: BiasParameters, r: float) -> float:
    """Signed bias ``U(r)``; ``1 + U(r) == alpha * r**beta`` up to rounding."""
    r = check_force(r, "r")
    gamma = implicit_equilibrium(params)
    return implicit_gain(params, r) * sgn(gamma - r)


def reproduce(params: BiasParameters, r: float) -> float:
    """Force a biased human applies when reproducing ``r``."""
    r = check_force(r, "r")
    return (1.0 + bias(params, r)) * r
