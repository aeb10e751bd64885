"""Discrete-event human-robot force interaction.

The robot replays the human's last force exactly (``r_k = h_k``) and the
human reproduces it with bias, ``h_{k+1} = (1 + U(r_k)) r_k``. In log space
this is the linear contraction ``ln(r_{k+1}/gamma) = (1 + beta) ln(r_k/gamma)``.

The general interaction scales both halves by voluntary gains,
``h_{k+1} = H r_k + u(r_k)`` and ``r_{k+1} = R h_{k+1}``, where the implicit
input ``u(r) = U(r) r = K(r) (gamma - r)`` acts as a variable-gain feedback
controller toward ``gamma``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .bias_model import (
    BiasParameters,
    bias,
    check_force,
    implicit_equilibrium,
    implicit_gain,
    reproduce,
)

__all__ = [
    "InteractionTrace",
    "GeneralInteractionParams",
    "step",
    "simulate",
    "variable_gain",
    "implicit_input",
    "general_step",
    "transition_bound",
    "exact_error_step",
]


@dataclass(frozen=True)
class InteractionTrace:
    """Alternating robot/human forces of one interaction.

    ``robot[k]`` is ``r_k`` and ``human[k]`` is the reply ``h_{k+1}``, so a
    trace of ``n`` phase pairs holds ``r_0 .. r_{n-1}`` and ``h_1 .. h_n``.
    """

    robot: tuple[float, ...]
    human: tuple[float, ...]

    def __post_init__(self):
        if len(self.robot) != len(self.human):
            raise ValueError("robot and human sequences must have equal length")
        if not self.robot:
            raise ValueError("trace must hold at least one phase pair")
        for f in self.robot + self.human:
            check_force(f)

    def __len__(self) -> int:
        return len(self.robot)

    @property
    def initial(self) -> float:
        return self.robot[0]

    @property
    def final(self) -> float:
        """Final human force ``h_n`` (``h_20`` for a 20-pair interaction)."""
        return self.human[-1]

    def entries(self) -> Iterator[tuple[int, float, float]]:
        """Yield ``(k, r_k, h_{k+1})``."""
        for k, (r, h) in enumerate(zip(self.robot, self.human)):
            yield k, r, h


@dataclass(frozen=True)
class GeneralInteractionParams:
    H: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        if not (self.H > 0 and self.R > 0):
            raise ValueError(f"voluntary gains must be positive, got H={self.H}, R={self.R}")


def step(params: BiasParameters, r_k: float, biased: bool = True) -> float:
    """One robot-human phase pair of the marginally stable interaction.

    With ``biased=False`` the human reproduces exactly and the map is the
    identity.
    """
    r_k = check_force(r_k, "r_k")
    if not biased:
        return r_k
    return reproduce(params, r_k)


def simulate(
    params: BiasParameters, r_0: float, n_phases: int, biased: bool = True
) -> InteractionTrace:
    r_0 = check_force(r_0, "r_0")
    if n_phases < 1:
        raise ValueError("n_phases must be >= 1")
    robot, human = [], []
    r = r_0
    for _ in range(n_phases):
        h = step(params, r, biased=biased)
        robot.append(r)
        human.append(h)
        r = h
    return InteractionTrace(tuple(robot), tuple(human))


def variable_gain(params: BiasParameters, r: float) -> float:
    """Gain ``K(r) = delta(r) r / |gamma - r|`` of the implicit feedback.

    At ``r = gamma`` the removable singularity is filled with its limit
    ``|beta|``. ``K`` stays within [0, 1] for ``-1 <= beta < 0``.
    """
    r = check_force(r, "r")
    gamma = implicit_equilibrium(params)
    if r == gamma:
        return abs(params.beta)
    return implicit_gain(params, r) * r / abs(gamma - r)


def implicit_input(params: BiasParameters, r: float) -> float:
    r = check_force(r, "r")
    u = bias(params, r) * r
    gamma = implicit_equilibrium(params)
    if r != gamma:
        fb = variable_gain(params, r) * (gamma - r)
        assert abs(u - fb) <= 1e-12 * max(1.0, abs(u)), (u, fb)
    return u


def general_step(
    g: GeneralInteractionParams, params: BiasParameters, r_k: float
) -> tuple[float, float]:
    """Return ``(h_{k+1}, r_{k+1})`` of the general interaction.

    Raises ValueError when the human force leaves the positive domain.
    """
    r_k = check_force(r_k, "r_k")
    h_next = g.H * r_k + implicit_input(params, r_k)
    if not (h_next > 0 and math.isfinite(h_next)):
        raise ValueError(f"general interaction left the positive force domain: h={h_next!r}")
    return h_next, g.R * h_next


def transition_bound(g: GeneralInteractionParams, K: float) -> float:
    """Magnitude ``|R (H - K)|`` of the error transition for gain ``K``."""
    if not 0.0 <= K <= 1.0:
        raise ValueError(f"K must lie in [0, 1], got {K!r}")
    mag = abs(g.R * (g.H - K))
    bound = g.R * g.H if K <= g.H else g.R
    assert mag <= bound * (1 + 1e-15), (mag, bound)
    return mag


def exact_error_step(
    g: GeneralInteractionParams, params: BiasParameters, e_k: float
) -> float:
    """Next error ``gamma - r_{k+1}`` of the general interaction.

    ``e_{k+1} = gamma (1 - R H) + R (H - K) e_k``; the constant term vanishes
    only when ``R H == 1``.
    """
    gamma = implicit_equilibrium(params)
    r_k = check_force(gamma - e_k, "r_k")
    K = variable_gain(params, r_k)
    return gamma * (1.0 - g.R * g.H) + g.R * (g.H - K) * e_k
