"""Lyapunov analysis of the biased interaction and unstable-region estimation.

With the error ``e_k = gamma - r_k`` and ``V = e**2``, one phase pair changes
``V`` by

    dV = (gamma - h_{k+1})**2 - (gamma - r_k)**2
       = -2 delta |gamma - r| r + delta**2 sgn(gamma - r)**2 r**2
       = r * E,

where ``E = (r delta - 2 |gamma - r|) delta`` is the evaluation value. Since
``r > 0``, ``E < 0`` certifies a strict one-step decrease of the squared error.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .bias_model import BiasParameters, check_force, implicit_equilibrium, implicit_gain, reproduce, sgn
from .stats import one_sample_t_less

__all__ = [
    "EvaluationSample",
    "UnstableRegion",
    "LevelTest",
    "evaluation_value",
    "empirical_gain",
    "delta_v_closed_form",
    "delta_v_direct",
    "lyapunov_chain_check",
    "group_samples",
    "level_tests",
    "estimate_unstable_region",
]


@dataclass(frozen=True)
class EvaluationSample:
    normalized_force: float
    e_value: float
    source: int = 0
    trial: int = 0

    def __post_init__(self):
        check_force(self.normalized_force, "normalized_force")


@dataclass(frozen=True)
class LevelTest:
    level: float
    n: int
    mean: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class UnstableRegion:
    """Band ``lower < r/gamma < upper`` where stability is not established."""

    lower: float
    upper: float
    error_radius: float

    def __post_init__(self):
        if not 0 < self.lower < 1 < self.upper:
            raise ValueError(f"region must satisfy 0 < lower < 1 < upper, got {self}")

    @classmethod
    def from_bounds(cls, lower: float, upper: float) -> "UnstableRegion":
        return cls(lower, upper, 0.5 * (abs(1 - lower) + abs(1 - upper)))

    def contains(self, normalized_force: float) -> bool:
        return self.lower < normalized_force < self.upper

    def reported(self, decimals: int = 3) -> "UnstableRegion":
        """Region as it would be printed to ``decimals`` places.

        Boundaries are rounded half-up first and the radius is computed from
        the rounded boundaries, then rounded itself.
        """
        lower = _round_half_up(self.lower, decimals)
        upper = _round_half_up(self.upper, decimals)
        radius = _round_half_up(0.5 * (abs(1 - lower) + abs(1 - upper)), decimals)
        return UnstableRegion(lower, upper, radius)


def _round_half_up(x: float, decimals: int) -> float:
    # strip binary noise (1.2305 is stored as 1.23049999...) before rounding
    d = Decimal(repr(round(x, 12)))
    return float(d.quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_UP))


def evaluation_value(gamma: float, r: float, delta: float) -> float:
    gamma = check_force(gamma, "gamma")
    r = check_force(r, "r")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    return (r * delta - 2.0 * abs(gamma - r)) * delta


def empirical_gain(r: float, h: float) -> float:
    """Per-trial implicit gain ``|h/r - 1|``."""
    r = check_force(r, "r")
    h = check_force(h, "h")
    return abs(h / r - 1.0)


def delta_v_closed_form(gamma: float, r: float, delta: float, sign_e: int) -> float:
    return -2.0 * delta * abs(gamma - r) * r + delta**2 * sign_e**2 * r**2


def delta_v_direct(gamma: float, r_k: float, h_next: float) -> float:
    return (gamma - h_next) ** 2 - (gamma - r_k) ** 2


def lyapunov_chain_check(params: BiasParameters, r: float, rtol: float = 1e-9) -> bool:
    """Compare the direct and closed forms of the Lyapunov difference at ``r``."""
    r = check_force(r, "r")
    gamma = implicit_equilibrium(params)
    direct = delta_v_direct(gamma, r, reproduce(params, r))
    closed = delta_v_closed_form(gamma, r, implicit_gain(params, r), sgn(gamma - r))
    # direct form cancels two squares; h and gamma carry a few ulps each
    ulp = 8 * sys.float_info.epsilon * gamma
    slack = ulp * (abs(gamma - r) + ulp)
    return abs(direct - closed) <= rtol * max(abs(closed), (gamma - r) ** 2) + slack


LevelInput = Union[Mapping[float, Sequence[float]], Iterable[tuple]]


def group_samples(samples: Iterable[EvaluationSample]) -> list[tuple[float, list[float]]]:
    """Group E values per (source, normalized force), sorted by force."""
    groups: dict[tuple[int, float], list[float]] = {}
    for s in samples:
        groups.setdefault((s.source, s.normalized_force), []).append(s.e_value)
    return sorted(((lvl, vals) for (_, lvl), vals in groups.items()),
                  key=lambda kv: kv[0])


def level_tests(levels: LevelInput, significance: float = 0.05) -> list[LevelTest]:
    """One-sided one-sample test (H1: mean E < 0) for each force level.

    A level whose E values are all identical cannot be tested; it counts as
    significant when its common value is negative (p reported as 0) and
    non-significant otherwise (p = 1).
    """
    items = levels.items() if isinstance(levels, Mapping) else levels
    out = []
    for level, values in items:
        vals = np.asarray(values, dtype=float)
        if vals.size < 2:
            raise ValueError(f"level {level} needs at least 2 samples, has {vals.size}")
        if np.all(vals == vals[0]):
            p = 0.0 if vals[0] < 0 else 1.0
        else:
            p = one_sample_t_less(vals).p_value
        out.append(LevelTest(float(level), int(vals.size), float(vals.mean()), p, p < significance))
    out.sort(key=lambda t: t.level)
    return out


def _boundary(side: list[LevelTest]) -> Optional[float]:
    # side is ordered from the outside toward 1
    for outer, inner in zip(side, side[1:]):
        if outer.significant and not inner.significant:
            return 0.5 * (outer.level + inner.level)
    return None


def estimate_unstable_region(levels: LevelInput, significance: float = 0.05
                             ) -> Optional[UnstableRegion]:
    """Estimate the unstable band around ``r/gamma = 1``.

    On each side of 1, levels are scanned from the outside inward; the
    boundary is the mean of the first significant level and the adjacent
    non-significant level closer to 1. Returns None unless both sides have
    such a transition. Levels exactly at 1 are ignored.
    """
    tests = level_tests(levels, significance)
    below = [t for t in tests if t.level < 1]
    above = [t for t in tests if t.level > 1]
    if len(below) < 2 or len(above) < 2:
        raise ValueError("need at least 2 force levels on each side of 1")
    lower = _boundary(below)
    upper = _boundary(above[::-1])
    if lower is None or upper is None:
        return None
    return UnstableRegion.from_bounds(lower, upper)


def deterministic_e(params: BiasParameters, r: float) -> float:
    """Evaluation value of the noise-free model at ``r``."""
    gamma = implicit_equilibrium(params)
    return evaluation_value(gamma, r, implicit_gain(params, r))


def is_contracting(params: BiasParameters, r: float) -> bool:
    """True if one deterministic step strictly reduces ``(gamma - r)**2``."""
    gamma = implicit_equilibrium(params)
    return (gamma - reproduce(params, r)) ** 2 < (gamma - r) ** 2


__all__ += ["deterministic_e", "is_contracting"]
