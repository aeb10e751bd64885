"""One-sided t-tests and the leave-one-out outlier rule."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Literal, Mapping, Sequence

import numpy as np
from scipy.special import betainc

__all__ = [
    "TestResult",
    "t_cdf",
    "one_sample_t",
    "one_sample_t_less",
    "paired_t_one_sided",
    "welch_t_one_sided",
    "welch_from_summary",
    "outlier_flag",
]

Direction = Literal["less", "greater"]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: float
    p_value: float
    direction: str

    __test__ = False  # keep pytest from collecting this as a test class

    def significant(self, level: float = 0.05) -> bool:
        return self.p_value < level


def t_cdf(t: float, dof: float) -> float:
    """Student-t CDF via the regularized incomplete beta function."""
    if not dof > 0:
        raise ValueError(f"dof must be positive, got {dof!r}")
    if math.isinf(t):
        return 0.0 if t < 0 else 1.0
    x = dof / (dof + t * t)
    tail = 0.5 * float(betainc(0.5 * dof, 0.5, x))
    return tail if t < 0 else 1.0 - tail


def _p_value(t: float, dof: float, direction: Direction) -> float:
    if direction == "less":
        return t_cdf(t, dof)
    if direction == "greater":
        return t_cdf(-t, dof)
    raise ValueError(f"direction must be 'less' or 'greater', got {direction!r}")


def one_sample_t(samples: Sequence[float], mu0: float = 0.0,
                 direction: Direction = "less") -> TestResult:
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("one-sample t-test needs at least 2 samples")
    s = x.std(ddof=1)
    if s == 0:
        raise ValueError("zero sample variance")
    t = (x.mean() - mu0) / (s / math.sqrt(n))
    dof = n - 1
    return TestResult(float(t), float(dof), _p_value(float(t), dof, direction), direction)


def one_sample_t_less(samples: Sequence[float]) -> TestResult:
    """Test H1: mean < 0 against H0: mean >= 0."""
    return one_sample_t(samples, 0.0, "less")


def paired_t_one_sided(x: Sequence[float], y: Sequence[float],
                       direction: Direction) -> TestResult:
    """One-sample test on ``x - y``; ``greater`` means H1: mean(x) > mean(y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("paired samples must have equal length")
    return one_sample_t(x - y, 0.0, direction)


def welch_from_summary(mean_x: float, sd_x: float, n_x: int,
                       mean_y: float, sd_y: float, n_y: int,
                       direction: Direction) -> TestResult:
    if n_x < 2 or n_y < 2:
        raise ValueError("Welch test needs at least 2 samples per group")
    vx = sd_x**2 / n_x
    vy = sd_y**2 / n_y
    if vx + vy == 0:
        raise ValueError("both groups have zero variance")
    t = (mean_x - mean_y) / math.sqrt(vx + vy)
    # Welch-Satterthwaite
    dof = (vx + vy) ** 2 / (vx**2 / (n_x - 1) + vy**2 / (n_y - 1))
    return TestResult(t, dof, _p_value(t, dof, direction), direction)


def welch_t_one_sided(x: Sequence[float], y: Sequence[float],
                      direction: Direction) -> TestResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return welch_from_summary(x.mean(), x.std(ddof=1) if x.size > 1 else 0.0, x.size,
                              y.mean(), y.std(ddof=1) if y.size > 1 else 0.0, y.size,
                              direction)


def outlier_flag(final_errors_by_participant: Mapping[Hashable, Sequence[float]]
                 | Sequence[Sequence[float]]) -> set:
    """Participants whose mean final error exceeds the others' mean + 10 SD.

    Accepts a mapping ``id -> errors`` or a sequence (ids are indices). The
    comparison excludes the candidate and is strict.
    """
    if isinstance(final_errors_by_participant, Mapping):
        items = list(final_errors_by_participant.items())
    else:
        items = list(enumerate(final_errors_by_participant))
    if len(items) < 3:
        raise ValueError("outlier rule needs at least 3 participants")
    means = np.array([np.mean(v) for _, v in items], dtype=float)
    flagged = set()
    for i, (pid, _) in enumerate(items):
        others = np.delete(means, i)
        threshold = others.mean() + 10.0 * others.std(ddof=1)
        if means[i] > threshold:
            flagged.add(pid)
    return flagged
