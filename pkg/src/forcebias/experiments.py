"""Synthetic participants and the reproduction/interaction experiment pipelines.

A synthetic human reproduces ``r`` as ``alpha r**(1+beta) exp(sigma xi)`` with
``xi`` standard normal, i.e. the deterministic bias model times lognormal
noise. Experiment A presents each force level several times in shuffled
order; Experiment B chains robot and human phases from several initial
forces.

Random streams: a human with seed ``s`` draws Experiment A noise from
``default_rng([s, 0])`` and Experiment B noise from ``default_rng([s, 1])``;
the presentation order of Experiment A comes from ``default_rng([shuffle_seed, 2])``.
Cohort member ``i`` of a run seeded with ``seed`` gets
``SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0]`` as its seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bias_model import BiasParameters, check_force, reproduce
from .dynamics import InteractionTrace
from .fitting import FitResult, ReproductionTrial, fit_power_law, normalize_trials
from .stability import (
    EvaluationSample,
    UnstableRegion,
    empirical_gain,
    estimate_unstable_region,
    evaluation_value,
    group_samples,
    level_tests,
    LevelTest,
)
from .stats import TestResult, outlier_flag, paired_t_one_sided

__all__ = [
    "NoisyHumanConfig",
    "ExperimentAConfig",
    "ExperimentBConfig",
    "CohortConfig",
    "AgentResult",
    "GroupTest",
    "CohortResult",
    "GROUP_LABELS",
    "agent_seed",
    "reproduce_noisy",
    "run_reproduction_experiment",
    "run_interaction_experiment",
    "normalized_errors",
    "group_interactions",
    "divergence_rate",
    "divergence_rates_by_range",
    "asymptotic_convergence_rate",
    "evaluation_samples",
    "run_agent",
    "make_cohort",
    "group_paired_tests",
    "run_cohort",
]

GROUP_LABELS = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x")


@dataclass(frozen=True)
class NoisyHumanConfig:
    params: BiasParameters
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class ExperimentAConfig:
    force_levels: tuple[float, ...] = tuple(float(f) for f in range(1, 11))
    repetitions: int = 5
    shuffle_seed: int = 0

    def __post_init__(self):
        for f in self.force_levels:
            check_force(f, "force level")
        if len(set(self.force_levels)) != len(self.force_levels):
            raise ValueError("force levels must be distinct")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass(frozen=True)
class ExperimentBConfig:
    initial_forces: tuple[float, ...] = tuple(float(f) for f in range(1, 11))
    phases: int = 20
    robot_noise_sigma: float = 0.0

    def __post_init__(self):
        for f in self.initial_forces:
            check_force(f, "initial force")
        if len(set(self.initial_forces)) != len(self.initial_forces):
            raise ValueError("initial forces must be distinct")
        if self.phases < 1:
            raise ValueError("phases must be >= 1")
        if not self.robot_noise_sigma >= 0:
            raise ValueError("robot_noise_sigma must be >= 0")


def agent_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def reproduce_noisy(cfg: NoisyHumanConfig, r: float, rng: np.random.Generator) -> float:
    # one draw per call even when sigma == 0 keeps streams aligned across configs
    xi = rng.standard_normal()
    return reproduce(cfg.params, r) * math.exp(cfg.noise_sigma * xi)


def run_reproduction_experiment(human: NoisyHumanConfig, cfg: ExperimentAConfig
                                ) -> list[ReproductionTrial]:
    order = np.repeat(np.asarray(cfg.force_levels, dtype=float), cfg.repetitions)
    np.random.default_rng([cfg.shuffle_seed, 2]).shuffle(order)
    rng = np.random.default_rng([human.seed, 0])
    return [ReproductionTrial(float(r), reproduce_noisy(human, float(r), rng)) for r in order]


def run_interaction_experiment(human: NoisyHumanConfig, cfg: ExperimentBConfig
                               ) -> list[InteractionTrace]:
    rng = np.random.default_rng([human.seed, 1])
    traces = []
    for r0 in cfg.initial_forces:
        robot, reply = [], []
        r = float(r0)
        for _ in range(cfg.phases):
            h = reproduce_noisy(human, r, rng)
            robot.append(r)
            reply.append(h)
            r = h
            if cfg.robot_noise_sigma:
                r = h * math.exp(cfg.robot_noise_sigma * rng.standard_normal())
        traces.append(InteractionTrace(tuple(robot), tuple(reply)))
    return traces


def normalized_errors(trace: InteractionTrace, gamma: float) -> list[tuple[float, float]]:
    """``(|gamma - r_k|/gamma, |gamma - h_{k+1}|/gamma)`` for each phase pair."""
    gamma = check_force(gamma, "gamma")
    return [(abs(gamma - r) / gamma, abs(gamma - h) / gamma) for _, r, h in trace.entries()]


def group_interactions(traces: Sequence[InteractionTrace], gamma: float
                       ) -> list[InteractionTrace]:
    """Order ten interactions as Groups i..x by initial error, largest first.

    Ties are broken by the smaller initial force first.
    """
    if len(traces) != 10:
        raise ValueError(f"grouping needs exactly 10 interactions, got {len(traces)}")
    gamma = check_force(gamma, "gamma")
    return sorted(traces, key=lambda t: (-abs(gamma - t.initial) / gamma, t.initial))


def divergence_rate(n_convergent: int, n_divergent: int) -> float:
    total = n_convergent + n_divergent
    if total < 1:
        raise ValueError("divergence rate of an empty bin")
    return 100.0 * n_divergent / total


def divergence_rates_by_range(samples: Sequence[EvaluationSample], lower: float = 0.5,
                              upper: float = 1.5, width: float = 0.1
                              ) -> list[tuple[float, float, Optional[float]]]:
    """Divergence rate per normalized-force bin; None for empty bins.

    Samples with ``E < 0`` count as convergent, the rest as divergent.
    """
    n_bins = int(round((upper - lower) / width))
    edges = np.linspace(lower, upper, n_bins + 1)
    out = []
    for k in range(n_bins):
        lo, hi = edges[k], edges[k + 1]
        last = k == n_bins - 1
        es = [s.e_value for s in samples
              if lo <= s.normalized_force < hi or (last and s.normalized_force == hi)]
        conv = sum(e < 0 for e in es)
        rate = divergence_rate(conv, len(es) - conv) if es else None
        out.append((float(lo), float(hi), rate))
    return out


def asymptotic_convergence_rate(traces: Sequence[InteractionTrace], gamma: float) -> float:
    """Percent of traces whose final force lies strictly within (0.75, 1.25) gamma."""
    gamma = check_force(gamma, "gamma")
    if not traces:
        raise ValueError("no traces")
    inside = sum(0.75 < t.final / gamma < 1.25 for t in traces)
    return 100.0 * inside / len(traces)


def evaluation_samples(trials: Sequence[ReproductionTrial], gamma: float, source: int = 0
                       ) -> list[EvaluationSample]:
    """Per-trial evaluation values in units of ``gamma``.

    The gain of each trial is estimated as ``|h/r - 1|``.
    """
    out = []
    for i, t in enumerate(trials):
        x = t.stimulus / gamma
        d = empirical_gain(t.stimulus, t.response)
        out.append(EvaluationSample(x, evaluation_value(1.0, x, d), source, i))
    return out


@dataclass(frozen=True)
class AgentResult:
    index: int
    human: NoisyHumanConfig
    trials: list[ReproductionTrial]
    fit: FitResult
    samples: list[EvaluationSample]
    traces: list[InteractionTrace]


def run_agent(index: int, human: NoisyHumanConfig, cfg_a: ExperimentAConfig,
              cfg_b: ExperimentBConfig) -> AgentResult:
    trials = run_reproduction_experiment(human, cfg_a)
    fit = fit_power_law(trials)
    samples = evaluation_samples(trials, fit.gamma, source=index)
    traces = run_interaction_experiment(human, cfg_b)
    return AgentResult(index, human, trials, fit, samples, traces)


@dataclass(frozen=True)
class CohortConfig:
    """A cohort of synthetic participants sharing an exponent.

    Equilibrium points are drawn lognormally with the given mean and SD.
    """

    n_agents: int = 12
    beta: float = -0.625
    beta_sd: float = 0.0
    gamma_mean: float = 2.133
    gamma_sd: float = 0.944
    noise_sigma: float = 0.2
    seed: int = 0
    experiment_a: ExperimentAConfig = field(default_factory=ExperimentAConfig)
    experiment_b: ExperimentBConfig = field(default_factory=ExperimentBConfig)
    significance: float = 0.05
    exclude_outliers: bool = True

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if not self.beta < 0:
            raise ValueError("beta must be negative")
        if self.beta_sd < 0 or self.gamma_sd < 0 or self.noise_sigma < 0:
            raise ValueError("spreads must be non-negative")
        check_force(self.gamma_mean, "gamma_mean")
        if not 0 < self.significance < 1:
            raise ValueError("significance must be in (0, 1)")


def make_cohort(cfg: CohortConfig) -> list[NoisyHumanConfig]:
    # lognormal with the requested mean and SD
    s2 = math.log1p((cfg.gamma_sd / cfg.gamma_mean) ** 2)
    mu = math.log(cfg.gamma_mean) - 0.5 * s2
    humans = []
    for i in range(cfg.n_agents):
        s = agent_seed(cfg.seed, i)
        rng = np.random.default_rng([s, 3])
        gamma = math.exp(mu + math.sqrt(s2) * rng.standard_normal())
        beta = cfg.beta + cfg.beta_sd * rng.standard_normal()
        beta = min(beta, -1e-3)
        humans.append(NoisyHumanConfig(BiasParameters.from_equilibrium(gamma, beta),
                                       cfg.noise_sigma, s))
    return humans


@dataclass(frozen=True)
class GroupTest:
    label: str
    n: int
    mean_initial: float
    mean_final: float
    direction: str
    result: Optional[TestResult]

    def significant(self, level: float = 0.05) -> bool:
        return self.result is not None and self.result.p_value < level


def group_paired_tests(initial: np.ndarray, final: np.ndarray,
                       region: Optional[UnstableRegion]) -> list[GroupTest]:
    """Paired one-sided tests of initial vs final error for each group.

    ``initial`` and ``final`` have shape (n_agents, 10), columns ordered as
    Groups i..x. A group whose mean initial error lies inside the unstable
    error radius is tested for growth, otherwise for decay. Degenerate
    groups (fewer than 2 agents or constant differences) get no result.
    """
    radius = region.error_radius if region is not None else 0.0
    out = []
    for g, label in enumerate(GROUP_LABELS):
        x0, xf = initial[:, g], final[:, g]
        m0 = float(x0.mean())
        direction = "less" if m0 < radius else "greater"
        try:
            res = paired_t_one_sided(x0, xf, direction)
        except ValueError:
            res = None
        out.append(GroupTest(label, int(x0.size), m0, float(xf.mean()), direction, res))
    return out


@dataclass(frozen=True)
class CohortResult:
    config: CohortConfig
    agents: list[AgentResult]
    outliers: set
    pooled_fit: FitResult
    level_tests: list[LevelTest]
    region: Optional[UnstableRegion]
    group_tests: list[GroupTest]
    convergence_rate: float
    divergence_counts: tuple[int, int]
    divergence_by_range: list

    @property
    def kept(self) -> list[AgentResult]:
        return [a for a in self.agents if a.index not in self.outliers]


def run_cohort(cfg: CohortConfig, jobs: int = 1) -> CohortResult:
    """Run both experiments for every agent and the pooled analyses.

    ``jobs > 1`` runs agents in worker processes; results are merged by agent
    index so the outcome does not depend on ``jobs``.
    """
    humans = make_cohort(cfg)
    args = [(i, h, cfg.experiment_a, cfg.experiment_b) for i, h in enumerate(humans)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            agents = list(pool.map(run_agent, *zip(*args)))
    else:
        agents = [run_agent(*a) for a in args]
    agents.sort(key=lambda a: a.index)

    pooled = [t for a in agents for t in normalize_trials(a.trials, a.fit.gamma)]
    pooled_fit = fit_power_law(pooled)
    samples = [s for a in agents for s in a.samples]
    groups = group_samples(samples)
    tests = level_tests(groups, cfg.significance)
    try:
        region = estimate_unstable_region(groups, cfg.significance)
    except ValueError:
        region = None

    final_errors = {a.index: [abs(a.fit.gamma - t.final) / a.fit.gamma for t in a.traces]
                    for a in agents}
    outliers = (outlier_flag(final_errors)
                if cfg.exclude_outliers and len(agents) >= 3 else set())
    kept = [a for a in agents if a.index not in outliers]

    # pooled over traces, each normalized by its own agent's fitted gamma
    finals = [t.final / a.fit.gamma for a in kept for t in a.traces]
    conv_rate = 100.0 * sum(0.75 < f < 1.25 for f in finals) / len(finals)

    if len(cfg.experiment_b.initial_forces) == 10:
        init = np.array([[abs(a.fit.gamma - t.initial) / a.fit.gamma
                          for t in group_interactions(a.traces, a.fit.gamma)] for a in kept])
        fin = np.array([[abs(a.fit.gamma - t.final) / a.fit.gamma
                         for t in group_interactions(a.traces, a.fit.gamma)] for a in kept])
        group_tests = group_paired_tests(init, fin, region)
    else:
        group_tests = []

    in_range = [s for s in samples if 0.5 <= s.normalized_force <= 1.5]
    n_conv = sum(s.e_value < 0 for s in in_range)
    return CohortResult(
        config=cfg,
        agents=agents,
        outliers=outliers,
        pooled_fit=pooled_fit,
        level_tests=tests,
        region=region,
        group_tests=group_tests,
        convergence_rate=conv_rate,
        divergence_counts=(n_conv, len(in_range) - n_conv),
        divergence_by_range=divergence_rates_by_range(samples),
    )
