"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``PASS``/``FAIL`` line before asserting.
"""
import math
import time

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammaln

from forcebias.bias_model import BiasParameters, implicit_gain, reproduce, sgn
from forcebias.cli import build_parser, cmd_experiment
from forcebias.dynamics import simulate
from forcebias.experiments import (
    CohortConfig,
    ExperimentAConfig,
    NoisyHumanConfig,
    run_cohort,
    run_reproduction_experiment,
)
from forcebias.fitting import ReproductionTrial, fit_power_law
from forcebias.servo_sim import (
    ControllerParams,
    HumanLoad,
    PlantParams,
    ServoState,
    force_control_step,
    run_force_control,
    run_position_control,
    settling_time,
)
from forcebias.stability import (
    delta_v_closed_form,
    delta_v_direct,
    deterministic_e,
    empirical_gain,
    estimate_unstable_region,
    evaluation_value,
    is_contracting,
)
from forcebias.stats import (
    one_sample_t_less,
    paired_t_one_sided,
    t_cdf,
    welch_from_summary,
    welch_t_one_sided,
)

HAND = BiasParameters(1.006, -0.625)


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}")
        return ok

    return report


def test_criterion_01_lyapunov_identity(verdict):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        p = BiasParameters(rng.uniform(0.5, 2.0), rng.uniform(-1.5, -0.1))
        g = p.gamma
        r = g * math.exp(rng.uniform(math.log(0.1), math.log(10.0)))
        direct = delta_v_direct(g, r, reproduce(p, r))
        closed = delta_v_closed_form(g, r, implicit_gain(p, r), sgn(g - r))
        worst = max(worst, abs(direct - closed) / abs(closed))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 1.0
    verdict(1, ok, f"max relative gap {worst:.2e} over 10^4 triples in {elapsed:.2f} s")
    assert ok


def test_criterion_02_fixed_point_convergence(verdict):
    g = HAND.gamma
    phases = {}
    worst = 0.0
    for mult in (0.1, 0.5, 2.0, 10.0):
        trace = simulate(HAND, mult * g, 40)
        forces = (trace.initial,) + trace.human
        phases[mult] = next((k for k, f in enumerate(forces) if abs(f - g) / g < 0.01), None)
        for a, b in zip(forces, forces[1:]):
            if abs(math.log(a / g)) > 1e-6:
                ratio = abs(math.log(b / g)) / abs(math.log(a / g))
                worst = max(worst, abs(ratio - abs(1 + HAND.beta)))
    ok = all(k is not None and k <= 40 for k in phases.values()) and worst <= 1e-9
    verdict(2, ok, f"phases to 1% {phases}; max contraction deviation {worst:.1e}")
    assert ok


def test_criterion_03_deterministic_stability(verdict):
    start = time.perf_counter()
    total = e_bad = v_bad = 0
    bad_betas = set()
    for beta in np.linspace(-1.95, -0.05, 39):
        for alpha in (0.5, 1.0, 2.0):
            p = BiasParameters(alpha, float(beta))
            g = p.gamma
            for x in np.logspace(-2, 2, 401):
                if x == 1.0:
                    continue
                total += 1
                r = g * float(x)
                if not deterministic_e(p, r) < 0:
                    e_bad += 1
                    bad_betas.add(round(float(beta), 3))
                if not is_contracting(p, r):
                    v_bad += 1
    elapsed = time.perf_counter() - start
    ok = e_bad == 0 and v_bad == 0 and elapsed < 5.0
    span = f"; violations only for beta in [{min(bad_betas)}, {max(bad_betas)}]" if bad_betas else ""
    verdict(3, ok, f"{e_bad}/{total} grid points with E >= 0, {v_bad} without decrease{span} ({elapsed:.2f} s)")
    assert ok


SIG = [-2.0, -1.0, -3.0, -2.0, -2.0]
NONSIG = [1.0, -1.0, 0.5, -0.5]


def _levels(a, b, c, d):
    return {a: SIG, b: NONSIG, c: NONSIG, d: SIG}


def test_criterion_04_unstable_region_fixtures(verdict):
    tol = 1e-12
    hand = estimate_unstable_region(_levels(0.746, 0.800, 1.201, 1.260))
    wrist = estimate_unstable_region(_levels(0.811, 0.887, 1.183, 1.219))
    foot = estimate_unstable_region(_levels(0.721, 0.732, 1.206, 1.246))
    checks = [
        abs(hand.lower - 0.773) <= tol,
        abs(hand.upper - 1.2305) <= tol,
        abs(hand.reported().error_radius - 0.229) <= tol,
        abs(wrist.lower - 0.849) <= tol,
        abs(wrist.upper - 1.201) <= tol,
        abs(wrist.error_radius - 0.176) <= tol,
        abs(foot.reported().lower - 0.727) <= tol,
        abs(foot.upper - 1.226) <= tol,
        abs(foot.reported().error_radius - 0.250) <= tol,
    ]
    ok = all(checks)
    verdict(4, ok, f"hand {hand.lower:.4f}-{hand.upper:.4f} r={hand.reported().error_radius}, "
                   f"wrist {wrist.lower:.3f}-{wrist.upper:.3f} r={wrist.error_radius:.3f}, "
                   f"foot {foot.reported().lower}-{foot.upper:.3f} r={foot.reported().error_radius}")
    assert ok


def test_criterion_05_fit_recovery(verdict):
    start = time.perf_counter()
    exact = [ReproductionTrial(float(r), reproduce(HAND, float(r))) for r in range(1, 11)]
    fit = fit_power_law(exact)
    noiseless_ok = abs(fit.params.alpha - 1.006) <= 1e-8 and abs(fit.params.beta + 0.625) <= 1e-8

    truth = BiasParameters(1.0, -0.6)
    cfg = ExperimentAConfig(repetitions=5)
    hits = 0
    for seed in range(200):
        trials = run_reproduction_experiment(NoisyHumanConfig(truth, 0.2, seed), cfg)
        f = fit_power_law(trials)
        hits += abs(f.params.alpha - 1.0) <= 0.1 and abs(f.params.beta + 0.6) <= 0.15
    elapsed = time.perf_counter() - start
    ok = noiseless_ok and hits >= 190 and elapsed < 10.0
    verdict(5, ok, f"noiseless error {abs(fit.params.alpha - 1.006):.1e}/{abs(fit.params.beta + 0.625):.1e}; "
                   f"noisy recovery {hits}/200 seeds (need 190) in {elapsed:.2f} s")
    assert ok


def _t_density(x, dof):
    logc = gammaln((dof + 1) / 2) - gammaln(dof / 2) - 0.5 * math.log(dof * math.pi)
    return math.exp(logc - (dof + 1) / 2 * math.log1p(x * x / dof))


def test_criterion_06_statistics_oracle(verdict):
    worst = 0.0
    for dof in range(1, 51):
        for t in np.arange(-10.0, 10.0001, 0.25):
            area, _ = integrate.quad(_t_density, 0.0, abs(t), args=(dof,), epsabs=1e-14, epsrel=1e-13)
            oracle = 0.5 + math.copysign(area, t)
            worst = max(worst, abs(t_cdf(float(t), dof) - oracle))
    one = one_sample_t_less([-2, -1, -3, -2, -2])
    paired = paired_t_one_sided([0.9, 0.8, 1.0], [0.2, 0.3, 0.25], "greater")
    foot = welch_from_summary(0.432, 0.099, 6, 0.174, 0.077, 12, "greater")
    equal = welch_t_one_sided([1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 5.0], "less")
    fixtures = [
        abs(one.statistic + 6.3246) < 1e-4 and abs(one.p_value - 0.0016) < 1e-4,
        one_sample_t_less([-1.0, 1.0]).p_value == 0.5,
        paired.p_value < 0.05,
        abs(equal.dof - 6.0) < 1e-12,
        foot.p_value < 0.001,
    ]
    ok = worst <= 1e-10 and all(fixtures)
    verdict(6, ok, f"max |t_cdf - quadrature| {worst:.1e}; directional fixtures {sum(fixtures)}/{len(fixtures)}")
    assert ok


def _positive_e(x, n, rng):
    human = NoisyHumanConfig(BiasParameters.from_equilibrium(1.0, -0.625), 0.2)
    h = reproduce(human.params, x) * np.exp(0.2 * rng.standard_normal(n))
    return np.array([evaluation_value(1.0, x, empirical_gain(x, hi)) > 0 for hi in h], dtype=float)


def test_criterion_07_noise_induced_instability(verdict):
    rng = np.random.default_rng(7)
    near = _positive_e(1.05, 10_000, rng)
    results = {}
    for far in (0.5, 2.0):
        other = _positive_e(far, 10_000, rng)
        results[far] = (other.mean(), welch_t_one_sided(near, other, "greater").p_value)
    ok = all(p < 0.05 for _, p in results.values())
    verdict(7, ok, f"positive-E fraction {near.mean():.3f} at 1.05 vs "
                   + ", ".join(f"{f:.3f} at {x} (p={p:.1e})" for x, (f, p) in results.items()))
    assert ok


def test_criterion_08_steady_state_error_band(verdict):
    res = run_cohort(CohortConfig(n_agents=100, noise_sigma=0.2, seed=0))
    errors = np.array([abs(a.human.params.gamma - t.final) / a.human.params.gamma
                       for a in res.agents for t in a.traces])
    median = float(np.median(errors))
    collapsed = float(np.mean(errors < 1e-3))
    ok = 0.05 <= median <= 0.5 and collapsed < 0.5
    verdict(8, ok, f"median final normalized error {median:.3f} over {errors.size} traces; "
                   f"{collapsed:.1%} below 1e-3")
    assert ok


def test_criterion_09_servo(verdict):
    ctrl = ControllerParams()
    start = time.perf_counter()
    plant = PlantParams.mismatched(ctrl, 0.2, b=0.001)
    step = run_force_control(ctrl, plant, 1.0, 2.0, HumanLoad(stiffness=100.0, damping=1.5))
    ts = settling_time(step.t_res, 1.0, 0.01, ctrl.dt)
    step_time = time.perf_counter() - start

    start = time.perf_counter()
    dist = run_position_control(ctrl, PlantParams(ctrl.J_n, ctrl.K_tn, 0.0, tau_ext=0.5), 0.1)
    k = int(round(5.0 / ctrl.g / ctrl.dt))
    residual = abs(dist.d_true[k - 1] - dist.d_hat[k - 1]) / 0.5
    dist_time = time.perf_counter() - start

    state = ServoState()
    nominal = PlantParams(ctrl.J_n, ctrl.K_tn, 0.0)
    rest = True
    for _ in range(20_000):
        state, i_a, _ = force_control_step(state, ctrl, nominal, 0.0)
        rest &= i_a == 0.0
    rest &= state == ServoState()

    ok = ts <= 2.0 and residual < 0.01 and rest and max(step_time, dist_time) < 30.0
    verdict(9, ok, f"settling {ts:.3f} s, disturbance residual {residual:.2%} at 5/g, "
                   f"rest exact {rest}, runtimes {step_time:.2f}/{dist_time:.2f} s")
    assert ok


def test_criterion_10_determinism(tmp_path, verdict):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        args = build_parser().parse_args(["experiment", "--seed", "42", "--out-dir", str(d)])
        assert cmd_experiment(args) == 0
    names = sorted(p.name for p in dirs[0].iterdir())
    same = names == sorted(p.name for p in dirs[1].iterdir()) and all(
        (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names)
    verdict(10, same, f"{len(names)} output files byte-identical across two runs: {same}")
    assert same
