"""One-DOF direct-drive servo with disturbance observer.

Plant (semi-implicit Euler at ``dt``)::

    J dw/dt = K_t I_a - b w + tau_load,   tau_load = tau_ext - (tau_push + k theta + c w)

where ``k``, ``c`` model the human limb touching the robot and ``tau_push`` is
the torque the human applies. Control laws, with ``s`` realized by Tustin
pseudo-differentiation ``g_pd s / (s + g_pd)`` of the encoder angle::

    force:     I_a = J_n/K_tn * C_f * (T_cmd - T_res) + I_cmp
    position:  I_a = J_n/K_tn * (K_p (0 - theta) - K_v w_hat) + I_cmp
    DOB:       I_cmp = [g/(s+g)] (K_tn I_a - J_n a_hat) / K_tn
    RFOB:      T_res = [g_r/(s+g_r)] (K_tn I_a - J_n a_hat - b_n w_hat)

``a_hat`` is the twice pseudo-differentiated angle. The observers use the
current applied in the previous sample. All first-order filters share one
Tustin discretization with unit DC gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .bias_model import check_force
from .experiments import NoisyHumanConfig, reproduce_noisy

__all__ = [
    "PlantParams",
    "ControllerParams",
    "HumanLoad",
    "ServoState",
    "ServoRun",
    "DivergenceError",
    "lowpass_step",
    "pseudo_diff_step",
    "force_control_step",
    "position_control_step",
    "run_force_control",
    "run_position_control",
    "settling_time",
    "simulate_phase_pair",
]

DIVERGENCE_ANGLE = 1e3  # rad


class DivergenceError(RuntimeError):
    """The simulated servo state became non-finite or unbounded."""


@dataclass(frozen=True)
class PlantParams:
    J: float = 0.01
    K_t: float = 1.0
    b: float = 0.001
    tau_ext: float = 0.0

    def __post_init__(self):
        if not (self.J > 0 and self.K_t > 0 and self.b >= 0):
            raise ValueError(f"invalid plant parameters: {self}")
        if not math.isfinite(self.tau_ext):
            raise ValueError("tau_ext must be finite")

    @classmethod
    def mismatched(cls, ctrl: "ControllerParams", fraction: float = 0.2, **kw) -> "PlantParams":
        """Plant with inertia ``fraction`` above and torque constant ``fraction``
        below the controller's nominal values."""
        return cls(J=ctrl.J_n * (1 + fraction), K_t=ctrl.K_tn * (1 - fraction), **kw)


@dataclass(frozen=True)
class ControllerParams:
    J_n: float = 0.01
    K_tn: float = 1.0
    C_f: float = 100.0
    K_p: float = 2500.0
    K_v: float = 100.0
    g: float = 500.0
    g_pd: float = 10000.0
    g_r: float = 500.0
    dt: float = 1e-4
    b_n: float = 0.0  # viscous friction modeled inside the reaction observer

    def __post_init__(self):
        for name in ("J_n", "K_tn", "C_f", "K_p", "K_v", "g", "g_pd", "g_r", "dt"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.dt > 1e-3:
            raise ValueError(f"dt must be <= 1 ms, got {self.dt}")
        if self.b_n < 0:
            raise ValueError("b_n must be >= 0")


@dataclass(frozen=True)
class HumanLoad:
    """Limb impedance in contact with the robot plus the torque the human pushes with."""

    stiffness: float = 20.0
    damping: float = 1.5
    push: float = 0.0

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0:
            raise ValueError("load stiffness and damping must be >= 0")


@dataclass(frozen=True)
class ServoState:
    theta: float = 0.0
    omega: float = 0.0
    i_prev: float = 0.0
    # pseudo-differentiator chain: angle -> velocity -> acceleration
    theta_prev: float = 0.0
    w_hat: float = 0.0
    a_hat: float = 0.0
    # observer filter inputs/outputs of the previous sample
    dob_in: float = 0.0
    dob_out: float = 0.0
    rfob_in: float = 0.0
    rfob_out: float = 0.0

    @property
    def i_cmp(self) -> float:
        return self.dob_out

    def check(self) -> "ServoState":
        if not (math.isfinite(self.theta) and math.isfinite(self.omega)
                and abs(self.theta) < DIVERGENCE_ANGLE):
            raise DivergenceError(f"servo state diverged: theta={self.theta}, omega={self.omega}")
        return self


def lowpass_step(x: float, x_prev: float, y_prev: float, cutoff: float, dt: float) -> float:
    """Tustin discretization of ``cutoff / (s + cutoff)``."""
    a = 0.5 * cutoff * dt
    return ((1 - a) * y_prev + a * (x + x_prev)) / (1 + a)


def pseudo_diff_step(x: float, x_prev: float, y_prev: float, cutoff: float, dt: float) -> float:
    """Tustin discretization of ``cutoff s / (s + cutoff)``."""
    a = 0.5 * cutoff * dt
    return ((1 - a) * y_prev + cutoff * (x - x_prev)) / (1 + a)


def _observe(state: ServoState, ctrl: ControllerParams):
    w_hat = pseudo_diff_step(state.theta, state.theta_prev, state.w_hat, ctrl.g_pd, ctrl.dt)
    a_hat = pseudo_diff_step(w_hat, state.w_hat, state.a_hat, ctrl.g_pd, ctrl.dt)
    drive = ctrl.K_tn * state.i_prev - ctrl.J_n * a_hat
    dob_in = drive / ctrl.K_tn
    dob_out = lowpass_step(dob_in, state.dob_in, state.dob_out, ctrl.g, ctrl.dt)
    rfob_in = drive - ctrl.b_n * w_hat
    rfob_out = lowpass_step(rfob_in, state.rfob_in, state.rfob_out, ctrl.g_r, ctrl.dt)
    return w_hat, a_hat, (dob_in, dob_out), (rfob_in, rfob_out)


def _advance(state: ServoState, ctrl: ControllerParams, plant: PlantParams, load: HumanLoad,
             i_a: float, w_hat: float, a_hat: float, dob, rfob) -> ServoState:
    tau_load = plant.tau_ext - (load.push + load.stiffness * state.theta
                                + load.damping * state.omega)
    acc = (plant.K_t * i_a - plant.b * state.omega + tau_load) / plant.J
    omega = state.omega + ctrl.dt * acc
    theta = state.theta + ctrl.dt * omega
    return ServoState(theta, omega, i_a, state.theta, w_hat, a_hat,
                      dob[0], dob[1], rfob[0], rfob[1]).check()


def force_control_step(state: ServoState, ctrl: ControllerParams, plant: PlantParams,
                       torque_cmd: float, load: HumanLoad = HumanLoad()
                       ) -> tuple[ServoState, float, float]:
    """Advance one sample under force control; returns ``(state', I_a, T_res)``."""
    state.check()
    w_hat, a_hat, dob, rfob = _observe(state, ctrl)
    t_res = rfob[1]
    i_a = ctrl.J_n / ctrl.K_tn * ctrl.C_f * (torque_cmd - t_res) + dob[1]
    return _advance(state, ctrl, plant, load, i_a, w_hat, a_hat, dob, rfob), i_a, t_res


def position_control_step(state: ServoState, ctrl: ControllerParams, plant: PlantParams,
                          load: HumanLoad = HumanLoad()) -> tuple[ServoState, float]:
    """Advance one sample under zero-command position control; returns ``(state', I_a)``."""
    state.check()
    w_hat, a_hat, dob, rfob = _observe(state, ctrl)
    i_a = ctrl.J_n / ctrl.K_tn * (ctrl.K_p * (0.0 - state.theta) - ctrl.K_v * w_hat) + dob[1]
    return _advance(state, ctrl, plant, load, i_a, w_hat, a_hat, dob, rfob), i_a


@dataclass
class ServoRun:
    """Sampled signals of one simulated phase."""

    dt: float
    theta: np.ndarray
    current: np.ndarray
    t_res: np.ndarray  # reaction-torque estimate
    contact: np.ndarray  # true torque the human feels (k theta + c omega + push)
    d_hat: np.ndarray  # DOB estimate as torque
    d_true: np.ndarray  # K_tn I_a - J_n * true acceleration
    state: ServoState = field(default_factory=ServoState)

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.theta.size) * self.dt

    def window_mean(self, signal: np.ndarray, seconds: float) -> float:
        n = max(1, int(round(seconds / self.dt)))
        return float(np.mean(signal[-n:]))


def _run(ctrl: ControllerParams, plant: PlantParams, seconds: float,
         law: Callable[[ServoState, float], tuple[ServoState, float, HumanLoad]],
         state: Optional[ServoState] = None) -> ServoRun:
    if not seconds > 0:
        raise ValueError("run length must be positive")
    n = int(round(seconds / ctrl.dt))
    if n < 1:
        raise ValueError("run shorter than one sample")
    state = state or ServoState()
    out = {k: np.empty(n) for k in ("theta", "current", "t_res", "contact", "d_hat", "d_true")}
    for i in range(n):
        t = i * ctrl.dt
        new, i_a, load = law(state, t)
        acc = (new.omega - state.omega) / ctrl.dt
        out["theta"][i] = new.theta
        out["current"][i] = i_a
        out["t_res"][i] = new.rfob_out
        out["contact"][i] = load.push + load.stiffness * state.theta + load.damping * state.omega
        out["d_hat"][i] = ctrl.K_tn * new.dob_out
        out["d_true"][i] = ctrl.K_tn * i_a - ctrl.J_n * acc
        state = new
    return ServoRun(ctrl.dt, state=state, **out)


def run_force_control(ctrl: ControllerParams, plant: PlantParams, torque_cmd: float,
                      seconds: float, load: HumanLoad = HumanLoad(),
                      state: Optional[ServoState] = None) -> ServoRun:
    def law(s, t):
        new, i_a, _ = force_control_step(s, ctrl, plant, torque_cmd, load)
        return new, i_a, load

    return _run(ctrl, plant, seconds, law, state)


def run_position_control(ctrl: ControllerParams, plant: PlantParams, seconds: float,
                         load: HumanLoad = HumanLoad(stiffness=0.0, damping=0.0),
                         push: Optional[Callable[[float], float]] = None,
                         state: Optional[ServoState] = None) -> ServoRun:
    """Zero-command position control; ``push(t)`` overrides ``load.push`` over time."""
    def law(s, t):
        ld = load if push is None else replace(load, push=push(t))
        new, i_a = position_control_step(s, ctrl, plant, ld)
        return new, i_a, ld

    return _run(ctrl, plant, seconds, law, state)


def settling_time(signal: np.ndarray, target: float, tol: float, dt: float) -> float:
    """Time after which ``signal`` stays within ``tol`` (relative) of ``target``.

    Returns ``inf`` if the final sample is still outside the band.
    """
    band = tol * abs(target) if target != 0 else tol
    outside = np.flatnonzero(np.abs(signal - target) > band)
    if outside.size == 0:
        return 0.0
    if outside[-1] == signal.size - 1:
        return math.inf
    return (outside[-1] + 1) * dt


def simulate_phase_pair(ctrl: ControllerParams, plant: PlantParams, human: NoisyHumanConfig,
                        r_cmd: float, phase_seconds: float = 2.0,
                        steady_window_seconds: float = 1.0, lever_arm: float = 0.1,
                        load: HumanLoad = HumanLoad(), rise_time: float = 0.1,
                        rng: Optional[np.random.Generator] = None,
                        ) -> tuple[float, float]:
    """Robot phase then human phase; returns measured ``(r, h)`` in newtons.

    The robot presses with ``r_cmd`` under force control; the human feels the
    windowed true contact force and reproduces it (with bias and noise),
    ramping up with time constant ``rise_time`` against the position-held
    robot. Both forces are read from the reaction-torque estimate averaged
    over the last ``steady_window_seconds``.
    """
    r_cmd = check_force(r_cmd, "r_cmd")
    if not phase_seconds >= steady_window_seconds > 0:
        raise ValueError("need phase_seconds >= steady_window_seconds > 0")
    if not lever_arm > 0:
        raise ValueError("lever_arm must be positive")
    rng = rng if rng is not None else np.random.default_rng(human.seed)

    robot = run_force_control(ctrl, plant, r_cmd * lever_arm, phase_seconds, load)
    r_measured = robot.window_mean(robot.t_res, steady_window_seconds) / lever_arm
    felt = robot.window_mean(robot.contact, steady_window_seconds) / lever_arm

    h_target = reproduce_noisy(human, check_force(felt, "felt force"), rng)
    tau_h = h_target * lever_arm
    push = lambda t: tau_h * (1.0 - math.exp(-t / rise_time)) if rise_time > 0 else tau_h
    held = run_position_control(ctrl, plant, phase_seconds, load, push)
    h_measured = held.window_mean(held.t_res, steady_window_seconds) / lever_arm
    return r_measured, h_measured
