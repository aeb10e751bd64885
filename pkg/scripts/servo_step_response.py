"""Force-step and disturbance responses of the simulated servo, written as CSV."""
import argparse
from pathlib import Path

import numpy as np

from forcebias.servo_sim import ControllerParams, HumanLoad, PlantParams, run_force_control, run_position_control, settling_time


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mismatch", type=float, default=0.2)
    ap.add_argument("--torque", type=float, default=1.0)
    ap.add_argument("--stiffness", type=float, default=100.0)
    ap.add_argument("--out", default="servo_step.csv")
    args = ap.parse_args()

    ctrl = ControllerParams()
    plant = PlantParams.mismatched(ctrl, args.mismatch, b=0.001)
    step = run_force_control(ctrl, plant, args.torque, 2.0, HumanLoad(args.stiffness, 1.5))
    ts = settling_time(step.t_res, args.torque, 0.01, ctrl.dt)
    print(f"settling time (1%): {ts:.4f} s")
    print(f"steady estimate {step.window_mean(step.t_res, 0.5):.4f}  contact {step.window_mean(step.contact, 0.5):.4f} N m")

    dist = run_position_control(ctrl, PlantParams(ctrl.J_n, ctrl.K_tn, 0.0, tau_ext=0.5), 0.1)
    resid = np.abs(dist.d_true - dist.d_hat) / 0.5
    k = int(round(5 / ctrl.g / ctrl.dt))
    print(f"disturbance residual at 5/g: {resid[k - 1]:.4%}  peak angle {np.abs(dist.theta).max():.2e} rad")

    data = np.column_stack([step.time, step.t_res, step.contact, step.current, step.theta])
    np.savetxt(Path(args.out), data[::10], delimiter=",", header="t,t_res,contact,current,theta", comments="")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
