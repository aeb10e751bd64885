"""How often the power-law fit lands within +-0.1 (alpha) / +-0.15 (beta) as noise grows.

Compares the ratio-space least-squares fit with a log-space linear fit, which
is the maximum-likelihood estimator under lognormal noise.
"""
import argparse

import numpy as np

from forcebias.bias_model import BiasParameters
from forcebias.experiments import ExperimentAConfig, NoisyHumanConfig, run_reproduction_experiment
from forcebias.fitting import fit_power_law


def log_fit(trials):
    r = np.array([t.stimulus for t in trials])
    y = np.array([t.ratio for t in trials])
    b, a = np.polyfit(np.log(r), np.log(y), 1)
    return np.exp(a), b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=1000)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0.05, 0.1, 0.15, 0.2])
    args = ap.parse_args()

    truth = BiasParameters(1.0, -0.6)
    cfg = ExperimentAConfig()
    print("sigma  ratio-LS  log-LS  sd(alpha)")
    for sigma in args.sigmas:
        ls = ml = 0
        alphas = []
        for seed in range(args.seeds):
            trials = run_reproduction_experiment(NoisyHumanConfig(truth, sigma, seed), cfg)
            f = fit_power_law(trials).params
            alphas.append(f.alpha)
            ls += abs(f.alpha - 1) <= 0.1 and abs(f.beta + 0.6) <= 0.15
            a, b = log_fit(trials)
            ml += abs(a - 1) <= 0.1 and abs(b + 0.6) <= 0.15
        print(f"{sigma:5.2f}  {ls / args.seeds:8.3f}  {ml / args.seeds:6.3f}  {np.std(alphas):.4f}")


if __name__ == "__main__":
    main()
