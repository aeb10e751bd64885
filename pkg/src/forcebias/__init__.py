"""Force-reproduction bias, discrete-event human-robot force interaction, and its stability."""
from .bias_model import BiasParameters, bias, implicit_equilibrium, implicit_gain, reproduce
from .dynamics import GeneralInteractionParams, InteractionTrace, simulate, step
from .fitting import FitResult, ReproductionTrial, fit_power_law
from .stability import UnstableRegion, estimate_unstable_region, evaluation_value

__version__ = "0.1.0"
