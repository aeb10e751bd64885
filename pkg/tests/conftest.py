import math

from hypothesis import strategies as st

from forcebias.bias_model import BiasParameters

# normalized hand-finger parameters
HAND = BiasParameters(1.006, -0.625)


@st.composite
def bias_params(draw, beta_min=-1.9, beta_max=-0.05):
    alpha = draw(st.floats(0.5, 2.0))
    beta = draw(st.floats(beta_min, beta_max))
    return BiasParameters(alpha, beta)


@st.composite
def params_and_force(draw, beta_min=-1.9, beta_max=-0.05, span=100.0):
    """Parameters plus a force log-uniform in (gamma/span, gamma*span)."""
    p = draw(bias_params(beta_min, beta_max))
    x = math.exp(draw(st.floats(-math.log(span), math.log(span))))
    return p, p.gamma * x
