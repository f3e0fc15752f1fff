"""Ergodic secrecy capacity of fading wiretap channels with full CSI.

Submodules:

``channel``      fading states, fading laws, seeded sample sets
``power``        secrecy-optimal allocation, multiplier search, baselines
``rate``         instantaneous and ergodic secrecy rates, brute-force oracle
``dmc``          discrete memoryless wiretap subchannels
``config``       TOML experiment configuration
``experiments``  sweep / surface / allocation / DMC runners
``cli``          ``wiretap`` command line
"""

__version__ = "0.1.0"

from .channel import (
    ChannelState,
    ExternalSampler,
    FiniteMass,
    RayleighFading,
    RayleighUnit,
    SampleSet,
    draw_sample_set,
    in_transmission_set,
)
from .errors import (
    ConfigError,
    ConvergenceFailure,
    InfeasibleSecrecy,
    InvalidArgument,
    InvalidDistribution,
    InvalidState,
    OracleScopeExceeded,
    PreconditionViolation,
    WiretapError,
)
from .power import (
    Kkt,
    LambdaSolution,
    Tabulated,
    Uniform,
    WaterFilling,
    calibrate_uniform,
    calibrate_water_filling,
    kkt_power,
    policy_power,
    solve_lambda,
)
from .rate import (
    SecrecyRateEstimate,
    brute_force_allocate,
    ergodic_rate,
    instantaneous_rate,
    secrecy_capacity,
)
