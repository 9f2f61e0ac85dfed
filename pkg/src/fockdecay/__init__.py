"""Tunneling decay of trapped fermionic atom-number states in one dimension.

Computes exact non-escape and survival probabilities and the full counting
statistics of N noninteracting fermions (equivalently, a Tonks-Girardeau
gas) leaking out of a quenched 1D trap, and cross-checks the short-time
(Zeno) and exponential regimes against analytic predictions.
"""

from .absorber import CapParams, cap_values
from .config import ConfigError, RunConfig, load_config
from .lattice import (
    CapacityError,
    Grid,
    Orbital,
    OrbitalSet,
    TridiagonalHamiltonian,
    apply_hamiltonian,
    bound_states,
    discretize,
)
from .observables import (
    NumericsError,
    OverlapMatrix,
    RegionProjector,
    fcs,
    fcs_mean,
    nonescape_prob,
    overlap_matrix_initial,
    overlap_matrix_region,
)
from .potentials import (
    TrapParams,
    depth_from_capacity,
    eval_initial,
    eval_quenched,
    turning_points,
)
from .propagator import DecayRecorder, DecayTimeSeries, Schedule, cn_step, evolve
from .ratefit import FitResult, WindowCollapse, auto_window, fit_exponential
from .semiclassical import RatePrediction, action, period, rates, transmission
from .zeno import (
    Statistics,
    TransitionNotFound,
    ZenoReport,
    derived_timescales,
    fidelity_at_tq,
    parabola_fit,
    transition_time,
    zeno_time,
)

__version__ = "0.1.0"
