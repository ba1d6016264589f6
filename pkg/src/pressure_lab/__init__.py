"""Sub-additive pressure, dimension and spectra for matrix cocycles on subshifts of finite type."""

from .cones import Cone, almost_mult_constant, cone_contraction_check, maps_cone_into
from .config import RunConfig
from .continuity import (
    PerturbationScan,
    dimension_scan,
    discontinuity_demo,
    joint_continuity_scan,
    pressure_scan,
)
from .dimension import affinity_dimension, jsr_estimate, singularity_dimension
from .errors import BudgetExceeded, PressureLabError, ValidationError
from .levels import Budget
from .linalg import singular_values, svf_log
from .pressure import CocycleSpec, PressureEstimate, norm_pressure, pressure_estimate
from .spectrum import equilibrium_scalar, expected_svf_rate, legendre_spectrum, lyapunov_spectrum
from .symbolic import MarkovMeasure, Sft, count_words, enumerate_words

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "BudgetExceeded",
    "CocycleSpec",
    "Cone",
    "MarkovMeasure",
    "PerturbationScan",
    "PressureEstimate",
    "PressureLabError",
    "RunConfig",
    "Sft",
    "ValidationError",
    "affinity_dimension",
    "almost_mult_constant",
    "cone_contraction_check",
    "count_words",
    "dimension_scan",
    "discontinuity_demo",
    "enumerate_words",
    "equilibrium_scalar",
    "expected_svf_rate",
    "joint_continuity_scan",
    "jsr_estimate",
    "legendre_spectrum",
    "lyapunov_spectrum",
    "maps_cone_into",
    "norm_pressure",
    "pressure_estimate",
    "pressure_scan",
    "singular_values",
    "singularity_dimension",
    "svf_log",
]
