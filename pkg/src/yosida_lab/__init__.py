"""Numerical Yosida distances, exponential dichotomies and delay equations.

Finite-dimensional and discretized stand-ins for generators of linear
semigroups, with tools to measure how far two generators are apart in the
Yosida sense and whether hyperbolicity survives the perturbation.
"""

from .delay import (
    DelaySystem,
    DiscretizedGenerator,
    assemble_generator,
    char_roots_rd,
    dichotomy_of_delay_system,
    generator_yosida_distance,
    resolvent_via_F_J,
    splicing_residual,
)
from .dichotomy import (
    DichotomyReport,
    check_hyperbolic,
    persistence_margin,
    verify_persistence,
)
from .errors import *  # noqa: F401,F403
from .harness import SweepSpec, demo_domain_noninclusion, regression_suite, run_sweep
from .linops import (
    OperatorMatrix,
    fractional_power,
    matrix_exp,
    resolvent,
    semigroup_bound,
    spectrum,
)
from .models import (
    PerturbationConfig,
    ReactionDiffusionConfig,
    build_perturbed,
    build_unperturbed,
    check_functional_perturbation,
    check_relative_boundedness,
)
from .yosida import (
    MuGrid,
    class_P_constant,
    semigroup_difference_bound,
    verify_bounded_perturbation_bound,
    verify_class_P_bound,
    yosida_approx,
    yosida_distance,
)

__version__ = "0.1.0"
