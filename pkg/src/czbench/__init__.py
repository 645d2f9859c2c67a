"""Numerical testbench for two-weight testing constants of truncated
fractional singular integral operators on exact discrete measure pairs."""

from .geometry import (
    Decomposition,
    DyadicCube,
    Monomial,
    RootCube,
    SlabRectangle,
    boundary_collections,
    complementary_decomposition,
    decompose_rectangle,
    dyadic_family,
    generation_children,
    monomial_recovery_error,
    unit_root,
)
from .measures import (
    DiscreteMeasure,
    a_infinity_profile,
    boundary_mass_check,
    cube_mass,
    doubling_profile,
    generate_doubling_measure,
    power_weight_measure,
    read_measure,
    uniform_measure,
    write_measure,
)
from .kernels import KernelSpec, TruncationWindow, ellipticity_margin, make_kernel, verify_smoothness
from .operators import OperatorMatrix, adjoint, apply_operator, assemble, operator_norm
from .constants import (
    ConstantReport,
    bict,
    cancellation_constant,
    kappa_testing,
    muckenhoupt_A2,
    one_tailed_A2,
    poisson_integral,
)
from .harness import (
    Scenario,
    VerificationReport,
    explicit_constant,
    run_scenario,
    verify_cancellation,
    verify_factorial_chain_1d,
    verify_full_control,
    verify_t1_equivalence,
    verify_tp_control,
)

__version__ = "0.1.0"
