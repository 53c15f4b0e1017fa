"""Spectra of truncated Schrodinger operators with complex potentials."""

from .airy import (
    AiryZeroTable,
    ModelEigenvalue,
    ai_prime_zero,
    ai_zero,
    airy_ai,
    airy_ai_prime,
    airy_eigenfunction,
    airy_zero_table,
    model_nu,
)
from .asymptotics import (
    AsymptoticBranch,
    branch_1d,
    branch_1d_perturbed,
    branch_cone,
    branch_pt2,
    branch_radial,
    branch_strong_coupling,
    corner_window_expansion,
    first_correction,
    model_nu_kappa,
)
from .eig import EigOptions, Spectrum, SpectrumEntry, eigen_dense, refine, solve_operator, spurious_filter
from .expr import EvalError, ParseError, PotentialExpr, differentiate, evaluate, parse, power, to_string
from .operator import Grid1D, OperatorSpec, RadialData, TridiagComplex, assemble, truncation_family
from .verify import (
    AssumptionReport,
    BranchFit,
    MatchedPoint,
    SweepReport,
    check_U_conditions,
    check_gradient_condition,
    decay_fit,
    graph_norm_constant,
    match_and_fit,
    pt_symmetry_defect,
    resolvent_gap,
    tau_kappa,
    trace_sum,
)

__version__ = "0.1.0"
