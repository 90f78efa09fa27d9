"""Christoffel-Darboux kernels of measures given by Jacobi parameters.

Polynomial recurrences and transfer matrices (:mod:`cdklab.jacobi`),
Stieltjes transforms and weights (:mod:`cdklab.stieltjes`), diagonal
perturbations (:mod:`cdklab.perturbation`), kernel diagnostics
(:mod:`cdklab.kernels`) and the sinc identity check (:mod:`cdklab.identity`).
"""

from .identity import IdentityCheck, contour_form, sinc_identity_check, truncation_radius
from .jacobi import (
    HorizonError,
    JacobiParameters,
    PolyEval,
    RecurrenceOverflow,
    TransferMatrix,
    catalog,
    eval_p,
    eval_pq,
    one_step,
    strip,
    transfer,
)
from .kernels import (
    KernelSample,
    MixedKernel,
    UniversalityReport,
    boundary_weight,
    cd_kernel,
    diag_kernel_trace,
    mixed_symmetrized_kernel,
    perturbed_kernel_expansion,
    point_mass_verdict,
    scaled_kernel,
    second_kind_kernel,
    sine_target,
    transfer_average,
    universality_report,
)
from .perturbation import (
    Diagonal,
    L2PartialSums,
    RandomDiagonal,
    RankOne,
    VarParTrace,
    apply,
    l2_condition_partial,
    power_law,
    variation_of_parameters,
)
from .stieltjes import (
    BoundaryValue,
    Eigenvalue,
    NotStrongLebesguePoint,
    PerturbedEigenvalue,
    UndefinedWeight,
    WeightBundle,
    boundary_F,
    eigenvalue_and_mass,
    rank_one_F,
    second_kind_weight_via_strip,
    stieltjes_dF,
    stieltjes_F,
    weights,
)

__version__ = "0.1.0"
