"""k-contact phase-space toolkit: canonical field-equation k-vector fields,
gauge-kernel analysis, Hamilton-Jacobi residual checks, flow-composition
integration, and built-in verified example systems."""

from .errors import (
    ConfigError,
    ContractError,
    DivergenceError,
    DomainError,
    IntegrabilityError,
    KContactError,
    NoSolutionError,
    RegularityError,
    ShapeError,
    SolverError,
)
from .geometry import (
    ChartSpec,
    Covector,
    DarbouxPoint,
    KTangent,
    Tangent,
    chi,
    chi_matrix,
    eval_eta,
    kernel_deficiency,
    reeb_fields,
)
from .fields import (
    Gradient,
    ScalarField,
    check_regularity,
    fd_grad,
    grad,
    invert_fibre_derivative,
    p_hessian,
)
from .grids import BaseField, BaseMap, GridSpec, SolutionMap, grid_derivative
from .hdw import (
    GaugeElement,
    KVectorField,
    ResidualGrid,
    add_gauge,
    canonical_kvf,
    evolution_lift,
    gauge_basis,
    kvf_residual,
    map_residual,
    random_gauge,
    second_order_residual,
)
from .sections import (
    SectionZDep,
    SectionZInd,
    check_holonomic,
    check_isotropic_slices,
    check_max_coisotropic,
    from_potentials,
)
from .hj import (
    CompleteSolutionFamily,
    GaugeMatrix,
    HJReport,
    diagonal_gauge_matrix,
    gamma_beta,
    hj_classical_zind,
    hj_evolution_zind,
    hj_zdep_residual,
    project_Q,
    project_zdep,
    solve_diagonal_C,
    verify_complete,
)
from .integrate import (
    EndToEndReport,
    commutator_defect,
    end_to_end,
    integral_section,
    lift,
)
from . import corpus, dual

__version__ = "0.1.0"
