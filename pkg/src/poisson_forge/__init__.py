"""Non-canonical Poisson structures for explicit flows: construction, checks,
critical-point audits and Hamilton-Jacobi reduction."""
from .core import (ContractError, DomainError, ScalarField, TimeDependentVectorField,
                   VectorField, fd_gradient, fd_hessian, lie_bracket, lie_derivative_scalar,
                   symmetry_residual)
from .systems import ParameterSet, SystemDef, make_system, verify_invariants
from .poisson import (PoissonStructure, bracket, from_casimir_3d, from_flow_symmetry,
                      hamilton_residual, jacobi_residual, make_structure, rank_at)
from .ode import IntegratorConfig, Trajectory, integrate
from .elliptic import complete_K, jacobi_sn_cn_dn

__all__ = [
    "ContractError", "DomainError", "ScalarField", "TimeDependentVectorField", "VectorField",
    "fd_gradient", "fd_hessian", "lie_bracket", "lie_derivative_scalar", "symmetry_residual",
    "ParameterSet", "SystemDef", "make_system", "verify_invariants",
    "PoissonStructure", "bracket", "from_casimir_3d", "from_flow_symmetry",
    "hamilton_residual", "jacobi_residual", "make_structure", "rank_at",
    "IntegratorConfig", "Trajectory", "integrate", "complete_K", "jacobi_sn_cn_dn",
]
