"""plapd: a numerical laboratory for the p-Laplacian Dirichlet problem
-Delta_p u = f(u) on convex planar domains and balls.

Submodules
----------
geometry      domains, meshes, FE/radial function containers
fem           regularized p-Dirichlet energy minimization (P1 elements)
radial        shooting/BVP oracle for radial solutions on balls
eigen         first eigenpair via nonlinear inverse power iteration
nonlinearity  nonlinearity catalogue and hypothesis classification
identities    Pohozaev / Picone / energy / comparison / Hopf checks
existence     fixed-point operator, homotopy, nonexistence threshold
cli           command-line entry point
"""

from .geometry import (Ball, ConvexPolygon2D, FeFunction, InvalidDomainError,
                       InvalidParameterError, Mesh, RadialProfile, mesh_disc,
                       mesh_polygon, refine)
from .fem import InnerProblem, SolveReport, inner_solve
from .radial import NoSolutionFound, radial_eigen, radial_shoot, radial_solve_bvp
from .eigen import EigenPair, first_eigenpair
from .nonlinearity import Nonlinearity, Verdict, classify, from_spec
from .existence import (BranchPoint, HomotopyConfig, estimate_lambda_max,
                        fixed_point_solve, homotopy_branch, operator_K)

__all__ = [
    "Ball", "ConvexPolygon2D", "FeFunction", "Mesh", "RadialProfile",
    "InvalidDomainError", "InvalidParameterError", "mesh_disc", "mesh_polygon",
    "refine", "InnerProblem", "SolveReport", "inner_solve", "NoSolutionFound",
    "radial_eigen", "radial_shoot", "radial_solve_bvp", "EigenPair",
    "first_eigenpair", "Nonlinearity", "Verdict", "classify", "from_spec",
    "BranchPoint", "HomotopyConfig", "estimate_lambda_max",
    "fixed_point_solve", "homotopy_branch", "operator_K",
]

__version__ = "0.1.0"
