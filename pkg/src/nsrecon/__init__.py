"""Pressure-robust finite element solvers for incompressible flow.

Triangular meshes, BR / P2-bubble velocity pairs with discontinuous
pressure, Raviart-Thomas velocity reconstruction, and time-stepping
drivers with conservation and error diagnostics.
"""

from .mesh import (Mesh, build_uniform_square_mesh, refine_uniform,
                   perturb_interior_vertices, shape_regularity,
                   read_mesh, write_mesh)
from .quadrature import quadrature_rule, edge_gauss_rule
from .elements import velocity_basis, pressure_basis, rt_basis
from .spaces import (VelocitySpace, PressureSpace, HdivSpace, build_spaces,
                     dirichlet_dofs, boundary_values)
from .reconstruction import (ReconstructionOperators, build_reconstruction,
                             reconstruct, l2_project_divergence,
                             seminorm_star)
from .forms import CONVECTION_FORMS, FormAssembler, uses_reconstruction
from .solver import (SolverError, NonConvergenceError, solve_saddle,
                     nonlinear_solve)
from .timestepping import Stepper
from .diagnostics import (conserved_quantities, conserved_quantities_field,
                          ErrorNorms, eoc, write_csv, read_csv)
from .problems import (ExactSolution, potential_flow, gresho,
                       lattice_vortex, manufactured, PROBLEMS)
from .benchmarks import (BenchmarkConfig, run_benchmark, run_potential_flow,
                         run_gresho, run_lattice_vortex, compare_forms,
                         format_eoc_table)

__all__ = [
    'Mesh', 'build_uniform_square_mesh', 'refine_uniform',
    'perturb_interior_vertices', 'shape_regularity', 'read_mesh',
    'write_mesh', 'quadrature_rule', 'edge_gauss_rule',
    'velocity_basis', 'pressure_basis', 'rt_basis',
    'VelocitySpace', 'PressureSpace', 'HdivSpace', 'build_spaces',
    'dirichlet_dofs', 'boundary_values',
    'ReconstructionOperators', 'build_reconstruction', 'reconstruct',
    'l2_project_divergence', 'seminorm_star',
    'CONVECTION_FORMS', 'FormAssembler', 'uses_reconstruction',
    'SolverError', 'NonConvergenceError', 'solve_saddle', 'nonlinear_solve',
    'Stepper',
    'conserved_quantities', 'conserved_quantities_field', 'ErrorNorms',
    'eoc', 'write_csv', 'read_csv',
    'ExactSolution', 'potential_flow', 'gresho', 'lattice_vortex',
    'manufactured', 'PROBLEMS',
    'BenchmarkConfig', 'run_benchmark', 'run_potential_flow', 'run_gresho',
    'run_lattice_vortex', 'compare_forms', 'format_eoc_table',
]
