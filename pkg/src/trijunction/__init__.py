"""Stationary perturbations of the triple-junction surface Y x S^1 in R^2 x S^1.

Compute height triples over the three sheets of the junction that make the
perturbed surface stationary (minimal sheets, balanced conormals along the
spine) with prescribed small outer boundary data, via decoupled per-mode
spectral solves driven by a fixed-point iteration, plus independent
finite-difference verification oracles.
"""

from .fields import (AliasingWarning, BoundaryTriple, Grid2D, ScalarField, TripleField,
                     boundary_proxy, diff, laplacian, load_field_csv, norm_proxy,
                     normal_derivative_inner, periodic_proxy, save_field_csv, trace)
from .geometry import (CompatibilityReport, CompatibilityViolation, CutoffProfile,
                       JunctionFrame, SpineCurve, SurfaceMesh, check_c0_compatibility,
                       cutoff_eval, cyclic_pred, cyclic_succ, embed_point, frame_vectors,
                       mesh_surface, spine_from_traces, wall_offset, write_obj)
from .curvature import (DegenerateMetric, MetricShapeData, StructuralCertificate,
                        F_eval, G_eval, conormal_defect, conormal_xi,
                        mean_curvature_scalar, metric_shape_data, structural_certificate)
from .linear import (ContractionEstimates, ModeProblem, boundary_operator, decouple,
                     mode_solve_collocation, mode_solve_dirichlet, mode_solve_mixed,
                     recompose, schauder_probe, solve_dirichlet, solve_linear_system,
                     solve_mixed)
from .picard import (GuardViolation, NoConvergence, SolveOptions, SolveReport,
                     contraction_diagnostics, picard_step, residual_record,
                     solve_nonlinear)
from .oracles import (AngleReport, exact_family, fd_linear_solve, fd_mean_curvature,
                      junction_angle_check)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
