"""Numerical laboratory for Cotton-York tensors along the Ricci flow.

Frame-calculus oracle, tabulated closed forms, homogeneous flow integration,
L1-density analysis, evolution-equation verification, and the Rosenau product
example.
"""

from .closed_forms import (UnsupportedBranchError, cotton_york_closed,
                           l1_density_closed, ricci_closed, scalar_curvature_closed)
from .evolution import (HypothesisViolatedError, L1Adjudication, ResidualReport,
                        adjudicate_l1_evolution, closed_form_sweep,
                        cotton_evolution_rhs, cotton_york_evolution_rhs,
                        fd_derivative_from_state, fd_time_derivative,
                        norm_sq_evolution_rhs, probe_residuals, verification_report,
                        verify_geometry)
from .flow import (FlowParams, FlowState, FlowTrajectory, StopReason, advance_fixed,
                   asymptote_probe, conserved_quantities, flow_rhs,
                   heisenberg_closed_form, integrate, state_at)
from .frame_calculus import (ConnectionCoefficients, EpsilonTensor, InvariantScalars,
                             connection, cotton, cotton_york, covariant_derivative,
                             divergence, dump_components, epsilon_tensor, frame_data,
                             invariant_scalars, laplacian, ricci, tensor_inner,
                             tensor_norm_sq)
from .geometry import DiagonalMetric, Geometry, StructureTriple, structure_constants
from .norms import (ExtremumKind, ExtremumReport, MultipleExtremaError, NormSeries,
                    Verdict, find_extremum, l1_density_oracle, monotonicity_verdict,
                    norm_series)
from .rosenau import (QuadratureError, RosenauSlice, conformal_factor,
                      coordinate_cy_oracle, cotton_york_23, curvature_fields,
                      l1_closed_form, l1_norm, pole_limit, round_point_ratio,
                      scalar_curvature)

__version__ = "0.1.0"
