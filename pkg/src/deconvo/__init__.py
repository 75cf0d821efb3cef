"""Blind deconvolution as lifted rank-1 matrix recovery.

Library plus CLI: measurement operator with oracle cross-checks,
descent-cone geometry, Golfing-scheme dual certificates, a constrained
nuclear-norm solver, and a noise-scaling benchmark harness.
"""

from .bench import (ExperimentConfig, SweepRecord, emit_report, error_bound,
                    fit_slope, make_noise, sweep_tau)
from .certify import (Certificate, Partition, build_partition, certify_pipeline,
                      choose_P, exactify, golfing, rip_delta_on_T,
                      rip_delta_on_T_dense, rip_delta_on_Tp, verify_certificate)
from .errors import (DeconvoError, DegenerateSubspaceError,
                     IllConditionedTangentError, InvalidInputError,
                     PartitionFailureError, SolveFailureError)
from .geometry import (DescentDecomposition, TangentSpace, beta_lower_bound,
                       decompose_descent, is_descent_direction,
                       min_conic_singular_estimate, nuclear_norm,
                       nuclear_norm_2x2, project_T, project_Tperp,
                       sample_descent_cone)
from .model import (GroundTruth, MeasurementSet, SubspaceModel, apply_A,
                    apply_A_adjoint, apply_A_rank1, build_model,
                    coherence_mu_h0, coherence_mu_max, convolve_oracle,
                    measure, model_from_json, model_to_json, opnorm_bound)
from .solver import (SolveOptions, SolveReport, power_opnorm, solve_constrained,
                     solve_noiseless, svt)

__version__ = "0.1.0"
