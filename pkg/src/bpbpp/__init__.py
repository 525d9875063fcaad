"""Finite-dimensional laboratory for point-property corrections of
norm-attaining functionals, operators, and bilinear maps."""

from .spaces import (BoxBallSumBody, ModulusEstimate, NormedSpace, PolarBody,
                     SpaceError, SupportSet, direct_sum, dual_norm, gauge_space,
                     lp_space, make_space, modulus_convexity,
                     modulus_smoothness, norm, polyhedral_space, scalar_space,
                     smoothness_defect, support_functionals,
                     weighted_lp_space)
from .operators import (AttainmentWitness, Operator, OpNormResult,
                        PointwiseNaDistance, adjoint, attainment_check,
                        dist_to_pointwise_na, make_operator, op_norm)
from .certificates import BpbCertificate, CorrectionRejected
from .corrections import (BetaStructure, EtaEntry, EtaPolicy, beta_perturbation,
                          ck_operator_correction, eta_functional, eta_policy,
                          functional_point_correction, hilbert_domain_correction,
                          hilbert_rotation, largest_xi, lp_rank_one_assembly,
                          rank_one_boost)
from .bilinear import (BilinearMap, BilinearNormResult, FormField,
                       beta_bilinear_correction, bilinear_norm,
                       bilinear_point_correction_xh, ck_bilinear_correction,
                       form_from_operator, make_form, op_from_bilinear,
                       retract_to_ball)
from .probe import (BilinearFailureWitness, EtaEstimate, FailureWitness,
                    counterexample_search, estimate_eta_pair,
                    l1_bilinear_failure_witness, l1_failure_witness,
                    smoothed_square_space, sum_propagation_suite)
from .verify import verify_certificate, verify_witness

__version__ = "0.1.0"
