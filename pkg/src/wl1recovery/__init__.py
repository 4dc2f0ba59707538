"""Weighted l1 (weighted LASSO) sparse recovery with optimality
certificates and phase-transition experiments."""

__version__ = "0.1.0"

from .ensemble import (EnsembleConfig, ProblemInstance, SparseSignal, sample_instance,
                       seeded_rng, sparsity_rule)
from .linalg import SingularMatrixError, column_submatrix, pseudoinverse_apply, residual_projection, solve_spd
from .oracle import OracleError, OracleResult, brute_force_minimum, enumerate_certificates
from .solver import (SolveResult, SolverConfig, StepSizeError, kkt_residual, objective, soft_threshold,
                     solve_weighted_l1, strict_dual_feasibility)
from .theory import (RecoveryCertificate, ScalingParams, check_recovery_events, eta_of, gap,
                     rescaled_theta, sample_threshold, select_h, x_dagger, xi_of)
