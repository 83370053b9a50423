"""Simulation and verification toolkit for the restricted fourth-order Prandtl
equation ``a_t = -a_yyyy + a^2 - a_y int_0^y a`` on the half-line with clamped
wall conditions."""
from .diagnostics import (CompatibilityResult, EnergyReport, compatibility_check, dissipation_rate,
                          energy_report, functional_E, functional_F, functional_G, reconstruct_2d,
                          riccati_blowup_bound, xt_norm)
from .errors import (CompatibilityViolated, DegenerateF, GridMismatch, InvalidBeta, PicardDiverged,
                     Prandtl4Error, QuadratureNotConverged, StepUnderflow, TailNotNegligible,
                     TimeBelowMinimum)
from .grid import Grid, Profile, bump
from .kernel import (DEFAULT_QUAD, KernelKind, PhiKind, QuadratureSpec, kernel_mass, kernel_matrix,
                     kernel_profile, kernel_row, kernel_row_l1, kernel_tail_mass, kernel_value,
                     phi_eval)
from .semigroup import (KernelOperator, apply, apply_ibp, apply_kernel, build_operator,
                        smoothing_rate_fit, verify_semigroup)
from .solver import EvolutionTrace, SolverConfig, Termination, evolve, residual_check, step

__all__ = [name for name in dir() if not name.startswith("_")]
