"""Non-uniqueness witnesses: K_p functions, canonical products, cardinal families."""

from .family import (FamilyConstants, FreeInterpolationSolver, InterpolantFamily,
                     ResidualState, build_interpolant_family, contraction_factor,
                     solve_free_interpolation, tail_sum, weighted_norm)
from .kp import KpFunction, build_kp, build_kp_direct, default_s, genus_for, threshold_b
from .levin import (LevinProduct, build_levin_product, ideal_ray_moduli, ideal_zero_sets,
                    indicator_profile, truncation_stability, verify_levin_bounds)
from .witness import (WitnessConfig, WitnessReport, choose_L, construct_nonuniqueness_witness,
                      prepare_pipeline, witness_residuals)

__all__ = [
    "FamilyConstants", "FreeInterpolationSolver", "InterpolantFamily", "ResidualState",
    "build_interpolant_family", "contraction_factor", "solve_free_interpolation", "tail_sum",
    "weighted_norm", "KpFunction", "build_kp", "build_kp_direct", "default_s", "genus_for",
    "threshold_b", "LevinProduct", "build_levin_product", "ideal_ray_moduli", "ideal_zero_sets",
    "indicator_profile", "truncation_stability", "verify_levin_bounds", "WitnessConfig",
    "WitnessReport", "choose_L", "construct_nonuniqueness_witness", "prepare_pipeline",
    "witness_residuals",
]
