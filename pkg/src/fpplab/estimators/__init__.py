from .ball import NormBallFit, ball_shape, chamfer_ball_vertices, hausdorff_support, support_directions, support_function
from .mu import MuCurve, estimate_mu, subadditivity_checks
from .percolation import DegenerateFit, OneArmCurve, estimate_crossing, estimate_one_arm, fit_exponent
from .renorm import (
    RenormReport,
    check_renormalization,
    comparison_scales,
    covariance_defect,
    estimate_ind,
    greedy_cover_count,
    pair_geometry,
)

__all__ = [
    "MuCurve", "NormBallFit", "OneArmCurve", "RenormReport", "DegenerateFit",
    "ball_shape", "chamfer_ball_vertices", "check_renormalization", "comparison_scales",
    "covariance_defect", "estimate_crossing", "estimate_ind", "estimate_mu",
    "estimate_one_arm", "fit_exponent", "greedy_cover_count", "hausdorff_support",
    "pair_geometry", "subadditivity_checks", "support_directions", "support_function",
]
