"""Finite metric measure spaces, metric transforms and their convergence diagnostics."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .boxdist import BoxBracket, ParameterAlignment, box_estimate, box_exact, box_lower_dd, box_oracle_tiny
from .core import (
    EpsMMIsoCert,
    FiniteMMSpace,
    distance_distribution,
    dominates_bruteforce,
    validate_space,
    verify_lipschitz_cert,
    verify_mm_iso_cert,
)
from .errors import *  # noqa: F401,F403
from .models import ModelSpec, sample, sample_gaussian, sample_projective, sample_sphere, two_point
from .mpf import ConditionReport, PiecewiseLinear, builtin, classify_family, family, load_function, validate_mpf
from .probmetrics import WeightedDeviation, ky_fan, prokhorov, prokhorov_line
from .pyramids import PyramidApprox, build_gaussian_pyramid_approx, dist_to_pyramid, weak_convergence_probe
from .transform import transform_family, transform_pyramid, transform_space
