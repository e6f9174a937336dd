"""Elliptic master solution of the star-triangle relation: weights, checks and limits."""
from .errors import *  # noqa: F401,F403
from .special_fn import (
    EllipticParams,
    SeriesControl,
    elliptic_gamma,
    kappa,
    log_elliptic_gamma,
    log_kappa,
    theta,
)
from .master_weights import (
    QuadratureControl,
    WeightSpec,
    verify_inversion_first,
    verify_inversion_second,
    verify_str_master,
    weight_S,
    weight_W,
)
from .lattice import LatticeGraph, partition_function, star_triangle_move
from .classical import ClassicalParams, LimitParams, lagrangian, solve_q4_threeleg
from .discrete import KMParams, discrete_S, discrete_W, factor_R_discrete, verify_km, verify_str_discrete
from .chiral_potts import CPRapidity, cp_from_angles, cp_to_angles, verify_str_cp

__version__ = "0.1.0"
