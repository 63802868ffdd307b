"""Square-root-velocity shape analysis of curves on spheres S^n = SO(n+1)/SO(n)."""

from .alignment import (
    AlignmentResult,
    align_pairs,
    alignment_energy,
    distance_mod_both,
    distance_mod_rotation,
    distance_shape,
    dp_reparametrize,
    geodesic_quotient,
)
from .data_io import (
    HurricaneTrack,
    latlon_to_s2,
    parse_hurdat2,
    read_curve,
    read_distance_matrix,
    resample_geodesic,
    track_to_curve,
    write_curve,
    write_distance_matrix,
    write_mds,
)
from .errors import *  # noqa: F401,F403
from .homogeneous import (
    DEFAULT_CONFIG,
    KResult,
    OptimizerConfig,
    curve_of,
    distance_M,
    f_gradient,
    f_value,
    geodesic_M,
    horizontal_lift,
    k_action,
    minimize_over_K,
    project_pi,
    srv_of,
)
from .lie_group import (
    check_in_k,
    conjugate,
    efficient_rotation,
    group_distance,
    group_exp,
    group_log,
    proj_k,
    proj_kperp,
    subalgebra_basis,
)
from .reparam import Reparametrization, act_reparam, cell_average
from .srv import SrvPair, TangentVector, l2_distance, pair_distance, pullback_metric, q_inverse, q_map
from .statistics import (
    Ensemble,
    KarcherResult,
    PcaResult,
    classical_mds,
    distance_matrix,
    karcher_mean,
    principal_geodesic,
    shooting_vector,
    tangent_pca,
)

__version__ = "0.1.0"
