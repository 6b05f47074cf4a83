"""Optimal transport between centered Gaussian measures, singular
covariances included: distances, transport maps, geodesics, barycenters,
and discretized Gaussian processes on [0, 1]."""

from .errors import (
    BwtError,
    InvalidInput,
    InvalidParam,
    NoSpdMap,
    NotInvertible,
    NumericalInconsistency,
    PreconditionFailed,
    Unreachable,
)
from .linalg import (
    CovMatrix,
    GreenFactor,
    SpectralDecomp,
    align_green,
    green_factor,
    numeric_rank,
    psd_function,
    spectral_decompose,
    trace_fidelity,
)
from .schur import BlockView, SchurResult, block_decompose, schur_complement, schur_rank_identity
from .transport import (
    INFINITE,
    Infinite,
    SpdReachReport,
    TransportMap,
    canonical_spd_map,
    dual_conjugate,
    is_reachable,
    optimal_coupling,
    ot_map,
    pusz_woronowicz,
    spd_reachability,
    w2_distance,
)
from .geodesic import (
    GeodesicParam,
    GeodesicPath,
    PointClass,
    classify_point,
    green_pair,
    kantorovich_point,
    make_param,
    make_path,
    mccann_interpolant,
    raw_param,
    sample_path,
)
from .barycenter import (
    BarycenterProblem,
    BarycenterResult,
    fixed_point_residual,
    frechet_variance,
    hierarchical_closed_form,
    multicoupling_kernel,
    orthogonal_closed_form,
    ranges_orthogonal,
    solve_bcd,
)
from .gproc import (
    DiscretizedOperator,
    GramCertificate,
    Grid,
    classic_kernels,
    composite_kernel_value,
    cross_gram_certificate,
    ibm_w2_analytic,
    ibm_w2_numeric,
    mercer_composite,
    volterra_green,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
