"""Spread-out percolation on Cayley graphs of torsion-free nilpotent groups.

Exact Malcev/BCH lattice arithmetic, ball growth, lattice-count-to-Haar
convergence, Monte Carlo percolation with reproducible counter-based
randomness, box renormalization, and quotient exploration couplings.
"""

from ._kernels import BACKEND as kernel_backend
from .errors import ResourceCap
from .groups import (
    BchTerm,
    DimensionMismatch,
    GroupSpec,
    SpecError,
    builtin_spec,
    bullet,
    dilate,
    graded_lattice_multiply,
    graded_multiply,
    identity,
    inverse,
    k_overlap_constant,
    multiply,
    rescaled_embedding,
    to_exponential,
    to_second_kind,
)
from .balls import (
    BallTable,
    GrowthFit,
    coset_ball_inclusion_check,
    enumerate_ball,
    fit_growth,
    orbit_count_check,
    shell_profile,
)
from .haar import (
    MeasureEstimate,
    Region,
    cc_distance_proxy,
    haar_count,
    haar_ratio,
    jacobian_volume_factor,
    lattice_count_anisotropic,
    measure_scan,
)
from .percolation import (
    ClusterReport,
    Model,
    PercolationSample,
    WindowSpec,
    cluster_stats,
    estimate_lambda_c,
    giant_component_law_check,
    kernel_norm_lower_bound,
    sample_spread_out,
)
from .renorm import (
    RenormConfig,
    RenormReport,
    check_translate_overlaps,
    lss_threshold_check,
    renormalize,
)
from .quotient import (
    CouplingTrace,
    QuotientSpec,
    coset_exploration,
    coupled_quotient_exploration,
    dominance_test,
    quotient_graph,
)

__version__ = "0.1.0"
