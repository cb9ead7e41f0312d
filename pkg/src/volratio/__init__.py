"""Volume ratios between centrally symmetric convex bodies.

Bodies (``bodies``), sampling and volumes (``sampling``), operator norms
(``operators``), random constructions (``constructions``), the max-det
inclusion solver (``solver``) and experiment drivers (``experiments``).
"""

from __future__ import annotations

from .bodies import (
    BallIntersection,
    Body,
    LinearImage,
    LpBall,
    PolarPolytope,
    SchattenBall,
    SymmetricGauge,
    SymmetricGaugeBall,
    VPolytope,
    chord_interval,
    cross_polytope,
    gauge,
    inner_radius,
    outer_radius,
    polar,
    support,
)
from .constructions import (
    bobkov_check,
    dr_parallelepiped,
    gluskin_polytope,
    include_via_operator,
    schatten_sandwich_check,
    tau_u,
    unitary_invariant_ball,
)
from .linalg import LinearMap, RngStream
from .operators import ell_norm, mean_width, operator_norm, sl_normalize
from .sampling import (
    VolumeEstimate,
    isotropic_constant,
    isotropic_normalize,
    log_volume_analytic,
    log_volume_annealed,
    log_volume_rejection,
    santalo_product,
    uniform_samples,
)
from .solver import VrSolveResult, maxdet_inclusion, vr_estimate, vr_grid_oracle

__version__ = "0.1.0"
