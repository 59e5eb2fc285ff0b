"""Symplectic ball packings in cotangent disc bundles and the lengths they induce."""

from .capacities import (
    bidisc_cyl_upper,
    bidisc_gromov_lower,
    euclidean_volume,
    packing_audit,
    sphere_packing_example,
)
from .certify import CertificateStore, EmbeddingCertificate, certify
from .distance_engine import (
    ConvergenceTable,
    InadmissiblePartitionError,
    NeighborhoodSpec,
    RhoBound,
    chain_metric_DW,
    converge_length,
    equivalence_constants,
    length_rho,
    rho_lower,
    rho_upper,
)
from .manifolds import (
    ChartMetric,
    FlatTorus,
    ManifoldModel,
    ModelError,
    RoundSphere,
    SurfaceOfRevolution,
    load_model,
)
from .riemannian import (
    constant_A,
    cometric_norm,
    curve_length,
    d_exp,
    distance,
    exp_map,
    geodesic_integrate,
    injectivity_radius,
    metric_at,
)
from .symplectic import (
    SymplecticMapSpec,
    bidisc_embedding,
    bidisc_profile,
    fiber_frame_embedding,
    local_ball_embedding,
    radial_extension,
)

__version__ = "0.1.0"
