"""Template shape estimation on quotient spaces: asymptotic bias,
bootstrap correction, and desk-scale experiments."""

from .bootstrap import (
    BootstrapConfig,
    BootstrapTrace,
    estimate_mean_curvature_empirical,
    iterative_bootstrap,
    nested_bootstrap,
)
from .clustering import ClusterResult, kmeans_shapes, separation_criterion
from .densities import (
    BiasCurve,
    ExampleSpace,
    asymptotic_estimate,
    bias_curve,
    fit_quadratic_coefficient,
    hypersphere_mean_curvature,
    induced_density_plane,
    induced_density_sphere,
    mean_curvature_analytic,
    singularity_bias,
)
from .errors import (
    ContractViolationError,
    ConvergenceError,
    CutLocusError,
    DegenerateOrbitError,
    DegenerateSignalError,
    DomainError,
    QuadratureError,
    ShapeBiasError,
)
from .estimation import EstimationConfig, EstimationResult, cost, estimate_template
from .generative import (
    plane_template,
    shape_coordinate,
    sphere_template,
    triangle_template,
)
from .groups import (
    AxialAngle,
    GroupElement,
    PlanarAngle,
    Registration,
    RotationMatrix,
    act,
    compose,
    identity,
    inverse,
    orbit_distance,
    register,
)
from .proteins import (
    AtomCloud,
    corrected_rg_squared,
    false_positive_probability,
    false_positive_underestimation,
    radius_of_gyration,
    read_atoms,
    rg_squared_bias,
)
from .scenarios import correction_pipeline, generate_dataset, triangle_pipeline
from .seeding import substream
from .spaces import (
    Euclidean,
    Landmarks,
    ManifoldPoint,
    NoiseModel,
    Sphere,
    TangentVector,
    distance,
    exp,
    frechet_mean,
    log,
    parallel_transport,
    sample_gaussian,
)

__version__ = "0.1.0"
