"""Joint count-and-placement optimization of stratospheric ranging
platforms (HAPS) augmenting GNSS in urban areas.

The library couples ray-traced LOS/NLOS visibility against a triangle-mesh
city model with a Fisher-information position bound and searches the
bi-objective (platform count, average 3D bound) space with an adaptive
special-crowding-distance genetic algorithm.
"""

from .citymodel import (
    LinkState,
    SpatialIndex,
    TriangleMesh,
    build_index,
    classify_link,
    load_mesh,
    ray_occluded,
)
from .crlb import (
    INFEASIBLE,
    average_crlb,
    crlb_3d,
    design_row,
    evaluate_configuration,
    fim,
)
from .errormodel import (
    ErrorModelSet,
    GaussianModel,
    GmmModel,
    QuadratureSpec,
    build_psi_table,
    fisher_gaussian,
    fisher_gmm,
    link_weight,
)
from .geodesy import (
    ConicalRegion,
    EcefPosition,
    GeodeticPosition,
    contains,
    ecef_to_enu,
    ecef_to_lla,
    elevation_azimuth,
    enu_to_ecef,
    lla_to_ecef,
    project_to_cone,
    sample_in_cone,
)
from .kernels import KERNEL_IMPL
from .optimizer import GaParams, Individual, RunResult, run
from .scenario import (
    Scenario,
    ScenarioConfig,
    ScenarioError,
    filter_satellites,
    generate_synthetic_city,
    load_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ConicalRegion",
    "EcefPosition",
    "ErrorModelSet",
    "GaParams",
    "GaussianModel",
    "GeodeticPosition",
    "GmmModel",
    "INFEASIBLE",
    "Individual",
    "KERNEL_IMPL",
    "LinkState",
    "QuadratureSpec",
    "RunResult",
    "Scenario",
    "ScenarioConfig",
    "ScenarioError",
    "SpatialIndex",
    "TriangleMesh",
    "average_crlb",
    "build_index",
    "build_psi_table",
    "classify_link",
    "contains",
    "crlb_3d",
    "design_row",
    "ecef_to_enu",
    "ecef_to_lla",
    "elevation_azimuth",
    "enu_to_ecef",
    "evaluate_configuration",
    "filter_satellites",
    "fim",
    "fisher_gaussian",
    "fisher_gmm",
    "generate_synthetic_city",
    "link_weight",
    "lla_to_ecef",
    "load_mesh",
    "load_scenario",
    "project_to_cone",
    "ray_occluded",
    "run",
    "sample_in_cone",
]
