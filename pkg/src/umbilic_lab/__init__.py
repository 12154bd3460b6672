"""Numerical laboratory for planar curves, umbilicity and isotropy of immersions."""

__version__ = "0.1.0"

from .catalog import CATALOG, CatalogEntry, custom_entry, get_entry, get_immersion, list_catalog  # noqa: E402
from .errors import (  # noqa: E402
    ConfigInvalid,
    ContainmentViolated,
    DerivativeUnavailable,
    DomainExceeded,
    InsufficientSamples,
    MeanCurvatureVanishes,
    NormalOutsideBundle,
    OutOfSpan,
    RankDeficient,
    StepRejected,
    UmbilicLabError,
)
from .geometry import (  # noqa: E402
    euclidean,
    frame_at,
    frames_along,
    immersion_from_expressions,
    levelset_from_expression,
    sphere_ambient,
)
from .integrators import (  # noqa: E402
    PseudoGeodesicSpec,
    integrate_batch,
    integrate_geodesic,
    integrate_planar_prescribed_kappa,
    integrate_planar_pseudo_geodesic,
)
from .suite import SuiteSettings, convergence_study, theorem_suite  # noqa: E402

__all__ = [
    "__version__",
    "CATALOG",
    "CatalogEntry",
    "ConfigInvalid",
    "ContainmentViolated",
    "DerivativeUnavailable",
    "DomainExceeded",
    "InsufficientSamples",
    "MeanCurvatureVanishes",
    "NormalOutsideBundle",
    "OutOfSpan",
    "PseudoGeodesicSpec",
    "RankDeficient",
    "StepRejected",
    "SuiteSettings",
    "UmbilicLabError",
    "convergence_study",
    "custom_entry",
    "euclidean",
    "frame_at",
    "frames_along",
    "get_entry",
    "get_immersion",
    "immersion_from_expressions",
    "integrate_batch",
    "integrate_geodesic",
    "integrate_planar_prescribed_kappa",
    "integrate_planar_pseudo_geodesic",
    "levelset_from_expression",
    "list_catalog",
    "sphere_ambient",
    "theorem_suite",
]
