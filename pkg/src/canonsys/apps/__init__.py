"""Ready-made periodic systems: stability, de Roos masses, water waves, driven graphene."""

from .deroos import (
    DeRoosParams,
    GaugeResult,
    PseudoPeriodicResult,
    default_deroos_params,
    deroos_gauge,
    deroos_k12,
    deroos_matrix,
    deroos_pseudoperiodic,
    deroos_system,
)
from .graphene import (
    GrapheneParams,
    band_scan,
    dirac_point,
    fold_quasienergy,
    graphene_quasienergies,
    graphene_system,
    graphene_Z,
    reciprocal_vectors,
)
from .series import FourierSeries
from .stability import StabilityReport, stability_report
from .waterwave import WaterWaveParams, dispersion_omega, waterwave_matrix, waterwave_system

__all__ = [
    "DeRoosParams",
    "FourierSeries",
    "GaugeResult",
    "GrapheneParams",
    "PseudoPeriodicResult",
    "StabilityReport",
    "WaterWaveParams",
    "band_scan",
    "default_deroos_params",
    "deroos_gauge",
    "deroos_k12",
    "deroos_matrix",
    "deroos_pseudoperiodic",
    "deroos_system",
    "dirac_point",
    "dispersion_omega",
    "fold_quasienergy",
    "graphene_Z",
    "graphene_quasienergies",
    "graphene_system",
    "reciprocal_vectors",
    "stability_report",
    "waterwave_matrix",
    "waterwave_system",
]
