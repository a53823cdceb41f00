"""Linearized capillary-gravity water waves with a periodic phase velocity.

The state is ``(F[eta], F[phi])`` for one wave vector ``k``; the coefficient
is the 2x2 Hermitian matrix

    [[g + sigma k^2,   -i c(t).k    ],
     [ i c(t).k,        k tanh(h k) ]]

and the system is ``J u' = z M(t) u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GeneratorError
from ..system import CanonicalSystem, SampledCoefficient, make_system
from .series import FourierSeries


@dataclass(frozen=True)
class WaterWaveParams:
    g: float = 9.81
    sigma: float = 0.0
    h: float = 1.0
    k_vec: tuple = (1.0, 0.0)
    c: FourierSeries = field(default_factory=lambda: FourierSeries((0.0, 0.0), 1.0))

    def __post_init__(self):
        if not (self.g > 0 and self.h > 0):
            raise GeneratorError("g and h must be positive")
        if self.sigma < 0:
            raise GeneratorError("surface tension must be non-negative")
        if np.shape(self.k_vec) != (2,) or not np.hypot(*self.k_vec) > 0:
            raise GeneratorError("k_vec must be a nonzero 2-vector")
        if np.shape(self.c.a0) != (2,):
            raise GeneratorError("phase velocity must be a 2-vector series")

    @property
    def k(self) -> float:
        return float(np.hypot(*self.k_vec))

    @property
    def period(self) -> float:
        return self.c.period


def dispersion_omega(params: WaterWaveParams) -> float:
    """``omega = sqrt((g + sigma k^2) k tanh(h k))``."""
    k = params.k
    return float(np.sqrt((params.g + params.sigma * k**2) * k * np.tanh(params.h * k)))


def waterwave_matrix(params: WaterWaveParams, ts) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    k = params.k
    ck = params.c(ts) @ np.asarray(params.k_vec, dtype=float)
    out = np.zeros((ts.size, 2, 2), dtype=complex)
    out[:, 0, 0] = params.g + params.sigma * k**2
    out[:, 1, 1] = k * np.tanh(params.h * k)
    out[:, 0, 1] = -1j * ck
    out[:, 1, 0] = 1j * ck
    return out


def waterwave_system(params: WaterWaveParams, z: complex = 1.0) -> CanonicalSystem:
    """Periodic canonical system with the Hermitian water-wave coefficient.

    The coefficient is real when ``c`` vanishes identically, in which case the
    system is symplectic for real ``z``.  Positive semidefiniteness is not
    required: a large ``c.k`` makes the matrix indefinite.
    """
    moving = not (params.c.is_constant and np.all(np.asarray(params.c.a0) == 0))

    def sampler(ts):
        M = waterwave_matrix(params, ts)
        return M if moving else M.real

    coef = SampledCoefficient(sampler, 1, period=params.period, vectorized=True, complex_valued=moving)
    return make_system(coef, z, require_psd=False)
