"""Two coupled quasi-particles with periodic masses and elastic constants.

State ordering is ``(q1, q2, p1, p2)`` and the coefficient is

    H(t) = [[k1 + k12, -k12,      0,      0     ],
            [-k12,      k2 + k12, 0,      0     ],
            [0,         0,        1/m1,   0     ],
            [0,         0,        0,      1/m2  ]]

With ``k12`` chosen by :func:`deroos_k12`, ``-i/z`` stays an eigenvalue of
``J H(t)`` for all ``t``.  A gauge term ``G0 = -(1/z) V' V^{-1}`` built from
the eigenvectors then makes ``u(t) = exp(i theta t) v(t)`` an exact solution of
``u' = -z (theta J H(t) + G0(t)) u`` with ``v`` the periodic eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import DegeneracyError, GeneratorError, PSDViolationError, SingularConstraintError
from ..integrate import DEFAULT_SCHEME, VectorSolution, integrate_vector, period_grid, uniform_grid
from ..mathcore import standard_J
from ..system import CanonicalSystem, LinearSystem, SampledCoefficient, make_system
from .series import FourierSeries

CONSTRAINT_DENOM_MIN = 1e-8
SINGULAR_DENOM = 1e-12
MIN_EIGEN_GAP = 1e-6


def deroos_k12(k1, k2, m1, m2, z):
    """Coupling that pins ``-i/z`` in the spectrum of ``J H``.

    ``(z^2 k1 k2 - k2 m1 - k1 m2 + m1 m2 / z^2) / (m1 + m2 - z^2 (k1 + k2))``,
    evaluated elementwise.
    """
    k1, k2, m1, m2 = (np.asarray(x) for x in (k1, k2, m1, m2))
    z = complex(z)
    z2 = z.real**2 if z.imag == 0 else z * z
    num = z2 * k1 * k2 - k2 * m1 - k1 * m2 + m1 * m2 / z2
    den = m1 + m2 - z2 * (k1 + k2)
    if np.any(np.abs(den) < SINGULAR_DENOM):
        raise SingularConstraintError("k12 constraint denominator m1 + m2 - z^2 (k1 + k2) vanishes")
    out = num / den
    return out.item() if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class DeRoosParams:
    k1: FourierSeries
    k2: FourierSeries
    m1: FourierSeries
    m2: FourierSeries
    z: complex = 0.9
    theta: float = 8.54
    m_min: float = 1e-6

    def __post_init__(self):
        periods = {s.period for s in (self.k1, self.k2, self.m1, self.m2)}
        if len(periods) != 1:
            raise GeneratorError(f"all coefficient series must share one period, got {sorted(periods)}")

    @property
    def period(self) -> float:
        return self.k1.period

    def coefficients(self, ts):
        return self.k1(ts), self.k2(ts), self.m1(ts), self.m2(ts)

    def validate(self, points: int = 257) -> np.ndarray:
        ts = np.linspace(0.0, self.period, points)
        k1, k2, m1, m2 = self.coefficients(ts)
        for name, m in (("m1", m1), ("m2", m2)):
            if np.min(m) < self.m_min:
                i = int(np.argmin(m))
                raise GeneratorError(f"mass {name} drops to {m[i]:.6g} at t={ts[i]!r}")
        z = complex(self.z)
        z2 = z.real**2 if z.imag == 0 else z * z
        den = np.abs(m1 + m2 - z2 * (k1 + k2))
        if np.min(den) < CONSTRAINT_DENOM_MIN:
            i = int(np.argmin(den))
            raise GeneratorError(f"k12 constraint denominator {den[i]:.3e} at t={ts[i]!r}")
        return ts


def default_deroos_params(z: complex = 0.9, theta: float = 8.54) -> DeRoosParams:
    """Positive-offset single-harmonic family with period 2."""
    p = 2.0
    return DeRoosParams(
        k1=FourierSeries(1.0, p, cos=(0.2,)),
        k2=FourierSeries(1.5, p, sin=(0.2,)),
        m1=FourierSeries(0.5, p, sin=(0.05,)),
        m2=FourierSeries(0.6, p, cos=(0.05,)),
        z=z,
        theta=theta,
    )


def deroos_matrix(params: DeRoosParams, ts, k12_scale: float = 1.0) -> np.ndarray:
    """Stacked ``H(t)``; ``k12_scale`` perturbs the constrained coupling for diagnostics."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    k1, k2, m1, m2 = params.coefficients(ts)
    k12 = k12_scale * np.asarray(deroos_k12(k1, k2, m1, m2, params.z))
    H = np.zeros((ts.size, 4, 4), dtype=np.result_type(k12, float))
    H[:, 0, 0] = k1 + k12
    H[:, 0, 1] = -k12
    H[:, 1, 0] = -k12
    H[:, 1, 1] = k2 + k12
    H[:, 2, 2] = 1.0 / m1
    H[:, 3, 3] = 1.0 / m2
    return H


def deroos_system(params: DeRoosParams) -> CanonicalSystem:
    """The periodic ``N = 2`` canonical system; requires real ``z``."""
    z = complex(params.z)
    if z.imag != 0:
        raise GeneratorError("the de Roos generator needs real z (k12 is complex otherwise)")
    params.validate()
    coef = SampledCoefficient(lambda ts: deroos_matrix(params, ts), 2, period=params.period, vectorized=True)
    try:
        return make_system(coef, z.real)
    except PSDViolationError as exc:
        raise GeneratorError(
            f"de Roos coefficient is indefinite at t={exc.t!r} (min eigenvalue {exc.min_eigenvalue:.6g})"
        ) from exc


# ---------------------------------------------------------------------------
# eigenvector frame and gauge term
# ---------------------------------------------------------------------------


class EigenFrame:
    """Smooth, gauge-fixed eigenvector matrix ``V(t)`` of ``J H(t)``.

    Columns are ordered by the imaginary part of the eigenvalue (the spectrum
    of ``J H`` is purely imaginary for positive definite ``H``), normalized to
    unit length, and each column's phase is fixed by making one reference
    component real and positive.  The reference components are the
    largest-modulus entries at ``t0``.  Being a function of ``H(t)`` alone the
    frame is periodic whenever ``H`` is.
    """

    def __init__(self, params: DeRoosParams, t0: float = 0.0, k12_scale: float = 1.0):
        self.params = params
        self.k12_scale = k12_scale
        self.J = standard_J(2)
        _, V = self._raw(np.array([t0]))
        self.ref = np.argmax(np.abs(V[0]), axis=0)

    def _raw(self, ts):
        JH = self.J @ deroos_matrix(self.params, ts, self.k12_scale)
        lam, V = np.linalg.eig(JH)
        order = np.argsort(lam.imag, axis=1, kind="stable")
        lam = np.take_along_axis(lam, order, axis=1)
        V = np.take_along_axis(V, order[:, None, :], axis=2)
        return lam, V / np.linalg.norm(V, axis=1, keepdims=True)

    def __call__(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        lam, V = self._raw(ts)
        pivot = V[:, self.ref, np.arange(4)]
        if np.min(np.abs(pivot)) < 1e-8:
            i = int(np.argmin(np.min(np.abs(pivot), axis=1)))
            raise DegeneracyError(f"reference eigenvector component vanishes at t={ts[i]!r}", t=float(ts[i]))
        V = V * (np.abs(pivot) / pivot)[:, None, :]
        return lam, V

    def derivative(self, ts, delta: float):
        """Fourth-order central difference of ``V`` with spacing ``delta``."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        _, Vm2 = self(ts - 2 * delta)
        _, Vm1 = self(ts - delta)
        _, Vp1 = self(ts + delta)
        _, Vp2 = self(ts + 2 * delta)
        return (Vm2 - 8 * Vm1 + 8 * Vp1 - Vp2) / (12 * delta)

    def gauge(self, ts, delta: float) -> np.ndarray:
        """``G0(t) = -(1/z) V'(t) V(t)^{-1}``."""
        _, V = self(ts)
        dV = self.derivative(ts, delta)
        return -np.linalg.solve(np.swapaxes(V, 1, 2), np.swapaxes(dV, 1, 2)).swapaxes(1, 2) / complex(self.params.z)


def track_eigenvectors(params: DeRoosParams, grid, k12_scale: float = 1.0):
    """Continuity-based tracking along ``grid``: match each sample to the previous by maximal overlap.

    Returns ``(eigenvalues, vectors)`` with consistent column order; raises
    :class:`DegeneracyError` where two eigenvalues come closer than
    ``MIN_EIGEN_GAP``.
    """
    J = standard_J(2)
    JH = J @ deroos_matrix(params, grid, k12_scale)
    lam, V = np.linalg.eig(JH)
    gaps = np.where(np.eye(4, dtype=bool), np.inf, np.abs(lam[:, :, None] - lam[:, None, :]))
    mins = gaps.min(axis=(1, 2))
    if np.min(mins) < MIN_EIGEN_GAP:
        i = int(np.argmin(mins))
        raise DegeneracyError(f"eigenvalues of JH cross near t={grid[i]!r}", t=float(grid[i]))
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    for k in range(1, len(grid)):
        overlap = np.abs(V[k - 1].conj().T @ V[k])
        _, cols = linear_sum_assignment(-overlap)
        lam[k] = lam[k, cols]
        V[k] = V[k][:, cols]
    return lam, V


@dataclass
class GaugeResult:
    grid: np.ndarray
    G0_samples: np.ndarray
    eigenvalues: np.ndarray
    target: complex
    target_index: int
    eigen_drift: float
    target_residual: float
    tracking_consistent: bool
    structure: dict = field(default_factory=dict)


def deroos_gauge(params: DeRoosParams, grid=None, steps_per_period: int = 1024, k12_scale: float = 1.0) -> GaugeResult:
    """Gauge term ``G0`` on ``grid`` and the drift of the constrained eigenvalue.

    ``eigen_drift`` is ``max_t |lambda_c(t) - lambda_c(t0)|`` for the tracked
    eigenvalue closest to ``-i/z`` at ``t0``.  Structure residuals of ``G0``
    (realness, symmetry, Hamiltonian form) are reported, not enforced.
    """
    if grid is None:
        grid = uniform_grid(0.0, params.period, steps_per_period)
    grid = np.asarray(grid, dtype=float)
    delta = float(grid[1] - grid[0]) if grid.size > 1 else params.period / steps_per_period
    lam, _ = track_eigenvectors(params, grid, k12_scale)
    target = -1j / complex(params.z)
    c = int(np.argmin(np.abs(lam[0] - target)))
    drift = float(np.max(np.abs(lam[:, c] - lam[0, c])))
    target_res = float(np.max(np.abs(lam[:, c] - target)))

    frame = EigenFrame(params, float(grid[0]), k12_scale)
    flam, _ = frame(grid)
    consistent = bool(np.allclose(np.sort_complex(lam), np.sort_complex(flam), atol=1e-10))
    G0 = frame.gauge(grid, delta)
    J = standard_J(2)
    structure = {
        "imag_part": float(np.max(np.abs(G0.imag))),
        "asymmetry": float(np.max(np.abs(G0 - np.swapaxes(G0, 1, 2)))),
        "hamiltonian_defect": float(np.max(np.abs(np.swapaxes(G0, 1, 2) @ J + J @ G0))),
    }
    return GaugeResult(grid, G0, lam, target, c, drift, target_res, consistent, structure)


@dataclass
class PseudoPeriodicResult:
    """Numerical check of ``u(t; theta) = exp(i theta t) v(t)`` with ``v`` p-periodic."""

    u: VectorSolution
    v_samples: np.ndarray
    periodicity_residual: float
    frame_residual: float
    eigen_drift: float


def gauged_system(params: DeRoosParams, frame: EigenFrame, delta: float) -> LinearSystem:
    """``u' = -z (theta J H(t) + G0(t)) u``."""
    J = standard_J(2)
    z = complex(params.z)

    def generator(ts):
        JH = J @ deroos_matrix(params, ts, frame.k12_scale)
        return -z * (params.theta * JH + frame.gauge(ts, delta))

    return LinearSystem(generator, 4, period=params.period, label="deroos-gauged")


def deroos_pseudoperiodic(
    params: DeRoosParams,
    steps_per_period: int = 2048,
    scheme: str = DEFAULT_SCHEME,
    k12_scale: float = 1.0,
) -> PseudoPeriodicResult:
    """Integrate the gauged system over two periods from the constrained eigenvector.

    ``periodicity_residual`` is ``max_{t in [0, p]} |v(t + p) - v(t)|`` for
    ``v(t) = exp(-i theta t) u(t)``; ``frame_residual`` compares ``v`` with the
    eigenvector frame column it should reproduce.
    """
    p = params.period
    delta = p / steps_per_period
    frame = EigenFrame(params, 0.0, k12_scale)
    lam0, V0 = frame(np.array([0.0]))
    target = -1j / complex(params.z)
    c = int(np.argmin(np.abs(lam0[0] - target)))
    system = gauged_system(params, frame, delta)
    grid = period_grid(system, 2, steps_per_period)
    u = integrate_vector(system, V0[0][:, c], grid, scheme)
    v = u.samples * np.exp(-1j * params.theta * grid)[:, None]
    kp = steps_per_period
    per = float(np.max(np.linalg.norm(v[kp:] - v[: kp + 1], axis=1)))
    lam, V = frame(grid)
    frame_res = float(np.max(np.linalg.norm(v - V[:, :, c], axis=1)))
    drift = float(np.max(np.abs(lam[:, c] - lam[0, c])))
    return PseudoPeriodicResult(u, v, per, frame_res, drift)
