"""Fundamental and vector solutions of linear systems, plus a Picard oracle.

Two fixed-step one-step schemes are available:

``"midpoint"``
    implicit midpoint, ``W_{k+1} = (I - h/2 A_m)^{-1} (I + h/2 A_m) W_k``
    with ``A_m = A(t_k + h/2)``.  For ``A = -zJH`` with real ``z`` the step
    map is the Cayley transform of a Hamiltonian matrix, hence symplectic.

``"magnus4"``
    fourth-order Magnus with two Gauss nodes,
    ``W_{k+1} = exp(h/2 (A_1 + A_2) + sqrt(3)/12 h^2 [A_2, A_1]) W_k``.
    The exponent stays in the symplectic Lie algebra, so the step map is
    symplectic as well, and constant coefficients are propagated exactly.

Grid intervals that straddle a coefficient breakpoint are split so that each
substep sees a single constant piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, InvalidInputError, PreconditionError, SingularMatrixError, StepFailureError
from .mathcore import standard_J
from .system import CanonicalSystem, LinearSystem, is_trace_normed

SCHEMES = ("magnus4", "midpoint")
DEFAULT_SCHEME = "magnus4"
DEFAULT_STEPS_PER_PERIOD = 1024

_GAUSS_OFFSET = math.sqrt(3.0) / 6.0
_STEP_COND_LIMIT = 1e12


def uniform_grid(t0: float, t1: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise InvalidInputError("need at least one step")
    grid = np.linspace(t0, t1, int(steps) + 1)
    grid[-1] = t1
    return grid


def period_grid(system: LinearSystem, periods: int = 1, steps_per_period: int = DEFAULT_STEPS_PER_PERIOD, t0: float | None = None) -> np.ndarray:
    """Uniform grid over ``periods`` whole periods starting at ``t0``.

    Grid index ``k * steps_per_period`` lands on ``t0 + k p`` exactly (up to
    the linspace rounding of the endpoint).
    """
    if system.period is None:
        raise PreconditionError("system has no declared period")
    t0 = system.domain[0] if t0 is None else float(t0)
    return uniform_grid(t0, t0 + periods * system.period, periods * steps_per_period)


def _substeps(system: LinearSystem, grid: np.ndarray):
    """Split every grid interval at interior breakpoints.

    Returns ``(starts, widths, owner)`` with ``owner[j]`` the grid interval
    that substep ``j`` belongs to.
    """
    bps = system.breakpoints(grid[0], grid[-1])
    if bps.size == 0:
        return grid[:-1], np.diff(grid), np.arange(grid.size - 1)
    # drop breakpoints that coincide with grid nodes up to rounding
    span = max(1.0, abs(grid[0]), abs(grid[-1]))
    j = np.clip(np.searchsorted(grid, bps), 1, grid.size - 1)
    gap = np.minimum(np.abs(bps - grid[j - 1]), np.abs(grid[j] - bps))
    bps = bps[gap > 1e-12 * span]
    if bps.size == 0:
        return grid[:-1], np.diff(grid), np.arange(grid.size - 1)
    pts = np.unique(np.concatenate([grid, bps]))
    owner = np.searchsorted(grid, pts[:-1], side="right") - 1
    return pts[:-1], np.diff(pts), np.clip(owner, 0, grid.size - 2)


def step_propagators(system: LinearSystem, grid, scheme: str = DEFAULT_SCHEME) -> np.ndarray:
    """One propagator per grid interval: ``P[k]`` maps ``u(t_k)`` to ``u(t_{k+1})``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise InvalidInputError("grid must be strictly increasing with at least two points")
    if scheme not in SCHEMES:
        raise InvalidInputError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    system.check_grid(grid)
    starts, h, owner = _substeps(system, grid)
    d = system.dim
    eye = np.eye(d)
    if scheme == "midpoint":
        A = system.matrices(starts + 0.5 * h)
        lhs = eye - 0.5 * h[:, None, None] * A
        rhs = eye + 0.5 * h[:, None, None] * A
        conds = np.linalg.cond(lhs)
        if not np.all(np.isfinite(conds)) or np.max(conds) > _STEP_COND_LIMIT:
            k = int(np.argmax(np.where(np.isfinite(conds), conds, np.inf)))
            raise StepFailureError(
                f"implicit midpoint step at t={starts[k]!r} is singular (cond {conds[k]:.3e}); use a smaller step"
            )
        steps = np.linalg.solve(lhs, rhs)
    else:
        A1 = system.matrices(starts + (0.5 - _GAUSS_OFFSET) * h)
        A2 = system.matrices(starts + (0.5 + _GAUSS_OFFSET) * h)
        hh = h[:, None, None]
        omega = 0.5 * hh * (A1 + A2) + (math.sqrt(3.0) / 12.0) * hh**2 * (A2 @ A1 - A1 @ A2)
        steps = scipy.linalg.expm(omega)
    if steps.shape[0] == grid.size - 1:
        return steps
    out = np.broadcast_to(eye, (grid.size - 1, d, d)).astype(steps.dtype)
    for j, k in enumerate(owner):
        out[k] = steps[j] @ out[k]
    return out


def _propagate(props: np.ndarray, x0: np.ndarray) -> np.ndarray:
    out = np.empty((props.shape[0] + 1,) + x0.shape, dtype=np.result_type(props, x0))
    out[0] = x0
    for k in range(props.shape[0]):
        out[k + 1] = props[k] @ out[k]
    return out


@dataclass
class VectorSolution:
    grid: np.ndarray
    samples: np.ndarray
    initial_condition: np.ndarray
    system: LinearSystem | None = None
    step: float = 0.0
    scheme: str = DEFAULT_SCHEME

    def integral_identity_residual(self) -> float:
        """Max over the grid of ``|u(t) - u(t0) - int_{t0}^t A(s) u(s) ds|``.

        The integral uses cumulative Simpson on the (uniform) grid, so it is
        meaningful for smooth coefficients only.
        """
        from scipy.integrate import cumulative_simpson

        if self.system is None:
            raise PreconditionError("solution carries no system")
        A = self.system.matrices(self.grid)
        f = np.einsum("tij,tj->ti", A, self.samples)
        # cumulative_simpson drops imaginary parts, so integrate them separately
        integral = cumulative_simpson(f.real, x=self.grid, axis=0, initial=0.0)
        if np.iscomplexobj(f):
            integral = integral + 1j * cumulative_simpson(f.imag, x=self.grid, axis=0, initial=0.0)
        res = self.samples - self.samples[0] - integral
        return float(np.max(np.linalg.norm(res, axis=1)))

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.samples, axis=1)))


@dataclass
class FundamentalSolution:
    """Grid-sampled fundamental matrix ``W(t, z)``; ``samples[0]`` is the initial value."""

    system: LinearSystem
    grid: np.ndarray
    samples: np.ndarray
    initial_condition: np.ndarray
    step: float
    scheme: str = DEFAULT_SCHEME
    _cache: dict = field(default_factory=dict, repr=False)

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.grid - t)))
        span = max(1.0, abs(self.grid[0]), abs(self.grid[-1]))
        if abs(self.grid[k] - t) > 1e-9 * span:
            raise DomainError(f"t={t!r} is not a grid point of the solution")
        return k

    def at(self, t: float) -> np.ndarray:
        return self.samples[self.index_of(t)]

    def determinants(self) -> np.ndarray:
        if "det" not in self._cache:
            self._cache["det"] = np.linalg.det(self.samples)
        return self._cache["det"]

    def det_drift(self) -> float:
        """Max relative deviation of ``det W(t)`` from ``det W(t0)``."""
        det = self.determinants()
        return float(np.max(np.abs(det - det[0])) / abs(det[0]))

    def min_abs_det(self) -> float:
        return float(np.min(np.abs(self.determinants())))

    def symplectic_drift(self) -> float:
        """Max Frobenius norm of ``W^T J W - W0^T J W0`` along the grid."""
        d = self.system.dim
        if d % 2:
            return float("nan")
        J = standard_J(d // 2)
        form = np.swapaxes(self.samples, 1, 2) @ J @ self.samples
        return float(np.max(np.linalg.norm(form - form[0], axis=(1, 2))))

    def column(self, i: int) -> VectorSolution:
        return VectorSolution(
            self.grid,
            self.samples[:, :, i],
            self.initial_condition[:, i],
            self.system,
            self.step,
            self.scheme,
        )

    def apply(self, c) -> VectorSolution:
        c = np.asarray(c)
        return VectorSolution(self.grid, self.samples @ c, self.initial_condition @ c, self.system, self.step, self.scheme)

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.samples, axis=(1, 2), ord=2)))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise InvalidInputError("grid must be a 1-D array with at least two points")
    return grid


def integrate_fundamental(system: LinearSystem, init=None, grid=None, scheme: str = DEFAULT_SCHEME) -> FundamentalSolution:
    """Fundamental matrix along ``grid`` starting from ``init``.

    ``init`` defaults to ``J`` for canonical systems (identity otherwise);
    ``grid`` defaults to one period at 1024 steps.
    """
    if grid is None:
        grid = period_grid(system)
    grid = _check_grid(grid)
    if init is None:
        init = standard_J(system.dim // 2) if isinstance(system, CanonicalSystem) else np.eye(system.dim)
    init = np.asarray(init)
    if init.shape != (system.dim, system.dim):
        raise InvalidInputError(f"initial condition must be {system.dim} x {system.dim}")
    sv = np.linalg.svd(init, compute_uv=False)
    if sv[-1] <= 1e-14 * sv[0]:
        raise SingularMatrixError("initial condition is singular")
    props = step_propagators(system, grid, scheme)
    samples = _propagate(props, init)
    return FundamentalSolution(system, grid, samples, init.copy(), float(np.max(np.diff(grid))), scheme)


def integrate_vector(system: LinearSystem, u0, grid=None, scheme: str = DEFAULT_SCHEME) -> VectorSolution:
    """Vector solution with ``u(t0) = u0`` using the same step maps as the fundamental solver."""
    if grid is None:
        grid = period_grid(system)
    grid = _check_grid(grid)
    u0 = np.asarray(u0)
    if u0.shape != (system.dim,):
        raise InvalidInputError(f"initial vector must have length {system.dim}")
    props = step_propagators(system, grid, scheme)
    samples = _propagate(props, u0)
    return VectorSolution(grid, samples, u0.copy(), system, float(np.max(np.diff(grid))), scheme)


def basis_solutions(system: LinearSystem, grid=None, scheme: str = DEFAULT_SCHEME) -> list[VectorSolution]:
    """The ``2N`` solutions with ``u^i(t0) = e_i`` (columns of ``W`` with ``W(t0) = I``)."""
    W = integrate_fundamental(system, np.eye(system.dim), grid, scheme)
    return [W.column(i) for i in range(system.dim)]


def picard_solve(
    system: CanonicalSystem,
    u0,
    interval,
    max_iter: int = 200,
    nodes: int = 4097,
    tol: float = 1e-12,
) -> tuple[VectorSolution, list[float]]:
    """Fixed-point iteration of ``(Tu)(t) = u(a) - z int_a^t J H(s) u(s) ds``.

    Starts from the constant function ``u0`` on ``nodes`` equispaced points
    and stops once the sup-norm change drops below ``tol``.  The integral is
    the cumulative trapezoid rule, whose positive weights keep the discrete
    operator within the same contraction bound as the continuous one.

    Returns the final iterate and the list of successive contraction ratios
    ``|u^{k+1} - u^k| / |u^k - u^{k-1}|``.
    """
    if not isinstance(system, CanonicalSystem):
        raise PreconditionError("Picard iteration needs a canonical system")
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise PreconditionError(f"empty interval [{a}, {b}]")
    R = max(abs(system.z), np.finfo(float).tiny)
    if (b - a) > 1.0 / (4.0 * R) * (1 + 1e-12):
        raise PreconditionError(
            f"interval length {b - a!r} exceeds 1/(4|z|) = {1.0 / (4.0 * R)!r}; the contraction bound does not apply"
        )
    grid = np.linspace(a, b, int(nodes))
    system.check_grid(grid)
    H = system.coefficient.sample(grid)
    tr = np.real(np.trace(H, axis1=1, axis2=2))
    if np.max(np.abs(tr - 1.0)) > 1e-9:
        raise PreconditionError("system is not trace normed on the interval; apply trace_normalize first")
    u0 = np.asarray(u0, dtype=complex)
    if u0.shape != (system.dim,):
        raise InvalidInputError(f"initial vector must have length {system.dim}")
    A = system.matrices(grid)
    hw = 0.5 * np.diff(grid)[:, None]

    u = np.broadcast_to(u0, (grid.size, u0.size)).copy()
    history: list[float] = []
    prev = None
    for _ in range(int(max_iter)):
        f = np.einsum("tij,tj->ti", A, u)
        new = np.empty_like(u)
        new[0] = u[0]
        new[1:] = u[0] + np.cumsum(hw * (f[:-1] + f[1:]), axis=0)
        change = float(np.max(np.linalg.norm(new - u, axis=1)))
        if prev is not None and prev > 0:
            history.append(change / prev)
        u = new
        prev = change
        if change < tol:
            break
    sol = VectorSolution(grid, u, u0.copy(), system, float(grid[1] - grid[0]), "picard")
    return sol, history
