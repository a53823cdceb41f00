"""Canonical systems ``J u' = z H(t) u`` and their coefficient representations.

Four coefficient kinds are supported: constant, piecewise constant on a mesh,
truncated Fourier series, and black-box samplers.  Every kind evaluates a
single time (``coef(t)``) or a batch (``coef.sample(ts)``, shape ``(m, d, d)``).

General first-order linear systems ``u' = A(t) u`` are represented by
:class:`LinearSystem`; :class:`CanonicalSystem` is the special case
``A(t) = -z J H(t)``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateCoefficientError,
    DomainError,
    InvalidDimensionError,
    InvalidInputError,
    PreconditionError,
    PSDViolationError,
    StructureError,
)
from .mathcore import standard_J

VALIDATION_POINTS = 257
VALIDATION_TOL = 1e-9
QUADRATURE_CELLS = 2048


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------


class HamiltonianCoefficient:
    """Base class of the time-dependent coefficient ``H(t)``.

    Subclasses implement :meth:`sample`.  ``period`` is ``None`` for
    aperiodic coefficients and ``domain`` is ``None`` when the coefficient is
    defined on the whole real line.
    """

    kind: str = "abstract"

    def __init__(self, n: int, period: float | None = None, domain=None):
        if int(n) != n or n < 1:
            raise InvalidDimensionError(f"N must be a positive integer, got {n!r}")
        if period is not None and not period > 0:
            raise InvalidInputError(f"period must be positive, got {period!r}")
        self.n = int(n)
        self.period = None if period is None else float(period)
        self.domain = None if domain is None else (float(domain[0]), float(domain[1]))

    @property
    def dim(self) -> int:
        return 2 * self.n

    def __call__(self, t: float) -> np.ndarray:
        return self.sample(np.array([t], dtype=float))[0]

    def sample(self, ts) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        """Discontinuity locations strictly inside ``(a, b)``."""
        return np.empty(0)

    def trace(self, ts) -> np.ndarray:
        return np.real(np.trace(self.sample(ts), axis1=1, axis2=2))

    @property
    def is_real(self) -> bool:
        return True

    def _check_domain(self, ts: np.ndarray) -> None:
        if self.domain is None or self.period is not None:
            return
        lo, hi = self.domain
        span = max(1.0, abs(lo), abs(hi))
        bad = (ts < lo - 1e-12 * span) | (ts > hi + 1e-12 * span)
        if np.any(bad):
            t = float(ts[np.argmax(bad)])
            raise DomainError(f"t={t!r} outside coefficient domain [{lo}, {hi}]")


def _symmetric_matrix(M, n: int, what: str) -> np.ndarray:
    M = np.asarray(M)
    if M.shape != (2 * n, 2 * n):
        raise InvalidDimensionError(f"{what} must have shape {(2 * n, 2 * n)}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{what} has non-finite entries")
    return M


class ConstantCoefficient(HamiltonianCoefficient):
    kind = "constant"

    def __init__(self, matrix, period: float | None = None):
        M = np.asarray(matrix)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise InvalidDimensionError(f"coefficient must be 2N x 2N, got shape {M.shape}")
        super().__init__(M.shape[0] // 2, period)
        self.matrix = _symmetric_matrix(M, self.n, "matrix").copy()
        self.matrix.setflags(write=False)

    def sample(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.broadcast_to(self.matrix, (ts.size,) + self.matrix.shape).copy()

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)


class PiecewiseConstantCoefficient(HamiltonianCoefficient):
    """``H(t) = H_i`` on ``[b_i, b_{i+1})``; the last cell is closed.

    With ``periodic=True`` the mesh spans exactly one period and evaluation
    wraps modulo ``b_m - b_0``.
    """

    kind = "piecewise"

    def __init__(self, breakpoints: Sequence[float], matrices, periodic: bool = False):
        b = np.asarray(breakpoints, dtype=float)
        mats = np.asarray(matrices)
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
            raise InvalidInputError("breakpoints must be strictly increasing with at least 2 entries")
        if mats.ndim != 3 or mats.shape[0] != b.size - 1:
            raise InvalidDimensionError("need exactly one matrix per mesh cell")
        d = mats.shape[1]
        if mats.shape[2] != d or d % 2:
            raise InvalidDimensionError(f"cell matrices must be 2N x 2N, got {mats.shape[1:]}")
        period = float(b[-1] - b[0]) if periodic else None
        super().__init__(d // 2, period, domain=(b[0], b[-1]))
        if not np.all(np.isfinite(mats)):
            raise InvalidInputError("cell matrices have non-finite entries")
        self.mesh = b
        self.matrices = mats.copy()
        self.mesh.setflags(write=False)
        self.matrices.setflags(write=False)

    def _wrap(self, ts: np.ndarray) -> np.ndarray:
        if self.period is None:
            return ts
        b0 = self.mesh[0]
        w = b0 + np.mod(ts - b0, self.period)
        # mod rounding can push t + p just left of a mesh node; snap it back
        tol = 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(ts))
        j = np.clip(np.searchsorted(self.mesh, w), 1, self.mesh.size - 1)
        near = np.where(w - self.mesh[j - 1] < self.mesh[j] - w, self.mesh[j - 1], self.mesh[j])
        w = np.where(np.abs(w - near) <= tol, near, w)
        return np.where(w >= self.mesh[-1], b0, w)

    def cell_index(self, ts) -> np.ndarray:
        ts = self._wrap(np.atleast_1d(np.asarray(ts, dtype=float)))
        idx = np.searchsorted(self.mesh, ts, side="right") - 1
        return np.clip(idx, 0, self.matrices.shape[0] - 1)

    def sample(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        self._check_domain(ts)
        return self.matrices[self.cell_index(ts)]

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        inner = self.mesh[1:-1]
        if self.period is None:
            pts = inner
        else:
            # replicate the interior mesh and the period boundary over [a, b]
            local = np.concatenate([inner, [self.mesh[-1]]])
            k0 = math.floor((a - self.mesh[0]) / self.period) - 1
            k1 = math.ceil((b - self.mesh[0]) / self.period) + 1
            pts = np.concatenate([local + k * self.period for k in range(k0, k1 + 1)])
        return np.unique(pts[(pts > a) & (pts < b)])

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrices)


class FourierCoefficient(HamiltonianCoefficient):
    """Truncated Fourier series with period ``p``.

    ``H(t) = H0 + sum_k [C_k cos(2 pi k t / p) + S_k sin(2 pi k t / p)]``
    for ``k = 1..M``.  Missing cosine or sine terms are zero.
    """

    kind = "fourier"

    def __init__(self, constant, period: float, cos_terms=(), sin_terms=()):
        H0 = np.asarray(constant)
        if H0.ndim != 2 or H0.shape[0] != H0.shape[1] or H0.shape[0] % 2:
            raise InvalidDimensionError(f"constant term must be 2N x 2N, got {H0.shape}")
        super().__init__(H0.shape[0] // 2, period)
        d = H0.shape[0]
        m = max(len(cos_terms), len(sin_terms))
        dtype = np.result_type(H0, *[np.asarray(c) for c in cos_terms], *[np.asarray(s) for s in sin_terms], float)
        C = np.zeros((m, d, d), dtype=dtype)
        S = np.zeros((m, d, d), dtype=dtype)
        for k, c in enumerate(cos_terms):
            C[k] = _symmetric_matrix(c, self.n, f"cos term {k + 1}")
        for k, s in enumerate(sin_terms):
            S[k] = _symmetric_matrix(s, self.n, f"sin term {k + 1}")
        self.constant = _symmetric_matrix(H0, self.n, "constant term").astype(dtype)
        self.cos_terms = C
        self.sin_terms = S

    @property
    def harmonics(self) -> int:
        return self.cos_terms.shape[0]

    def sample(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.broadcast_to(self.constant, (ts.size,) + self.constant.shape).copy()
        if self.harmonics:
            k = np.arange(1, self.harmonics + 1)
            phase = 2 * np.pi * np.outer(ts, k) / self.period
            out = out + np.einsum("tk,kij->tij", np.cos(phase), self.cos_terms)
            out = out + np.einsum("tk,kij->tij", np.sin(phase), self.sin_terms)
        return out

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.constant)


class SampledCoefficient(HamiltonianCoefficient):
    """Black-box coefficient ``func(t) -> 2N x 2N array``.

    The function is called with unwrapped times; a declared period is
    verified, not enforced.  Samplers that are not reentrant are serialized
    behind a lock.
    """

    kind = "sampler"

    def __init__(
        self,
        func: Callable[[float], np.ndarray],
        n: int,
        period: float | None = None,
        domain=None,
        *,
        vectorized: bool = False,
        reentrant: bool = True,
        breakpoints: Callable[[float, float], np.ndarray] | None = None,
        complex_valued: bool = False,
    ):
        super().__init__(n, period, domain)
        self.func = func
        self.vectorized = vectorized
        self.reentrant = reentrant
        self._lock = None if reentrant else threading.Lock()
        self._breakpoints = breakpoints
        self._complex = complex_valued

    def _eval(self, ts: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.func(ts))
        return np.array([np.asarray(self.func(float(t))) for t in ts])

    def sample(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        self._check_domain(ts)
        if self._lock is None:
            out = self._eval(ts)
        else:
            with self._lock:
                out = self._eval(ts)
        if out.shape != (ts.size, self.dim, self.dim):
            raise InvalidDimensionError(
                f"sampler returned shape {out.shape}, expected {(ts.size, self.dim, self.dim)}"
            )
        return out

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        if self._breakpoints is None:
            return np.empty(0)
        pts = np.asarray(self._breakpoints(a, b), dtype=float)
        return np.unique(pts[(pts > a) & (pts < b)])

    @property
    def is_real(self) -> bool:
        return not self._complex


def sample_H(coefficient: HamiltonianCoefficient, t: float) -> np.ndarray:
    """Evaluate ``H(t)``; periodic mesh kinds wrap, aperiodic ones check the domain."""
    return coefficient(t)


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


class LinearSystem:
    """First-order linear system ``u' = A(t) u``.

    ``generator`` maps an array of times to the stacked matrices ``A(t)``
    (shape ``(m, d, d)``).  Canonical systems and the complex Hermitian
    application systems all reduce to this form for integration and Floquet
    analysis.
    """

    def __init__(
        self,
        generator: Callable[[np.ndarray], np.ndarray],
        dim: int,
        period: float | None = None,
        domain=(0.0, math.inf),
        breakpoints: Callable[[float, float], np.ndarray] | None = None,
        label: str = "",
    ):
        if int(dim) != dim or dim < 1:
            raise InvalidDimensionError(f"dimension must be positive, got {dim!r}")
        if period is not None and not period > 0:
            raise InvalidInputError(f"period must be positive, got {period!r}")
        t0, t1 = float(domain[0]), float(domain[1])
        if not t0 < t1:
            raise InvalidInputError(f"degenerate domain [{t0}, {t1}]")
        self._generator = generator
        self.dim = int(dim)
        self.period = None if period is None else float(period)
        self.domain = (t0, t1)
        self._breakpoints = breakpoints
        self.label = label

    def matrices(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.asarray(self._generator(ts))

    def matrix(self, t: float) -> np.ndarray:
        return self.matrices(np.array([t]))[0]

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        if self._breakpoints is None:
            return np.empty(0)
        return np.asarray(self._breakpoints(a, b), dtype=float)

    @property
    def structured(self) -> bool:
        """True when the flow is symplectic (real canonical system)."""
        return False

    def check_grid(self, grid: np.ndarray) -> None:
        t0, t1 = self.domain
        span = max(1.0, abs(t0), abs(grid[-1]))
        if grid[0] < t0 - 1e-12 * span or grid[-1] > t1 + 1e-12 * span:
            raise DomainError(f"grid [{grid[0]}, {grid[-1]}] outside domain [{t0}, {t1}]")


class CanonicalSystem(LinearSystem):
    """``J u' = z H(t) u`` on ``domain``; integrated as ``u' = -z J H(t) u``."""

    def __init__(self, coefficient: HamiltonianCoefficient, z: complex, domain=None):
        if domain is None:
            if coefficient.period is not None:
                domain = (0.0, math.inf)
            elif coefficient.domain is not None:
                domain = coefficient.domain
            else:
                raise InvalidInputError("aperiodic coefficient needs an explicit domain")
        self.coefficient = coefficient
        self.z = complex(z)
        self.J = standard_J(coefficient.n)
        super().__init__(
            self._generate,
            coefficient.dim,
            period=coefficient.period,
            domain=domain,
            breakpoints=coefficient.breakpoints,
        )

    def _generate(self, ts: np.ndarray) -> np.ndarray:
        H = self.coefficient.sample(ts)
        z = self.z.real if self.z.imag == 0 else self.z
        return -z * np.einsum("ij,tjk->tik", self.J, H)

    @property
    def n(self) -> int:
        return self.coefficient.n

    @property
    def structured(self) -> bool:
        return self.z.imag == 0 and self.coefficient.is_real

    def __repr__(self) -> str:
        return (
            f"CanonicalSystem(N={self.n}, kind={self.coefficient.kind}, z={self.z}, "
            f"period={self.period}, domain={self.domain})"
        )


def validation_grid(coefficient: HamiltonianCoefficient, domain, points: int = VALIDATION_POINTS) -> np.ndarray:
    """Sample times used for structural validation.

    One period (or the finite domain) at ``points`` samples plus the mesh
    breakpoints and points just left of them.
    """
    t0 = float(domain[0])
    if coefficient.period is not None:
        t1 = t0 + coefficient.period
    else:
        t1 = float(domain[1])
        if not math.isfinite(t1):
            raise InvalidInputError("cannot validate an aperiodic coefficient on an infinite domain")
    grid = np.linspace(t0, t1, points)
    bps = coefficient.breakpoints(t0, t1)
    if bps.size:
        left = bps - 1e-9 * max(1.0, t1 - t0)
        grid = np.unique(np.concatenate([grid, bps, left[left > t0]]))
    return grid


def validate_coefficient(
    coefficient: HamiltonianCoefficient,
    domain,
    *,
    require_psd: bool = True,
    tol: float = VALIDATION_TOL,
    points: int = VALIDATION_POINTS,
) -> np.ndarray:
    """Check symmetry, positive semidefiniteness, periodicity and non-vanishing.

    Returns the validation grid.  Symmetry means ``H = H^T`` for real
    coefficients and ``H = H^*`` for complex ones.
    """
    grid = validation_grid(coefficient, domain, points)
    H = coefficient.sample(grid)
    adj = np.conj(np.swapaxes(H, 1, 2))
    asym = np.max(np.abs(H - adj), axis=(1, 2))
    k = int(np.argmax(asym))
    if asym[k] > tol:
        raise StructureError(
            f"H(t) is not symmetric at t={grid[k]!r} (residual {asym[k]:.3e})",
            t=float(grid[k]),
            residual=float(asym[k]),
        )
    if require_psd:
        mins = np.linalg.eigvalsh(0.5 * (H + adj))[:, 0]
        k = int(np.argmin(mins))
        if mins[k] < -tol:
            raise PSDViolationError(
                f"H(t) is indefinite at t={grid[k]!r} (min eigenvalue {mins[k]:.6g})",
                t=float(grid[k]),
                min_eigenvalue=float(mins[k]),
            )
    if coefficient.period is not None:
        Hp = coefficient.sample(grid + coefficient.period)
        drift = np.max(np.abs(Hp - H), axis=(1, 2))
        k = int(np.argmax(drift))
        if drift[k] > tol:
            raise StructureError(
                f"H(t + p) != H(t) at t={grid[k]!r} (residual {drift[k]:.3e})",
                t=float(grid[k]),
                residual=float(drift[k]),
            )
    # heuristic: two adjacent vanishing samples suggest an open interval with H = 0
    vanishing = np.max(np.abs(H), axis=(1, 2)) <= tol
    both = vanishing[:-1] & vanishing[1:]
    if np.any(both):
        k = int(np.argmax(both))
        raise DegenerateCoefficientError(f"H vanishes on [{grid[k]!r}, {grid[k + 1]!r}]")
    return grid


def make_system(
    coefficient: HamiltonianCoefficient,
    z: complex,
    domain=None,
    *,
    require_psd: bool = True,
    tol: float = VALIDATION_TOL,
    points: int = VALIDATION_POINTS,
) -> CanonicalSystem:
    """Build and validate a canonical system.

    Raises :class:`StructureError` for asymmetric samples and
    :class:`PSDViolationError` (carrying ``t`` and ``min_eigenvalue``) for
    indefinite ones.
    """
    system = CanonicalSystem(coefficient, z, domain)
    validate_coefficient(coefficient, system.domain, require_psd=require_psd, tol=tol, points=points)
    return system


# ---------------------------------------------------------------------------
# trace normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeReparametrization:
    """The map ``x(t) = t0 + int_{t0}^t tr H(s) ds`` and its inverse.

    ``t_grid``/``x_grid`` hold the sampled forward map; ``forward`` and
    ``inverse`` evaluate it anywhere in the (periodically extended) range.
    """

    t_grid: np.ndarray
    x_grid: np.ndarray
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]

    def composition_residual(self) -> float:
        back = self.inverse(self.forward(self.t_grid))
        fwd = self.forward(self.inverse(self.x_grid))
        return float(max(np.max(np.abs(back - self.t_grid)), np.max(np.abs(fwd - self.x_grid))))


class _HermiteMap:
    """Monotone cubic Hermite map through ``(t_k, x_k)`` with slopes ``s_k``.

    Extends periodically when ``period`` is given: ``x(t + p) = x(t) + P``.
    """

    def __init__(self, t, x, slopes, period=None):
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.s = np.asarray(slopes, dtype=float)
        self.period = period
        self.xspan = self.x[-1] - self.x[0] if period is not None else None

    def _cell(self, idx, u):
        t0, t1 = self.t[idx], self.t[idx + 1]
        h = t1 - t0
        y0, y1 = self.x[idx], self.x[idx + 1]
        m0, m1 = self.s[idx] * h, self.s[idx + 1] * h
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        val = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1
        d = ((6 * u**2 - 6 * u) * y0 + (3 * u**2 - 4 * u + 1) * m0 + (-6 * u**2 + 6 * u) * y1 + (3 * u**2 - 2 * u) * m1) / h
        return val, d

    def forward(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        shift = np.zeros_like(ts)
        if self.period is not None:
            k = np.floor((ts - self.t[0]) / self.period)
            ts = ts - k * self.period
            shift = k * self.xspan
        idx = np.clip(np.searchsorted(self.t, ts, side="right") - 1, 0, self.t.size - 2)
        u = (ts - self.t[idx]) / (self.t[idx + 1] - self.t[idx])
        val, _ = self._cell(idx, u)
        return val + shift

    def inverse(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        shift = np.zeros_like(xs)
        if self.period is not None:
            k = np.floor((xs - self.x[0]) / self.xspan)
            xs = xs - k * self.xspan
            shift = k * self.period
        idx = np.clip(np.searchsorted(self.x, xs, side="right") - 1, 0, self.x.size - 2)
        lo = np.zeros_like(xs)
        hi = np.ones_like(xs)
        u = (xs - self.x[idx]) / np.maximum(self.x[idx + 1] - self.x[idx], np.finfo(float).tiny)
        u = np.clip(u, 0.0, 1.0)
        # safeguarded Newton on the monotone cubic of each cell
        for _ in range(60):
            val, d = self._cell(idx, u)
            f = val - xs
            lo = np.where(f < 0, u, lo)
            hi = np.where(f > 0, u, hi)
            h = self.t[idx + 1] - self.t[idx]
            step = np.where(d > 0, f / np.where(d > 0, d, 1.0) / h, np.inf)
            cand = u - step
            bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
            u_new = np.where(bad, 0.5 * (lo + hi), cand)
            if np.max(np.abs(u_new - u)) < 1e-15:
                u = u_new
                break
            u = u_new
        return self.t[idx] + u * (self.t[idx + 1] - self.t[idx]) + shift


def _trace_normalize_constant(system: CanonicalSystem):
    coef = system.coefficient
    tr = float(np.real(np.trace(coef.matrix)))
    if not tr > 0:
        raise DegenerateCoefficientError(f"trace of constant coefficient is {tr!r}")
    t0, t1 = system.domain
    period = None if coef.period is None else coef.period * tr

    def fwd(ts):
        return t0 + tr * (np.asarray(ts, dtype=float) - t0)

    def inv(xs):
        return t0 + (np.asarray(xs, dtype=float) - t0) / tr

    new = CanonicalSystem(ConstantCoefficient(coef.matrix / tr, period=period), system.z, (t0, float(fwd(t1))))
    tg = np.linspace(t0, t1 if math.isfinite(t1) else t0 + (coef.period or 1.0), 33)
    return new, TimeReparametrization(tg, fwd(tg), fwd, inv)


def _trace_normalize_piecewise(system: CanonicalSystem):
    coef = system.coefficient
    b = coef.mesh
    tr = np.real(np.trace(coef.matrices, axis1=1, axis2=2))
    bad = np.flatnonzero(tr <= 0)
    if bad.size:
        i = int(bad[0])
        raise DegenerateCoefficientError(f"tr H vanishes on mesh cell [{b[i]!r}, {b[i + 1]!r}]")
    t0 = b[0]
    xb = t0 + np.concatenate([[0.0], np.cumsum(tr * np.diff(b))])
    period = coef.period
    xperiod = None if period is None else float(xb[-1] - xb[0])

    def fwd(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        k = np.zeros_like(ts)
        if period is not None:
            k = np.floor((ts - t0) / period)
            ts = ts - k * period
        i = np.clip(np.searchsorted(b, ts, side="right") - 1, 0, tr.size - 1)
        return xb[i] + tr[i] * (ts - b[i]) + (k * xperiod if period is not None else 0.0)

    def inv(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        k = np.zeros_like(xs)
        if period is not None:
            k = np.floor((xs - xb[0]) / xperiod)
            xs = xs - k * xperiod
        i = np.clip(np.searchsorted(xb, xs, side="right") - 1, 0, tr.size - 1)
        return b[i] + (xs - xb[i]) / tr[i] + (k * period if period is not None else 0.0)

    new_coef = PiecewiseConstantCoefficient(xb, coef.matrices / tr[:, None, None], periodic=period is not None)
    t_lo, t_hi = system.domain
    x_hi = float(fwd(t_hi)[0]) if math.isfinite(t_hi) else math.inf
    new = CanonicalSystem(new_coef, system.z, (float(fwd(t_lo)[0]), x_hi))
    return new, TimeReparametrization(b.copy(), xb, fwd, inv)


def trace_normalize(system: CanonicalSystem, cells: int = QUADRATURE_CELLS):
    """Reparametrize time so that the new coefficient has unit trace.

    Returns ``(normed_system, reparametrization)``.  Solutions correspond via
    ``u_normed(x) = u(t(x))``.  Constant and piecewise-constant coefficients
    are integrated in closed form; other kinds use composite Simpson on
    ``cells`` cells per period (or over the finite domain).
    """
    coef = system.coefficient
    if isinstance(coef, ConstantCoefficient):
        return _trace_normalize_constant(system)
    if isinstance(coef, PiecewiseConstantCoefficient):
        return _trace_normalize_piecewise(system)

    t0, t_end = system.domain
    if coef.period is not None:
        t1 = t0 + coef.period
    elif math.isfinite(t_end):
        t1 = t_end
    else:
        raise PreconditionError("aperiodic coefficient on an infinite domain cannot be trace normalized")
    tg = np.linspace(t0, t1, cells + 1)
    tm = 0.5 * (tg[:-1] + tg[1:])
    f = coef.trace(tg)
    fm = coef.trace(tm)
    cell_int = np.diff(tg) / 6.0 * (f[:-1] + 4 * fm + f[1:])
    if np.any(cell_int <= 0):
        i = int(np.argmax(cell_int <= 0))
        raise DegenerateCoefficientError(f"tr H vanishes on mesh cell [{tg[i]!r}, {tg[i + 1]!r}]")
    xg = t0 + np.concatenate([[0.0], np.cumsum(cell_int)])
    hmap = _HermiteMap(tg, xg, np.maximum(f, 0.0), period=coef.period)
    xperiod = None if coef.period is None else float(xg[-1] - xg[0])

    def normed(xs):
        ts = hmap.inverse(xs)
        H = coef.sample(ts)
        tr = np.real(np.trace(H, axis1=1, axis2=2))
        if np.any(tr <= 0):
            raise DegenerateCoefficientError(f"tr H vanishes at t={float(ts[np.argmax(tr <= 0)])!r}")
        return H / tr[:, None, None]

    def new_breaks(a, b):
        ta, tb = hmap.inverse([a, b])
        return hmap.forward(coef.breakpoints(float(ta), float(tb)))

    new_coef = SampledCoefficient(
        normed,
        coef.n,
        period=xperiod,
        vectorized=True,
        reentrant=getattr(coef, "reentrant", True),
        breakpoints=new_breaks,
        complex_valued=not coef.is_real,
    )
    x_hi = float(hmap.forward(t_end)[0]) if math.isfinite(t_end) else math.inf
    new = CanonicalSystem(new_coef, system.z, (t0, x_hi))
    return new, TimeReparametrization(tg, xg, hmap.forward, hmap.inverse)


def is_trace_normed(system: CanonicalSystem, tol: float = 1e-9, points: int = VALIDATION_POINTS) -> bool:
    t0, t1 = system.domain
    if system.period is not None:
        t1 = t0 + system.period
    grid = np.linspace(t0, t1, points)
    return bool(np.max(np.abs(system.coefficient.trace(grid) - 1.0)) <= tol)
