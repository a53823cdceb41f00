"""Floquet analysis of periodic linear systems.

All routines work for any periodic :class:`~canonsys.system.LinearSystem` of
even dimension.  The fundamental solution is normalized by ``W(t0) = J`` and
the monodromy matrix is ``C = -J W(t0 + p)``; symplectic structure (real
multiplier pairing, symplectic ``C`` and ``U``) is only expected when the
system reports ``structured``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError, PreconditionError
from .integrate import (
    DEFAULT_SCHEME,
    DEFAULT_STEPS_PER_PERIOD,
    FundamentalSolution,
    VectorSolution,
    integrate_fundamental,
    integrate_vector,
    period_grid,
)
from .mathcore import matrix_exp, matrix_log, principal_log, standard_J, symplectic_residual
from .system import LinearSystem

TOL_CIRCLE = 1e-7
EIGVEC_RTOL = 1e-8

DECAYING = "decaying"
PSEUDO_PERIODIC = "pseudo-periodic"
GROWING = "growing"


def _order(lams: np.ndarray) -> np.ndarray:
    """Descending modulus, then ascending argument; moduli compared at 1e-12."""
    mod = np.round(np.abs(lams), 12)
    arg = np.round(np.angle(lams), 12)
    return np.lexsort((arg, -mod))


def _null_vector(M: np.ndarray) -> tuple[np.ndarray, float]:
    _, s, vh = np.linalg.svd(M)
    return vh[-1].conj(), float(s[-1])


@dataclass
class MonodromyAnalysis:
    """Monodromy matrix, multipliers, exponents and ``K = log C`` for one period."""

    C: np.ndarray
    multipliers: np.ndarray
    exponents: np.ndarray
    eigenvectors: np.ndarray
    eigen_residuals: np.ndarray
    K: np.ndarray
    period: float
    residual_expK: float
    structured: bool
    solution: FundamentalSolution = field(repr=False)
    traceless: bool = True

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    @property
    def product_residual(self) -> float:
        return float(abs(np.prod(self.multipliers) - 1.0))

    @property
    def det_residual(self) -> float:
        return float(abs(np.linalg.det(self.C) - 1.0))

    @property
    def pairing_residual(self) -> float:
        """``max_i min_{j != i} |lambda_i lambda_j - 1|``."""
        lam = self.multipliers
        prod = np.abs(np.outer(lam, lam) - 1.0)
        np.fill_diagonal(prod, np.inf)
        return float(np.max(np.min(prod, axis=1)))

    @property
    def symplectic_residual(self) -> float:
        return symplectic_residual(self.C)

    @property
    def exponent_residual(self) -> float:
        return float(np.max(np.abs(np.exp(self.exponents) - self.multipliers)))

    @property
    def hamiltonian_log(self) -> bool:
        """False when a multiplier sits on the negative real axis.

        The principal logarithm then assigns ``+i pi`` to both members of a
        reciprocal pair, so ``K`` is not Hamiltonian and ``U(t)`` is periodic
        but not symplectic.
        """
        lam = self.multipliers
        on_cut = (lam.real < 0) & (np.abs(lam.imag) <= 1e-9 * np.abs(lam))
        return self.structured and not bool(np.any(on_cut))

    def has_eigenvector(self, i: int) -> bool:
        scale = max(1.0, float(np.linalg.norm(self.C, 2)))
        return bool(self.eigen_residuals[i] <= EIGVEC_RTOL * scale)

    def distinct_multipliers(self, tol: float = 1e-6) -> list[tuple[complex, int]]:
        groups: list[list[complex]] = []
        for lam in self.multipliers:
            for g in groups:
                if abs(g[0] - lam) <= tol:
                    g.append(lam)
                    break
            else:
                groups.append([lam])
        return [(complex(np.mean(g)), len(g)) for g in groups]

    def residuals(self) -> dict[str, float]:
        """Named invariant residuals; structural ones are NaN for unstructured systems."""
        nan = float("nan")
        W = self.solution
        return {
            "multiplier_product": self.product_residual if self.traceless else nan,
            "det_C": self.det_residual if self.traceless else nan,
            "reciprocal_pairing": self.pairing_residual if self.structured else nan,
            "monodromy_symplectic": self.symplectic_residual if self.structured else nan,
            "expK": self.residual_expK / max(1.0, float(np.linalg.norm(self.C))),
            "exponent_consistency": self.exponent_residual,
            "det_drift": W.det_drift() if self.traceless else nan,
            "symplectic_drift": W.symplectic_drift() if self.structured else nan,
        }


def monodromy(
    system: LinearSystem,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    scheme: str = DEFAULT_SCHEME,
    solution: FundamentalSolution | None = None,
) -> MonodromyAnalysis:
    """Integrate one period from ``W(t0) = J`` and decompose ``C = -J W(t0 + p)``.

    A precomputed ``solution`` (initial value ``J``, covering at least one
    period) can be passed to avoid integrating twice.
    """
    if system.period is None:
        raise PreconditionError("monodromy requires a declared period")
    if system.dim % 2:
        raise PreconditionError("monodromy requires an even-dimensional system")
    J = standard_J(system.dim // 2)
    if solution is None:
        solution = integrate_fundamental(system, J, period_grid(system, 1, steps_per_period), scheme)
    elif not np.array_equal(solution.initial_condition, J):
        raise PreconditionError("fundamental solution must start from W(t0) = J")
    t0 = solution.grid[0]
    Wp = solution.at(t0 + system.period)
    C = -J @ Wp
    try:
        lams = np.linalg.eigvals(C)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver failed (cond(C) = {np.linalg.cond(C):.3e})") from exc
    lams = lams[_order(lams)]
    d = C.shape[0]
    vecs = np.empty((d, d), dtype=complex)
    res = np.empty(d)
    for i, lam in enumerate(lams):
        vecs[:, i], res[i] = _null_vector(C - lam * np.eye(d))
    K = matrix_log(C)
    residual = float(np.linalg.norm(matrix_exp(K) - C))
    probe = system.matrices(np.linspace(t0, t0 + system.period, 33))
    traces = np.abs(np.trace(probe, axis1=1, axis2=2))
    traceless = bool(np.max(traces) <= 1e-12 * max(1.0, float(np.max(np.abs(probe)))))
    return MonodromyAnalysis(
        C=C,
        multipliers=lams,
        exponents=np.asarray(principal_log(lams)),
        eigenvectors=vecs,
        eigen_residuals=res,
        K=K,
        period=system.period,
        residual_expK=residual,
        structured=system.structured,
        solution=solution,
        traceless=traceless,
    )


def _period_offset(W: FundamentalSolution, p: float, periods: int) -> int:
    t0 = W.grid[0]
    try:
        kp = W.index_of(t0 + p)
    except DomainError as exc:
        raise PreconditionError(f"solution grid does not contain t0 + p = {t0 + p!r}") from exc
    if W.grid[-1] < t0 + periods * p - 1e-9 * max(1.0, p):
        raise PreconditionError(f"solution must cover [t0, t0 + {periods}p]")
    span = W.grid[kp : kp + kp + 1] - W.grid[: kp + 1]
    if np.max(np.abs(span - p)) > 1e-9 * max(1.0, p):
        raise PreconditionError("grid must be uniform in period shifts (use period_grid)")
    return kp


def translation_identity_check(W: FundamentalSolution, p: float) -> float:
    """Max over ``t`` in one period of ``|W(t + p) + W(t) J W(p)|``."""
    d = W.samples.shape[1]
    J = standard_J(d // 2)
    if not np.array_equal(W.initial_condition, J):
        raise PreconditionError("translation identity requires W(t0) = J")
    kp = _period_offset(W, p, 2)
    Wt = W.samples[: kp + 1]
    Wtp = W.samples[kp : 2 * kp + 1]
    res = Wtp + Wt @ J @ W.samples[kp]
    return float(np.max(np.linalg.norm(res, axis=(1, 2))))


@dataclass
class FloquetFactorization:
    """``W(t) = J U(t) exp(K t / p)`` sampled along the solution grid."""

    grid: np.ndarray
    U_samples: np.ndarray
    K: np.ndarray
    period: float
    reconstruction_residual: float
    periodicity_residual: float
    symplectic_residual: float
    max_W: float

    @property
    def relative_reconstruction(self) -> float:
        return self.reconstruction_residual / self.max_W


def _expK(K: np.ndarray, s: np.ndarray) -> np.ndarray:
    return scipy.linalg.expm(s[:, None, None] * K[None, :, :])


def floquet_factorize(W: FundamentalSolution, analysis: MonodromyAnalysis) -> FloquetFactorization:
    """``U(t) = -J W(t) exp(-K t / p)`` on every grid point of ``W``.

    ``W`` must start from ``J`` and cover two periods so that periodicity of
    ``U`` can be measured.
    """
    p = analysis.period
    if W.system.period is None or abs(W.system.period - p) > 1e-12 * max(1.0, p):
        raise PreconditionError(f"inconsistent period: analysis {p!r}, system {W.system.period!r}")
    d = W.samples.shape[1]
    J = standard_J(d // 2)
    if not np.array_equal(W.initial_condition, J):
        raise PreconditionError("factorization requires W(t0) = J")
    kp = _period_offset(W, p, 2)
    s = (W.grid - W.grid[0]) / p
    E_minus = _expK(analysis.K, -s)
    E_plus = _expK(analysis.K, s)
    U = -J @ W.samples @ E_minus
    recon = W.samples - J @ U @ E_plus
    recon_res = float(np.max(np.linalg.norm(recon, axis=(1, 2))))
    per = float(np.max(np.linalg.norm(U[kp : 2 * kp + 1] - U[: kp + 1], axis=(1, 2))))
    if analysis.structured:
        form = np.swapaxes(U, 1, 2) @ J @ U - J
        symp = float(np.max(np.linalg.norm(form, axis=(1, 2))))
    else:
        symp = float("nan")
    max_w = float(np.max(np.linalg.norm(W.samples, axis=(1, 2))))
    return FloquetFactorization(W.grid, U, analysis.K, p, recon_res, per, symp, max_w)


def reduce_to_constant(W: FundamentalSolution, factorization: FloquetFactorization) -> tuple[np.ndarray, float]:
    """Change variables ``w = (J U(t))^{-1} u`` and test ``w(t) = exp(K t/p) w(t0)``.

    ``u`` ranges over the basis solutions ``u^i(t0) = e_i``.  Returns the
    constant generator ``K / p`` and the max residual of the identity.
    """
    d = W.samples.shape[1]
    J = standard_J(d // 2)
    if W.samples.shape[0] != factorization.U_samples.shape[0]:
        raise PreconditionError("factorization was computed on a different grid")
    basis = W.samples @ np.linalg.inv(W.initial_condition)
    JU = J @ factorization.U_samples
    conds = np.linalg.cond(JU)
    if np.max(conds) > 1e12:
        raise NumericalError(f"J U(t) is numerically singular (cond {np.max(conds):.3e})")
    w = np.linalg.solve(JU, basis)
    s = (W.grid - W.grid[0]) / factorization.period
    predicted = _expK(factorization.K, s) @ w[0]
    res = float(np.max(np.linalg.norm(w - predicted, axis=(1, 2))))
    return factorization.K / factorization.period, res


@dataclass(frozen=True)
class MultiplierRecord:
    index: int
    multiplier: complex
    exponent: complex
    cls: str
    eigenvector: np.ndarray
    has_eigenvector: bool


@dataclass(frozen=True)
class SolutionClassification:
    records: tuple[MultiplierRecord, ...]
    witness: int
    tol_circle: float

    @property
    def witness_record(self) -> MultiplierRecord:
        return self.records[self.witness]

    def count(self, cls: str) -> int:
        return sum(r.cls == cls for r in self.records)

    @property
    def marginally_stable(self) -> bool:
        return all(r.cls == PSEUDO_PERIODIC for r in self.records)

    @property
    def verdict(self) -> str:
        if self.count(GROWING):
            return "unstable"
        if self.marginally_stable:
            return "marginally stable"
        return "asymptotically stable"


def classify_multiplier(lam: complex, tol_circle: float = TOL_CIRCLE) -> str:
    r = abs(lam)
    if r < 1 - tol_circle:
        return DECAYING
    if r > 1 + tol_circle:
        return GROWING
    return PSEUDO_PERIODIC


def classify(analysis: MonodromyAnalysis, tol_circle: float = TOL_CIRCLE) -> SolutionClassification:
    """Sort every multiplier into decaying / pseudo-periodic / growing.

    The witness is the multiplier of smallest modulus (ties within
    ``tol_circle`` broken by smallest ``|arg|``, then lowest index); the
    reciprocal pairing guarantees its modulus is at most one.
    """
    records = tuple(
        MultiplierRecord(
            index=i,
            multiplier=complex(lam),
            exponent=complex(mu),
            cls=classify_multiplier(lam, tol_circle),
            eigenvector=analysis.eigenvectors[:, i].copy(),
            has_eigenvector=analysis.has_eigenvector(i),
        )
        for i, (lam, mu) in enumerate(zip(analysis.multipliers, analysis.exponents))
    )
    mods = np.abs(analysis.multipliers)
    smallest = mods.min()
    tied = [i for i in range(mods.size) if mods[i] <= smallest + tol_circle]
    witness = min(tied, key=lambda i: (round(abs(np.angle(analysis.multipliers[i])), 12), i))
    return SolutionClassification(records, witness, tol_circle)


@dataclass
class FloquetSolution:
    """``u(t) = W(t) c`` and its periodic part ``v(t) = u(t) exp(-mu (t - t0) / p)``."""

    u: VectorSolution
    v: VectorSolution
    multiplier: complex
    exponent: complex
    quasi_periodicity_residual: float
    periodicity_residual: float

    @property
    def max_u(self) -> float:
        return self.u.sup_norm()


def floquet_solution(W: FundamentalSolution, multiplier: complex, eigenvector, p: float | None = None) -> FloquetSolution:
    """Build the solution attached to an eigenpair of the monodromy matrix.

    Residuals are ``max |u(t+p) - lambda u(t)|`` and ``max |v(t+p) - v(t)|``
    over one period.
    """
    p = W.system.period if p is None else p
    if p is None:
        raise PreconditionError("period required")
    d = W.samples.shape[1]
    J = standard_J(d // 2)
    if not np.array_equal(W.initial_condition, J):
        raise PreconditionError("Floquet solutions require W(t0) = J")
    kp = _period_offset(W, p, 2)
    c = np.asarray(eigenvector, dtype=complex)
    C = -J @ W.samples[kp]
    scale = max(1.0, float(np.linalg.norm(C, 2))) * float(np.linalg.norm(c))
    if np.linalg.norm(C @ c - multiplier * c) > EIGVEC_RTOL * scale:
        raise PreconditionError("c is not an eigenvector of the monodromy matrix for the given multiplier")
    mu = complex(principal_log(multiplier))
    u = W.apply(c)
    s = (W.grid - W.grid[0]) / p
    v_samples = u.samples * np.exp(-mu * s)[:, None]
    v = VectorSolution(W.grid, v_samples, v_samples[0].copy(), W.system, W.step, W.scheme)
    quasi = float(np.max(np.linalg.norm(u.samples[kp : 2 * kp + 1] - multiplier * u.samples[: kp + 1], axis=1)))
    per = float(np.max(np.linalg.norm(v_samples[kp : 2 * kp + 1] - v_samples[: kp + 1], axis=1)))
    return FloquetSolution(u, v, complex(multiplier), mu, quasi, per)


def period_norm_ratios(
    system: LinearSystem,
    eigenvector,
    periods: int = 20,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    scheme: str = DEFAULT_SCHEME,
) -> np.ndarray:
    """``|u(t0 + n p)| / |u(t0)|`` for ``n = 0..periods`` with ``u(t0) = J c``."""
    J = standard_J(system.dim // 2)
    u0 = J @ np.asarray(eigenvector, dtype=complex)
    sol = integrate_vector(system, u0, period_grid(system, periods, steps_per_period), scheme)
    norms = np.linalg.norm(sol.samples[::steps_per_period], axis=1)
    return norms / norms[0]


def fundamental_two_periods(
    system: LinearSystem,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    scheme: str = DEFAULT_SCHEME,
) -> FundamentalSolution:
    """``W`` from ``J`` over ``[t0, t0 + 2p]`` on a period-aligned uniform grid."""
    J = standard_J(system.dim // 2)
    return integrate_fundamental(system, J, period_grid(system, 2, steps_per_period), scheme)


@dataclass
class FloquetReport:
    """Everything the factorize pipeline produces for one system."""

    analysis: MonodromyAnalysis
    classification: SolutionClassification
    factorization: FloquetFactorization
    constant_generator: np.ndarray
    constant_residual: float
    translation_residual: float
    solutions: list[FloquetSolution]

    def residuals(self) -> dict[str, float]:
        out = self.analysis.residuals()
        out["translation_identity"] = self.translation_residual
        out["reconstruction"] = self.factorization.relative_reconstruction
        out["U_periodicity"] = self.factorization.periodicity_residual
        out["U_symplectic"] = self.factorization.symplectic_residual if self.analysis.hamiltonian_log else float("nan")
        out["constant_reduction"] = self.constant_residual
        if self.solutions:
            out["quasi_periodicity"] = max(s.quasi_periodicity_residual / s.max_u for s in self.solutions)
            out["v_periodicity"] = max(s.periodicity_residual / s.max_u for s in self.solutions)
        return out


def full_analysis(
    system: LinearSystem,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    scheme: str = DEFAULT_SCHEME,
    tol_circle: float = TOL_CIRCLE,
) -> FloquetReport:
    """Monodromy, classification, factorization, reduction and Floquet solutions over two periods."""
    W = fundamental_two_periods(system, steps_per_period, scheme)
    analysis = monodromy(system, solution=W)
    classification = classify(analysis, tol_circle)
    fact = floquet_factorize(W, analysis)
    gen, const_res = reduce_to_constant(W, fact)
    trans = translation_identity_check(W, system.period)
    sols = [
        floquet_solution(W, r.multiplier, r.eigenvector)
        for r in classification.records
        if r.has_eigenvector
    ]
    return FloquetReport(analysis, classification, fact, gen, const_res, trans, sols)
