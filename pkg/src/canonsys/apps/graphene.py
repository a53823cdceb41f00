"""Quasienergies of circularly driven graphene (nearest-neighbour honeycomb model).

The Bloch Hamiltonian is ``H(k, t) = [[0, -gamma Z], [-gamma Z*, 0]]`` with
``Z(k, t) = sum_n exp(i (k + q A(t)) . a_n)`` and ``A(t) = A0 (cos Wt, sin Wt)``.
Units follow hbar = 1; the coupling ``q`` stands for e/c.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import GeneratorError
from ..integrate import DEFAULT_SCHEME, DEFAULT_STEPS_PER_PERIOD, integrate_fundamental, period_grid
from ..system import LinearSystem


def _default_bonds() -> tuple:
    # unit bonds at 90, 210 and 330 degrees
    return tuple(
        (math.cos(a), math.sin(a)) for a in (math.pi / 2, math.pi / 2 + 2 * math.pi / 3, math.pi / 2 + 4 * math.pi / 3)
    )


@dataclass(frozen=True)
class GrapheneParams:
    gamma: float = 1.0
    bonds: tuple = field(default_factory=_default_bonds)
    A0: float = 0.0
    Omega: float = 10.0
    charge_ratio: float = 1.0
    k_vec: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.Omega > 0:
            raise GeneratorError("drive frequency must be positive")
        b = np.asarray(self.bonds, dtype=float)
        if b.shape != (3, 2):
            raise GeneratorError("need exactly three 2-D nearest-neighbour vectors")
        lengths = np.linalg.norm(b, axis=1)
        if np.max(np.abs(lengths - lengths[0])) > 1e-12:
            raise GeneratorError("nearest-neighbour vectors must have equal length")
        object.__setattr__(self, "bonds", tuple(map(tuple, b.tolist())))
        object.__setattr__(self, "k_vec", tuple(float(x) for x in self.k_vec))

    @property
    def period(self) -> float:
        return 2 * math.pi / self.Omega

    def at(self, k_vec) -> "GrapheneParams":
        return replace(self, k_vec=tuple(k_vec))


def vector_potential(params: GrapheneParams, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    w = params.Omega * ts
    return params.A0 * np.stack([np.cos(w), np.sin(w)], axis=-1)


def graphene_Z(params: GrapheneParams, t) -> np.ndarray | complex:
    """Three-term phase sum ``Z(k, t)``; scalar in, scalar out."""
    ts = np.asarray(t, dtype=float)
    q = np.asarray(params.k_vec) + params.charge_ratio * vector_potential(params, ts)
    phases = q @ np.asarray(params.bonds).T
    Z = np.sum(np.exp(1j * phases), axis=-1)
    return complex(Z) if Z.ndim == 0 else Z


def bloch_hamiltonian(params: GrapheneParams, ts) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    Z = np.atleast_1d(graphene_Z(params, ts))
    H = np.zeros((ts.size, 2, 2), dtype=complex)
    H[:, 0, 1] = -params.gamma * Z
    H[:, 1, 0] = -params.gamma * np.conj(Z)
    return H


def graphene_system(params: GrapheneParams) -> LinearSystem:
    """``u' = -i H(k, t) u`` as a periodic linear system with period ``2 pi / Omega``."""
    return LinearSystem(
        lambda ts: -1j * bloch_hamiltonian(params, ts),
        2,
        period=params.period,
        label="graphene",
    )


def fold_quasienergy(eps, Omega: float):
    """Map quasienergies into ``[-Omega/2, Omega/2)``."""
    eps = np.asarray(eps, dtype=float)
    out = np.mod(eps + Omega / 2, Omega) - Omega / 2
    out = np.where(out >= Omega / 2, out - Omega, out)
    return out if out.ndim else float(out)


def graphene_quasienergies(
    params: GrapheneParams,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    scheme: str = DEFAULT_SCHEME,
) -> tuple[float, float]:
    """Quasienergies ``eps_1 <= eps_2`` from the one-period propagator.

    Multipliers are ``lambda = exp(-i eps T)``, so ``eps = -arg(lambda) / T``
    folded into the zone.
    """
    system = graphene_system(params)
    W = integrate_fundamental(system, np.eye(2), period_grid(system, 1, steps_per_period), scheme)
    lams = np.linalg.eigvals(W.samples[-1])
    eps = np.sort(fold_quasienergy(-np.angle(lams) / params.period, params.Omega))
    return float(eps[0]), float(eps[1])


def reciprocal_vectors(params: GrapheneParams) -> tuple[np.ndarray, np.ndarray]:
    """Reciprocal basis of the Bravais lattice spanned by ``a_1 - a_2`` and ``a_1 - a_3``."""
    a = np.asarray(params.bonds)
    D = np.stack([a[0] - a[1], a[0] - a[2]])
    G = 2 * np.pi * np.linalg.inv(D).T
    return G[0], G[1]


def dirac_point(params: GrapheneParams) -> np.ndarray:
    """A wave vector where the undriven ``Z`` vanishes: ``(G_1 - G_2) / 3``."""
    G1, G2 = reciprocal_vectors(params)
    return (G1 - G2) / 3.0


def band_scan(
    params: GrapheneParams,
    kx_values,
    ky_values,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    scheme: str = DEFAULT_SCHEME,
    threads: int = 1,
) -> np.ndarray:
    """Quasienergy pairs over a k-grid; rows ``(k_x, k_y, eps_1, eps_2)``, k_x outer.

    Points are independent and may run on a thread pool; the row order does
    not depend on ``threads``.
    """
    points = [(float(kx), float(ky)) for kx in kx_values for ky in ky_values]

    def one(k):
        return graphene_quasienergies(params.at(k), steps_per_period, scheme)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            eps = list(pool.map(one, points))
    else:
        eps = [one(k) for k in points]
    return np.array([(kx, ky, e1, e2) for (kx, ky), (e1, e2) in zip(points, eps)], dtype=float).reshape(-1, 4)
