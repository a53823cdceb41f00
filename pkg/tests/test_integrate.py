import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canonsys import (
    ConstantCoefficient,
    DomainError,
    InvalidInputError,
    LinearSystem,
    PiecewiseConstantCoefficient,
    PreconditionError,
    SingularMatrixError,
    StepFailureError,
    basis_solutions,
    integrate_fundamental,
    integrate_vector,
    make_system,
    matrix_exp,
    period_grid,
    picard_solve,
    standard_J,
    step_propagators,
    trace_normalize,
    uniform_grid,
)
from conftest import random_fourier_system

SCHEMES = ["magnus4", "midpoint"]


def rotation(z, period=2 * math.pi):
    return make_system(ConstantCoefficient(0.5 * np.eye(2), period=period), z)


def rotation_closed_form(z, t):
    c, s = np.cos(z * t / 2), np.sin(z * t / 2)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def test_rotation_identity_init():
    z = 1.3
    W = integrate_fundamental(rotation(z), np.eye(2))
    assert np.max(np.abs(W.samples - rotation_closed_form(z, W.grid))) <= 1e-8
    assert np.array_equal(W.samples[0], np.eye(2))


def test_default_init_is_J():
    W = integrate_fundamental(rotation(1.0))
    assert np.array_equal(W.samples[0], standard_J(1))


@pytest.mark.parametrize("scheme", SCHEMES)
def test_zero_spectral_parameter(scheme):
    rng = np.random.default_rng(0)
    system = random_fourier_system(rng, 2, 0.0)
    init = rng.standard_normal((4, 4))
    W = integrate_fundamental(system, init, scheme=scheme)
    assert np.max(np.abs(W.samples - init)) == 0.0


@pytest.mark.parametrize("z", [0.7, 2.0, 1j, 0.5 - 1.5j])
def test_constant_matches_matrix_exp(z):
    H = np.array([[2.0, 0.3, 0.0, 0.1], [0.3, 1.0, 0.2, 0.0], [0.0, 0.2, 1.5, 0.0], [0.1, 0.0, 0.0, 0.7]])
    system = make_system(ConstantCoefficient(H, period=1.0), z)
    J = standard_J(2)
    W = integrate_fundamental(system, np.eye(4), period_grid(system, 1, 1024))
    oracle = np.array([matrix_exp(-z * J @ H * t) for t in W.grid])
    assert np.max(np.abs(W.samples - oracle)) <= 1e-8 * max(1.0, np.max(np.abs(oracle)))


def test_midpoint_constant_is_cayley_symplectic():
    # Cayley transform of a Hamiltonian matrix is symplectic to rounding
    H = np.diag([3.0, 0.5])
    system = make_system(ConstantCoefficient(H, period=1.0), 5.0)
    W = integrate_fundamental(system, standard_J(1), period_grid(system, 3, 64), "midpoint")
    assert W.symplectic_drift() <= 1e-13


@pytest.mark.parametrize("scheme,order", [("midpoint", 2), ("magnus4", 4)])
def test_convergence_order(scheme, order):
    rng = np.random.default_rng(5)
    system = random_fourier_system(rng, 1, 1.5)
    ref = integrate_fundamental(system, np.eye(2), period_grid(system, 1, 4096), "magnus4").samples[-1]
    errs = [
        np.linalg.norm(integrate_fundamental(system, np.eye(2), period_grid(system, 1, m), scheme).samples[-1] - ref)
        for m in (32, 64)
    ]
    rate = math.log2(errs[0] / errs[1])
    assert rate == pytest.approx(order, abs=0.4)


def test_piecewise_steps_align_to_breakpoints():
    H1, H2 = np.diag([1.0, 0.0]), np.array([[0.5, 0.2], [0.2, 0.5]])
    coef = PiecewiseConstantCoefficient([0.0, 0.3, 1.0], [H1, H2], periodic=True)
    z = 1.7
    system = make_system(coef, z)
    J = standard_J(1)
    # a coarse grid with no node at 0.3
    W = integrate_fundamental(system, np.eye(2), uniform_grid(0.0, 1.0, 16))
    exact = matrix_exp(-z * J @ H2 * 0.7) @ matrix_exp(-z * J @ H1 * 0.3)
    assert np.max(np.abs(W.samples[-1] - exact)) <= 1e-12


def test_integrate_vector_rotation():
    u = integrate_vector(rotation(1.0), np.array([1.0, 0.0]))
    expected = np.stack([np.cos(u.grid / 2), -np.sin(u.grid / 2)], -1)
    assert np.max(np.abs(u.samples - expected)) <= 1e-8


def test_zero_initial_vector():
    u = integrate_vector(rotation(1.0), np.zeros(2))
    assert np.max(np.abs(u.samples)) == 0.0


def test_integral_identity():
    rng = np.random.default_rng(9)
    system = random_fourier_system(rng, 2, 1.0 + 0.3j)
    u = integrate_vector(system, rng.standard_normal(4))
    assert u.integral_identity_residual() <= 1e-9 * max(1.0, u.sup_norm())


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3), zr=st.floats(-2, 2), zi=st.floats(-1, 1))
def test_linearity_and_fundamental_consistency(seed, a, b, zr, zi):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 2
    system = random_fourier_system(rng, n, complex(zr, zi))
    grid = period_grid(system, 1, 128)
    u0, v0 = rng.standard_normal(2 * n), rng.standard_normal(2 * n)
    su, sv = integrate_vector(system, u0, grid), integrate_vector(system, v0, grid)
    comb = integrate_vector(system, a * u0 + b * v0, grid)
    scale = max(1.0, su.sup_norm(), sv.sup_norm()) * (1 + abs(a) + abs(b))
    assert np.max(np.abs(comb.samples - (a * su.samples + b * sv.samples))) <= 1e-10 * scale
    W = integrate_fundamental(system, np.eye(2 * n), grid)
    assert np.max(np.abs(W.apply(u0).samples - su.samples)) <= 1e-10 * scale


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), split=st.integers(1, 255))
def test_flow_property(seed, split):
    rng = np.random.default_rng(seed)
    system = random_fourier_system(rng, 1 + seed % 3, float(rng.uniform(0.3, 2.0)))
    grid = period_grid(system, 1, 256)
    d = system.dim
    full = integrate_fundamental(system, np.eye(d), grid)
    first = integrate_fundamental(system, np.eye(d), grid[: split + 1])
    second = integrate_fundamental(system, np.eye(d), grid[split:])
    composed = second.samples[-1] @ first.samples[-1]
    assert np.max(np.abs(composed - full.samples[-1])) <= 1e-8


def test_basis_solutions_are_columns():
    rng = np.random.default_rng(2)
    system = random_fourier_system(rng, 2, 1.1)
    W = integrate_fundamental(system, np.eye(4))
    basis = basis_solutions(system)
    for i, sol in enumerate(basis):
        assert np.array_equal(sol.samples, W.samples[:, :, i])
    M = np.stack([s.samples for s in basis], axis=-1)
    dets = np.linalg.det(M)
    assert np.min(np.abs(dets)) >= 1e-9
    assert np.max(np.abs(dets - dets[0])) <= 1e-7 * abs(dets[0])


def test_basis_zero_z():
    system = make_system(ConstantCoefficient(np.eye(2), period=1.0), 0.0)
    e1, e2 = basis_solutions(system)
    assert np.all(e1.samples == [1.0, 0.0]) and np.all(e2.samples == [0.0, 1.0])


def test_invariants_for_real_and_complex_z():
    rng = np.random.default_rng(4)
    system = random_fourier_system(rng, 3, 1.4)
    W = integrate_fundamental(system, standard_J(3), period_grid(system, 2))
    assert W.symplectic_drift() <= 1e-7 and W.det_drift() <= 1e-7
    cplx = make_system(system.coefficient, 0.8 - 0.6j)
    Wc = integrate_fundamental(cplx, standard_J(3), period_grid(cplx, 2))
    assert Wc.det_drift() <= 1e-7
    assert Wc.min_abs_det() > 0.5


def test_integrate_errors():
    system = rotation(1.0)
    with pytest.raises(SingularMatrixError):
        integrate_fundamental(system, np.zeros((2, 2)))
    with pytest.raises(InvalidInputError):
        integrate_vector(system, np.ones(3))
    with pytest.raises(DomainError):
        integrate_vector(system, np.ones(2), np.array([-1.0, 0.0]))
    with pytest.raises(ValueError):
        step_propagators(system, uniform_grid(0.0, 1.0, 4), "rk4")


def test_midpoint_step_failure():
    # the Cayley step is singular when h * eigenvalue of A hits 2
    gen = LinearSystem(lambda ts: np.broadcast_to(np.diag([2.0, -2.0]), (np.size(ts), 2, 2)).copy(), 2, period=1.0)
    with pytest.raises(StepFailureError):
        step_propagators(gen, np.array([0.0, 1.0]), "midpoint")


# Picard --------------------------------------------------------------------


def test_picard_zero_z_is_constant():
    system = make_system(ConstantCoefficient(0.5 * np.eye(2), period=1.0), 0.0)
    sol, history = picard_solve(system, np.array([1.0, 2.0]), (0.0, 1.0))
    assert history == []
    assert np.all(sol.samples == np.array([1.0, 2.0]))


def test_picard_rotation_against_integrator():
    system = rotation(1.0)
    u0 = np.array([1.0, 0.0])
    sol, history = picard_solve(system, u0, (0.0, 0.25))
    assert history and max(history) <= 0.5 + 1e-9
    ref = integrate_vector(system, u0, sol.grid)
    assert np.max(np.abs(sol.samples - ref.samples)) <= 1e-8
    expected = np.stack([np.cos(sol.grid / 2), -np.sin(sol.grid / 2)], -1)
    assert np.max(np.abs(sol.samples - expected)) <= 1e-8


def test_picard_preconditions():
    system = rotation(2.0)
    with pytest.raises(PreconditionError):
        picard_solve(system, np.ones(2), (0.0, 0.2))
    unnormed = make_system(ConstantCoefficient(np.eye(2), period=1.0), 1.0)
    with pytest.raises(PreconditionError, match="trace_normalize"):
        picard_solve(unnormed, np.ones(2), (0.0, 0.1))
    gen = LinearSystem(lambda ts: np.zeros((np.size(ts), 2, 2)), 2, period=1.0)
    with pytest.raises(PreconditionError):
        picard_solve(gen, np.ones(2), (0.0, 0.1))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.floats(0.25, 4.0), phi=st.floats(-math.pi, math.pi), a=st.floats(0, 2))
def test_picard_contraction_property(seed, r, phi, a):
    # |z| >= 1/4 keeps the admissible interval within one period of the coefficient
    z = r * complex(math.cos(phi), math.sin(phi))
    rng = np.random.default_rng(seed)
    system, _ = trace_normalize(random_fourier_system(rng, 1 + seed % 2, z))
    u0 = rng.standard_normal(system.dim)
    sol, history = picard_solve(system, u0, (a, a + 1.0 / (4 * abs(z))), nodes=1025)
    assert all(r <= 0.5 + 1e-9 for r in history)
    ref = integrate_vector(system, u0, sol.grid)
    assert np.max(np.abs(sol.samples - ref.samples)) <= 1e-6 * max(1.0, ref.sup_norm())
