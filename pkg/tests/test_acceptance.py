"""Acceptance suite: one test (or group of tests) per criterion, at the stated tolerances.

Each criterion prints a PASS/FAIL line in the terminal summary (see conftest).
"""

import math

import numpy as np
import pytest

from canonsys import (
    DECAYING,
    PSEUDO_PERIODIC,
    ConstantCoefficient,
    classify,
    full_analysis,
    integrate_fundamental,
    integrate_vector,
    make_system,
    matrix_exp,
    monodromy,
    period_grid,
    period_norm_ratios,
    picard_solve,
    standard_J,
    trace_normalize,
)
from canonsys.apps import (
    GrapheneParams,
    WaterWaveParams,
    band_scan,
    default_deroos_params,
    deroos_gauge,
    deroos_k12,
    deroos_pseudoperiodic,
    dirac_point,
    graphene_quasienergies,
    waterwave_matrix,
    waterwave_system,
)
from canonsys.cli import main
from conftest import random_fourier_system

J2 = standard_J(1)
SWEEP = 50


def rotation_system(z, period):
    return make_system(ConstantCoefficient(0.5 * np.eye(2), period=period), z)


@pytest.fixture(scope="module")
def sweep():
    """Fifty random periodic Fourier systems, N in {1, 2, 3}, real z in [0.3, 2], p = 1."""
    rng = np.random.default_rng(7)
    out = []
    for k in range(SWEEP):
        n = 1 + k % 3
        z = float(rng.uniform(0.3, 2.0))
        system = random_fourier_system(rng, n, z)
        out.append((system, full_analysis(system)))
    return out


# ---------------------------------------------------------------------------


@pytest.mark.criterion(1, "constant-system oracle, W(t) = exp(-(z/2) J t) W(0)")
@pytest.mark.parametrize("z", [0.5, 1.0, 2.0])
def test_constant_system_oracle(z):
    system = rotation_system(z, 2 * math.pi)
    W = integrate_fundamental(system, J2, period_grid(system, 1, 1024))
    oracle = np.array([matrix_exp(-(z / 2) * J2 * t) @ J2 for t in W.grid])
    # closed form: exp(a J) = cos(a) I + sin(a) J
    a = -(z / 2) * W.grid
    closed = (np.cos(a)[:, None, None] * np.eye(2) + np.sin(a)[:, None, None] * J2) @ J2
    err = np.max(np.abs(W.samples - oracle))
    print(f"z={z}: max |W - expm| = {err:.3e}")
    assert err <= 1e-8
    assert np.max(np.abs(oracle - closed)) <= 1e-12


@pytest.mark.criterion(2, "symplecticity over [0, 4p] on 50 random Fourier systems")
def test_symplecticity_sweep(sweep):
    worst = 0.0
    for system, _ in sweep:
        J = standard_J(system.n)
        W = integrate_fundamental(system, J, period_grid(system, 4, 1024))
        worst = max(worst, W.symplectic_drift())
    print(f"max |W^T J W - W0^T J W0| = {worst:.3e}")
    assert worst <= 1e-7


@pytest.mark.criterion(3, "determinant constancy, real and complex z")
def test_determinant_constancy(sweep):
    worst = 0.0
    for system, report in sweep:
        worst = max(worst, report.analysis.solution.det_drift())
    for k, (system, _) in enumerate(sweep[:20]):
        z = 1j if k % 2 == 0 else 1 + 1j
        cplx = make_system(system.coefficient, z)
        W = integrate_fundamental(cplx, standard_J(cplx.n), period_grid(cplx, 4, 1024))
        worst = max(worst, W.det_drift())
    print(f"max relative det drift = {worst:.3e}")
    assert worst <= 1e-7


@pytest.mark.criterion(4, "Picard contraction and agreement with the integrator")
def test_picard_contraction():
    rng = np.random.default_rng(11)
    worst_ratio, worst_gap, runs = 0.0, 0.0, 0
    for k in range(6):
        z = [0.5, 1.0, 2.0, 1j, 1 + 1j, 3.0][k]
        base = random_fourier_system(rng, 1 + k % 2, z)
        system, _ = trace_normalize(base)
        for a in (0.0, 0.37):
            b = a + 1.0 / (4.0 * abs(z))
            u0 = rng.standard_normal(system.dim) + 0j
            sol, ratios = picard_solve(system, u0, (a, b))
            ref = integrate_vector(system, u0, sol.grid)
            worst_ratio = max(worst_ratio, max(ratios))
            worst_gap = max(worst_gap, float(np.max(np.linalg.norm(sol.samples - ref.samples, axis=1))))
            runs += 1
    print(f"{runs} runs: max ratio {worst_ratio:.4f}, max |picard - integrator| {worst_gap:.3e}")
    assert worst_ratio <= 0.5 + 1e-9
    assert worst_gap <= 1e-7


@pytest.mark.criterion(5, "monodromy structure: product, pairing, translation identity")
def test_monodromy_structure(sweep):
    prod = max(abs(np.prod(r.analysis.multipliers) - 1) for _, r in sweep)
    pair = max(r.analysis.pairing_residual for _, r in sweep)
    trans = max(r.translation_residual for _, r in sweep)
    print(f"product {prod:.3e}, pairing {pair:.3e}, translation {trans:.3e}")
    assert prod <= 1e-7
    assert pair <= 1e-6
    assert trans <= 1e-6


@pytest.mark.criterion(6, "Floquet-Lyapunov factorization W = J U exp(K t / p)")
def test_floquet_factorization_sweep(sweep):
    recon = max(r.factorization.relative_reconstruction for _, r in sweep)
    per = max(r.factorization.periodicity_residual for _, r in sweep)
    print(f"relative reconstruction {recon:.3e}, U periodicity {per:.3e}")
    assert recon <= 1e-6
    assert per <= 1e-6


@pytest.mark.criterion(6, "Floquet-Lyapunov factorization W = J U exp(K t / p)")
@pytest.mark.parametrize("z,p", [(1.0, 2.0), (0.5, 2 * math.pi), (2.0, 1.0), (1.9, 3.0)])
def test_constant_factor_is_identity(z, p):
    assert abs(z * p / 2) < math.pi
    report = full_analysis(rotation_system(z, p))
    dev = np.max(np.linalg.norm(report.factorization.U_samples - np.eye(2), axis=(1, 2)))
    print(f"z={z}, p={p}: max |U - I| = {dev:.3e}")
    assert dev <= 1e-8


@pytest.mark.criterion(7, "trichotomy: z = i decays like |lambda|^n, real z pseudo-periodic")
def test_trichotomy_complex_z():
    p = 1.0
    system = rotation_system(1j, p)
    analysis = monodromy(system)
    cl = classify(analysis)
    decaying = [r for r in cl.records if r.cls == DECAYING]
    assert len(decaying) == 1
    lam = decaying[0].multiplier
    print(f"decaying multiplier {lam}, expected {math.exp(-p / 2)}")
    assert abs(lam - math.exp(-p / 2)) <= 1e-7
    ratios = period_norm_ratios(system, decaying[0].eigenvector, periods=20)
    expected = abs(lam) ** np.arange(21)
    rel = np.max(np.abs(ratios - expected) / expected)
    print(f"max relative norm-decay error over 20 periods {rel:.3e}")
    assert rel <= 1e-5


@pytest.mark.criterion(7, "trichotomy: z = i decays like |lambda|^n, real z pseudo-periodic")
@pytest.mark.parametrize("z,p", [(0.5, 1.0), (1.0, 1.0), (2.0, 1.0), (1.0, 2 * math.pi)])
def test_trichotomy_real_z(z, p):
    report = full_analysis(rotation_system(z, p))
    assert all(r.cls == PSEUDO_PERIODIC for r in report.classification.records)
    worst = max(s.periodicity_residual for s in report.solutions)
    print(f"z={z}, p={p}: max |v(t+p) - v(t)| = {worst:.3e}")
    assert len(report.solutions) == 2
    assert worst <= 1e-6


@pytest.mark.criterion(8, "de Roos pipeline: constraint, pseudo-periodic solution, k12 spot value")
def test_deroos_pipeline():
    assert deroos_k12(1, 1, 1, 1, 2) == -0.375
    params = default_deroos_params()
    assert params.period == 2.0 and params.z == 0.9 and params.theta == 8.54
    gauge = deroos_gauge(params)
    pseudo = deroos_pseudoperiodic(params)
    print(f"eigenvalue drift {gauge.eigen_drift:.3e}, v periodicity {pseudo.periodicity_residual:.3e}")
    assert gauge.eigen_drift <= 1e-6
    assert pseudo.periodicity_residual <= 1e-5


@pytest.mark.criterion(9, "water-wave dispersion, multipliers exp(+-i omega p)")
def test_waterwave_dispersion():
    params = WaterWaveParams(g=9.81, sigma=0.0, h=1.0, k_vec=(1.0, 0.0))
    M = waterwave_matrix(params, 0.0)[0]
    omega = math.sqrt((M[0, 0] * M[1, 1]).real)
    assert abs(omega**2 - 9.81 * math.tanh(1.0)) <= 1e-12
    p = params.period
    lam = monodromy(waterwave_system(params)).multipliers
    expected = np.array([np.exp(1j * omega * p), np.exp(-1j * omega * p)])
    err = min(np.max(np.abs(lam - expected)), np.max(np.abs(lam - expected[::-1])))
    print(f"omega^2 = {omega**2:.12f}, multiplier error {err:.3e}")
    assert err <= 1e-7


@pytest.mark.criterion(10, "graphene quasienergies: Dirac point, k = 0, zone, chirality, driven gap")
def test_graphene_quasienergies():
    params = GrapheneParams(A0=0.0)
    eps_dirac = graphene_quasienergies(params.at(dirac_point(params)))
    assert max(abs(e) for e in eps_dirac) <= 1e-9
    eps0 = graphene_quasienergies(params.at((0.0, 0.0)))
    assert abs(eps0[0] + 3.0) <= 1e-7 and abs(eps0[1] - 3.0) <= 1e-7

    ks = np.linspace(-math.pi, math.pi, 8)
    table = band_scan(params, ks, ks)
    Om = params.Omega
    assert table.shape == (64, 4)
    assert np.all(table[:, 2:] >= -Om / 2) and np.all(table[:, 2:] < Om / 2)
    s = np.mod(table[:, 2] + table[:, 3], Om)
    chir = float(np.max(np.minimum(s, Om - s)))
    assert chir <= 1e-7

    driven = GrapheneParams(A0=0.5)
    e1, e2 = graphene_quasienergies(driven.at(dirac_point(driven)))
    print(f"Dirac {eps_dirac}, k=0 {eps0}, chirality {chir:.3e}, driven gap {e2 - e1:.4f}")
    assert e2 - e1 > 10 * 1e-9


@pytest.mark.criterion(11, "CLI determinism and --strict exit contract")
def test_cli_determinism_and_strict(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(
        "subcommand: analyze\n"
        "system:\n"
        "  kind: fourier\n"
        "  period: 1.0\n"
        "  constant: [[1.0, 0.2], [0.2, 0.8]]\n"
        "  cos_terms: [[[0.3, 0.0], [0.0, 0.1]]]\n"
        "z: [0.5, 1.0, 2.0]\n"
        "output: {format: csv}\n"
    )
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--config", str(cfg), "--output", str(a), "--strict"]) == 0
    assert main(["--config", str(cfg), "--output", str(b), "--strict"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 1 + 3 * 2

    tight = tmp_path / "tight.yaml"
    tight.write_text(cfg.read_text() + "tolerances: {symplectic_drift: 1.0e-30}\n")
    assert main(["--config", str(tight), "--output", str(tmp_path / "c.csv"), "--strict"]) == 1
    assert main(["--config", str(tight), "--output", str(tmp_path / "d.csv")]) == 0
