"""Command-line entry point: one YAML config in, one CSV or JSON document out.

Exit status
-----------
0  run completed (and, with ``--strict``, every residual is within tolerance)
1  ``--strict`` and at least one residual exceeds its configured tolerance
2  configuration could not be read or validated
3  the pipeline raised an error
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import traceback

import numpy as np

from . import io as out_io
from .config import DEFAULT_TOLERANCES, RunConfig, SeriesSpec, build_coefficient, config_help, emit_config, load_config
from .errors import CanonsysError, ConfigError
from .floquet import classify, full_analysis, monodromy
from .integrate import integrate_vector, period_grid, picard_solve, uniform_grid
from .system import make_system, trace_normalize

EXIT_OK, EXIT_STRICT, EXIT_CONFIG, EXIT_PIPELINE = 0, 1, 2, 3


def _series(spec: SeriesSpec, period: float):
    from .apps import FourierSeries

    return FourierSeries(spec.a0, period, tuple(spec.cos), tuple(spec.sin))


def _system(cfg: RunConfig, z: complex):
    return make_system(build_coefficient(cfg.system), z, cfg.system.domain)


def _initial(cfg: RunConfig, dim: int) -> np.ndarray:
    if cfg.initial is None:
        u0 = np.zeros(dim, dtype=complex)
        u0[0] = 1.0
        return u0
    if cfg.initial == "random":
        rng = np.random.default_rng(cfg.seed)
        return rng.standard_normal(dim) + 0j
    u0 = np.asarray(cfg.initial, dtype=complex)
    if u0.shape != (dim,):
        raise ConfigError(f"initial: expected {dim} entries, got {u0.size}")
    return u0


def _zcols(z: complex) -> list[float]:
    return [z.real, z.imag]


MULTIPLIER_HEADER = ["z_re", "z_im", "index", "re", "im", "modulus", "class", "exponent_re", "exponent_im"]


def _multiplier_rows(z, classification, extra=None):
    for r in classification.records:
        row = _zcols(z) + [r.index, r.multiplier.real, r.multiplier.imag, abs(r.multiplier), r.cls]
        row += [r.exponent.real, r.exponent.imag]
        if extra is not None:
            row += extra(r)
        yield row


# ---------------------------------------------------------------------------
# pipelines: each returns (csv_text, document, residuals)
# ---------------------------------------------------------------------------


def run_evolve(cfg: RunConfig, threads: int):
    header, rows, results, res = None, [], [], []
    for z in cfg.z_values:
        system = _system(cfg, z)
        if system.period is not None:
            grid = period_grid(system, cfg.grid.periods, cfg.grid.steps_per_period)
        else:
            a, b = system.domain
            if not math.isfinite(b):
                raise ConfigError("evolve on an aperiodic system needs a finite system.domain")
            grid = uniform_grid(a, b, cfg.grid.steps)
        sol = integrate_vector(system, _initial(cfg, system.dim), grid, cfg.grid.scheme)
        rel = sol.integral_identity_residual() / max(sol.sup_norm(), 1e-300)
        res.append({"integral_identity": rel})
        header = ["z_re", "z_im"] + out_io.trajectory_header(sol.samples)
        rows += [_zcols(z) + r for r in out_io.trajectory_rows(sol.grid, sol.samples)]
        results.append({"z": z, "steps": grid.size - 1, "final": sol.samples[-1], "residuals": res[-1]})
    return out_io.csv_text(header, rows), {"runs": results}, res


def run_analyze(cfg: RunConfig, threads: int):
    rows, results, res = [], [], []
    for z in cfg.z_values:
        analysis = monodromy(_system(cfg, z), cfg.grid.steps_per_period, cfg.grid.scheme)
        cl = classify(analysis, cfg.tol_circle)
        rows += list(_multiplier_rows(z, cl))
        doc = out_io.analysis_document(analysis, cl)
        doc["z"] = z
        results.append(doc)
        res.append(doc["residuals"])
    return out_io.csv_text(MULTIPLIER_HEADER, rows), {"runs": results}, res


def run_factorize(cfg: RunConfig, threads: int):
    rows, results, res = [], [], []
    for z in cfg.z_values:
        report = full_analysis(_system(cfg, z), cfg.grid.steps_per_period, cfg.grid.scheme, cfg.tol_circle)
        r = report.residuals()
        for name in sorted(r):
            rows.append(_zcols(z) + [name, r[name]])
        doc = out_io.analysis_document(report.analysis, report.classification, r)
        doc["z"] = z
        doc["constant_generator"] = report.constant_generator
        doc["log_monodromy"] = report.analysis.K
        results.append(doc)
        res.append(r)
    return out_io.csv_text(["z_re", "z_im", "residual", "value"], rows), {"runs": results}, res


def run_stability(cfg: RunConfig, threads: int):
    from .apps import stability_report
    from .apps.stability import multiplier_verdict

    rows, results, res = [], [], []
    for z in cfg.z_values:
        rep = stability_report(_system(cfg, z), cfg.grid.steps_per_period, cfg.grid.scheme, cfg.tol_circle)
        rows += list(_multiplier_rows(z, rep.classification, lambda r: [multiplier_verdict(r.cls)]))
        doc = out_io.analysis_document(rep.analysis, rep.classification)
        doc.update(z=z, verdicts=rep.verdicts, witness_verdict=rep.witness_verdict, overall=rep.overall)
        results.append(doc)
        res.append(doc["residuals"])
    return out_io.csv_text(MULTIPLIER_HEADER + ["verdict"], rows), {"runs": results}, res


def run_deroos(cfg: RunConfig, threads: int):
    from .apps import DeRoosParams, deroos_gauge, deroos_pseudoperiodic, deroos_system

    d = cfg.deroos
    rows, results, res = [], [], []
    for z in cfg.z_values:
        params = DeRoosParams(
            _series(d.k1, d.period), _series(d.k2, d.period), _series(d.m1, d.period), _series(d.m2, d.period), z=z, theta=d.theta
        )
        params.validate()
        sps = cfg.grid.steps_per_period
        gauge = deroos_gauge(params, steps_per_period=sps)
        pseudo = deroos_pseudoperiodic(params, 2 * sps, cfg.grid.scheme)
        analysis = monodromy(deroos_system(params), sps, cfg.grid.scheme)
        cl = classify(analysis, cfg.tol_circle)
        r = analysis.residuals()
        r["eigen_drift"] = gauge.eigen_drift
        r["gauge_periodicity"] = pseudo.periodicity_residual
        rows += list(_multiplier_rows(z, cl))
        doc = out_io.analysis_document(analysis, cl, r)
        doc.update(z=z, theta=d.theta, constrained_eigenvalue=gauge.target, G0_structure=gauge.structure)
        results.append(doc)
        res.append(r)
    return out_io.csv_text(MULTIPLIER_HEADER, rows), {"runs": results}, res


def run_waterwave(cfg: RunConfig, threads: int):
    from .apps import WaterWaveParams, dispersion_omega, waterwave_system

    w = cfg.waterwave
    params = WaterWaveParams(w.g, w.sigma, w.h, tuple(w.k_vec), _series(w.c, w.period))
    omega = dispersion_omega(params)
    still = params.c.is_constant and not np.any(np.asarray(params.c.a0))
    rows, results, res = [], [], []
    for z in cfg.z_values:
        analysis = monodromy(waterwave_system(params, z), cfg.grid.steps_per_period, cfg.grid.scheme)
        cl = classify(analysis, cfg.tol_circle)
        r = analysis.residuals()
        r["dispersion"] = float("nan")
        if still:
            # multipliers of the still-water system are exp(-+ i z omega p)
            phase = z * omega * params.period
            expected = np.array([np.exp(-1j * phase), np.exp(1j * phase)])
            lam = analysis.multipliers
            r["dispersion"] = float(min(np.max(np.abs(lam - expected)), np.max(np.abs(lam - expected[::-1]))))
        rows += list(_multiplier_rows(z, cl, lambda _r: [omega]))
        doc = out_io.analysis_document(analysis, cl, r)
        doc.update(z=z, omega=omega)
        results.append(doc)
        res.append(r)
    return out_io.csv_text(MULTIPLIER_HEADER + ["omega"], rows), {"runs": results}, res


def run_graphene(cfg: RunConfig, threads: int):
    from .apps import GrapheneParams, band_scan

    g = cfg.graphene
    params = GrapheneParams(gamma=g.gamma, A0=g.A0, Omega=g.Omega, charge_ratio=g.charge_ratio)
    kx = np.linspace(g.kx[0], g.kx[1], int(g.kx[2]))
    ky = np.linspace(g.ky[0], g.ky[1], int(g.ky[2]))
    table = band_scan(params, kx, ky, cfg.grid.steps_per_period, cfg.grid.scheme, threads)
    s = np.mod(table[:, 2] + table[:, 3], g.Omega)
    chir = float(np.max(np.minimum(s, g.Omega - s))) if table.size else 0.0
    r = {"chirality": chir}
    doc = {"Omega": g.Omega, "A0": g.A0, "points": table.shape[0], "table": table, "residuals": r}
    return out_io.csv_text(["kx", "ky", "eps1", "eps2"], table.tolist()), {"runs": [doc]}, [r]


def run_picard(cfg: RunConfig, threads: int):
    p = cfg.picard
    rows, results, res = [], [], []
    for z in cfg.z_values:
        system = _system(cfg, z)
        if p.normalize:
            system, _ = trace_normalize(system)
        if p.interval is not None:
            interval = p.interval
        else:
            a = system.domain[0]
            interval = (a, a + (1.0 / (4.0 * abs(z)) if z != 0 else 1.0))
        u0 = _initial(cfg, system.dim)
        sol, history = picard_solve(system, u0, interval, p.max_iter, p.nodes)
        ref = integrate_vector(system, u0, sol.grid, cfg.grid.scheme)
        agree = float(np.max(np.linalg.norm(sol.samples - ref.samples, axis=1)))
        r = {"picard_agreement": agree, "contraction": max(history) if history else float("nan")}
        for k, ratio in enumerate(history, start=1):
            rows.append(_zcols(z) + [k, ratio])
        results.append({"z": z, "interval": interval, "iterations": len(history) + 1, "ratios": history, "residuals": r})
        res.append(r)
    return out_io.csv_text(["z_re", "z_im", "iteration", "ratio"], rows), {"runs": results}, res


PIPELINES = {
    "evolve": run_evolve,
    "analyze": run_analyze,
    "factorize": run_factorize,
    "stability": run_stability,
    "deroos": run_deroos,
    "waterwave": run_waterwave,
    "graphene-bands": run_graphene,
    "picard-verify": run_picard,
}


def aggregate(residual_list) -> dict[str, float]:
    """Worst finite value of each residual over a sweep; NaN when never applicable."""
    out: dict[str, float] = {}
    for r in residual_list:
        for k, v in r.items():
            v = float(v)
            if math.isnan(v):
                out.setdefault(k, v)
            elif k not in out or math.isnan(out[k]) or v > out[k]:
                out[k] = v
    return dict(sorted(out.items()))


def violations(residuals: dict, tolerances: dict) -> list[tuple[str, float, float]]:
    bad = []
    for k, v in residuals.items():
        if k in tolerances and not math.isnan(v) and v > tolerances[k]:
            bad.append((k, v, tolerances[k]))
    return bad


def run(cfg: RunConfig, threads: int = 1) -> tuple[str, list]:
    """Execute the configured pipeline; returns (output text, tolerance violations)."""
    csv, doc, res = PIPELINES[cfg.subcommand](cfg, threads)
    agg = aggregate(res)
    bad = violations(agg, cfg.tolerances)
    if cfg.output.format == "csv":
        return csv, bad
    document = {
        "subcommand": cfg.subcommand,
        "config": cfg.model_dump(mode="json"),
        "residuals": agg,
        "violations": [{"name": k, "value": v, "tolerance": t} for k, v, t in bad],
        **doc,
    }
    return out_io.document_text(document), bad


def _origin(exc: BaseException) -> str:
    tb = exc.__traceback__
    name = "canonsys"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("canonsys"):
            name = mod
        tb = tb.tb_next
    return name


def build_parser() -> argparse.ArgumentParser:
    tol = "\n".join(f"    {k}: {v!r}" for k, v in DEFAULT_TOLERANCES.items())
    epilog = (
        config_help()
        + "\n\nthe subcommand is taken from the config; a positional subcommand overrides it.\n"
        + "exit status: 0 ok, 1 strict tolerance violation, 2 config error, 3 pipeline error.\n"
        + "default tolerances:\n"
        + tol
    )
    ap = argparse.ArgumentParser(
        prog="canonsys",
        description="Periodic canonical systems: integration, monodromy, Floquet analysis and applications.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("subcommand", nargs="?", choices=sorted(PIPELINES), help="override the config's subcommand")
    ap.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
    ap.add_argument("--output", metavar="PATH", help="output file (default: output.path, else stdout)")
    ap.add_argument("--strict", action="store_true", help="exit 1 if any residual exceeds its tolerance")
    ap.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads for sweeps (default 1)")
    ap.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    ap.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        updates = {}
        if args.subcommand:
            updates["subcommand"] = args.subcommand
        if args.seed is not None:
            updates["seed"] = args.seed
        if updates:
            cfg = RunConfig.model_validate({**cfg.model_dump(mode="json"), **updates})
    except ConfigError as exc:
        print(f"canonsys.config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"canonsys.config: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"canonsys.config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(emit_config(cfg))
        return EXIT_OK
    if args.threads < 1:
        print("canonsys.cli: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, bad = run(cfg, args.threads)
    except ConfigError as exc:
        print(f"canonsys.config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CanonsysError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"{_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        if "CANONSYS_TRACEBACK" in os.environ:
            traceback.print_exc()
        return EXIT_PIPELINE
    path = args.output or cfg.output.path
    if path:
        out_io.write_text(path, text)
    else:
        sys.stdout.write(text)
    for k, v, t in bad:
        print(f"residual {k} = {v!r} exceeds tolerance {t!r}", file=sys.stderr)
    return EXIT_STRICT if (args.strict and bad) else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
