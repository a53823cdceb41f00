"""Run configuration: a single YAML document validated against a strict schema.

Unknown keys are rejected everywhere.  ``emit_config`` writes the fully
resolved configuration (all defaults filled in) and ``parse_config`` reads it
back to an equal :class:`RunConfig`.
"""

from __future__ import annotations

import math
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

SUBCOMMANDS = (
    "evolve",
    "analyze",
    "factorize",
    "stability",
    "deroos",
    "waterwave",
    "graphene-bands",
    "picard-verify",
)

# residual name -> default bound
DEFAULT_TOLERANCES = {
    "multiplier_product": 1e-7,
    "det_C": 1e-7,
    "reciprocal_pairing": 1e-6,
    "monodromy_symplectic": 1e-7,
    "expK": 1e-7,
    "exponent_consistency": 1e-10,
    "det_drift": 1e-7,
    "symplectic_drift": 1e-7,
    "translation_identity": 1e-6,
    "reconstruction": 1e-6,
    "U_periodicity": 1e-6,
    "U_symplectic": 1e-6,
    "constant_reduction": 1e-6,
    "quasi_periodicity": 1e-6,
    "v_periodicity": 1e-6,
    "picard_agreement": 1e-7,
    "contraction": 0.5 + 1e-9,
    "eigen_drift": 1e-6,
    "gauge_periodicity": 1e-5,
    "dispersion": 1e-7,
    "integral_identity": 1e-6,
    "chirality": 1e-7,
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _complex_pair(v):
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return (float(v[0]), float(v[1]))
    if isinstance(v, bool):
        raise ValueError("z must be a number, a complex string or [re, im]")
    if isinstance(v, (int, float)):
        return (float(v), 0.0)
    if isinstance(v, str):
        try:
            c = complex(v.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ValueError(f"cannot interpret {v!r} as a complex number") from None
        return (c.real, c.imag)
    raise ValueError(f"cannot interpret {v!r} as a complex number")


class SeriesSpec(_Strict):
    """Truncated Fourier series: constant term plus cosine/sine amplitudes per harmonic."""

    a0: float | list[float] = 0.0
    cos: list[float | list[float]] = Field(default_factory=list)
    sin: list[float | list[float]] = Field(default_factory=list)


class SystemSpec(_Strict):
    """Coefficient H(t) of the canonical system."""

    kind: Literal["constant", "piecewise", "fourier"]
    matrix: Optional[list[list[float]]] = Field(None, description="constant kind: the 2N x 2N matrix")
    period: Optional[float] = Field(None, description="period p (required for fourier, optional for constant)")
    breakpoints: Optional[list[float]] = Field(None, description="piecewise kind: mesh b_0 < ... < b_m")
    matrices: Optional[list[list[list[float]]]] = Field(None, description="piecewise kind: one matrix per cell")
    periodic: bool = Field(False, description="piecewise kind: mesh spans one period")
    constant: Optional[list[list[float]]] = Field(None, description="fourier kind: constant term")
    cos_terms: list[list[list[float]]] = Field(default_factory=list)
    sin_terms: list[list[list[float]]] = Field(default_factory=list)
    domain: Optional[tuple[float, float]] = None

    @model_validator(mode="after")
    def _required(self):
        need = {"constant": ["matrix"], "piecewise": ["breakpoints", "matrices"], "fourier": ["constant", "period"]}[self.kind]
        missing = [f for f in need if getattr(self, f) is None]
        if missing:
            raise ValueError(f"kind {self.kind!r} requires field(s): {', '.join(missing)}")
        if self.period is not None and not self.period > 0:
            raise ValueError("period must be positive")
        return self


class GridSpec(_Strict):
    steps_per_period: int = Field(1024, ge=16, description="fixed steps per period (>= 16)")
    periods: int = Field(2, ge=1, description="periods integrated by evolve and factorize")
    steps: int = Field(1024, ge=1, description="total steps for aperiodic evolve")
    scheme: Literal["magnus4", "midpoint"] = "magnus4"


class OutputSpec(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "structured-document"] = "structured-document"


class PicardSpec(_Strict):
    interval: Optional[tuple[float, float]] = Field(None, description="default [t0, t0 + 1/(4|z|)]")
    max_iter: int = Field(200, ge=1)
    nodes: int = Field(4097, ge=3)
    normalize: bool = Field(True, description="trace-normalize the system before iterating")


class DeRoosSpec(_Strict):
    period: float = 2.0
    theta: float = 8.54
    k1: SeriesSpec = SeriesSpec(a0=1.0, cos=[0.2])
    k2: SeriesSpec = SeriesSpec(a0=1.5, sin=[0.2])
    m1: SeriesSpec = SeriesSpec(a0=0.5, sin=[0.05])
    m2: SeriesSpec = SeriesSpec(a0=0.6, cos=[0.05])


class WaterWaveSpec(_Strict):
    g: float = 9.81
    sigma: float = 0.0
    h: float = 1.0
    k_vec: tuple[float, float] = (1.0, 0.0)
    period: float = 1.0
    c: SeriesSpec = SeriesSpec(a0=[0.0, 0.0])


class GrapheneSpec(_Strict):
    gamma: float = 1.0
    A0: float = 0.0
    Omega: float = Field(10.0, gt=0)
    charge_ratio: float = 1.0
    kx: tuple[float, float, int] = (-math.pi, math.pi, 8)
    ky: tuple[float, float, int] = (-math.pi, math.pi, 8)


class RunConfig(_Strict):
    subcommand: Literal[
        "evolve", "analyze", "factorize", "stability", "deroos", "waterwave", "graphene-bands", "picard-verify"
    ]
    system: Optional[SystemSpec] = None
    z: list[tuple[float, float]] = Field(default_factory=lambda: [(1.0, 0.0)], description="one value or a sweep list")
    initial: Optional[list[float] | Literal["random"]] = Field(None, description="evolve/picard start vector (default e_1)")
    grid: GridSpec = GridSpec()
    tolerances: dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    tol_circle: float = Field(1e-7, gt=0)
    output: OutputSpec = OutputSpec()
    seed: int = 0
    picard: PicardSpec = PicardSpec()
    deroos: DeRoosSpec = DeRoosSpec()
    waterwave: WaterWaveSpec = WaterWaveSpec()
    graphene: GrapheneSpec = GrapheneSpec()

    @field_validator("z", mode="before")
    @classmethod
    def _z(cls, v):
        # a list is always a sweep; a single complex value is a string or a nested [re, im]
        if isinstance(v, (list, tuple)):
            if not v:
                raise ValueError("z sweep must not be empty")
            return [_complex_pair(x) for x in v]
        return [_complex_pair(v)]

    @field_validator("tolerances", mode="before")
    @classmethod
    def _tolerances(cls, v):
        if not isinstance(v, dict):
            raise ValueError("tolerances must be a mapping")
        unknown = sorted(set(v) - set(DEFAULT_TOLERANCES))
        if unknown:
            raise ValueError(f"unknown tolerance name(s): {', '.join(unknown)}")
        merged = dict(DEFAULT_TOLERANCES)
        merged.update(v)
        for k, x in merged.items():
            if not isinstance(x, (int, float)) or not x > 0:
                raise ValueError(f"tolerance {k!r} must be a positive number")
        return {k: float(x) for k, x in merged.items()}

    @model_validator(mode="after")
    def _needs_system(self):
        if self.subcommand in ("evolve", "analyze", "factorize", "stability", "picard-verify") and self.system is None:
            raise ValueError(f"subcommand {self.subcommand!r} requires a 'system' section")
        return self

    @property
    def z_values(self) -> list[complex]:
        return [complex(re, im) for re, im in self.z]


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def parse_config(text: str) -> RunConfig:
    """Parse YAML text into a validated :class:`RunConfig`.

    Raises :class:`ConfigError` with line information for YAML syntax errors
    and dotted field locations for schema errors.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"YAML parse error{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc


def emit_config(cfg: RunConfig) -> str:
    """Fully resolved YAML for ``cfg``; ``parse_config(emit_config(cfg)) == cfg``."""
    data = cfg.model_dump(mode="json")
    return yaml.safe_dump(data, sort_keys=True, default_flow_style=None)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_help() -> str:
    """Defaults of every section, for ``--help``."""
    lines = ["configuration keys and defaults:"]
    for name, field in RunConfig.model_fields.items():
        default = field.get_default(call_default_factory=True)
        if isinstance(default, BaseModel):
            lines.append(f"  {name}:")
            for sub, val in default.model_dump(mode="json").items():
                lines.append(f"    {sub}: {val}")
        elif name == "tolerances":
            lines.append("  tolerances:")
            for k, v in default.items():
                lines.append(f"    {k}: {v!r}")
        elif default is not None or name != "system":
            lines.append(f"  {name}: {default}")
    lines.append("  system: {kind: constant|piecewise|fourier, ...} (required for evolve, analyze, factorize, stability, picard-verify)")
    return "\n".join(lines)


def build_coefficient(spec: SystemSpec):
    from .system import ConstantCoefficient, FourierCoefficient, PiecewiseConstantCoefficient

    if spec.kind == "constant":
        return ConstantCoefficient(np.array(spec.matrix, dtype=float), period=spec.period)
    if spec.kind == "piecewise":
        return PiecewiseConstantCoefficient(spec.breakpoints, np.array(spec.matrices, dtype=float), periodic=spec.periodic)
    return FourierCoefficient(
        np.array(spec.constant, dtype=float),
        spec.period,
        [np.array(c, dtype=float) for c in spec.cos_terms],
        [np.array(s, dtype=float) for s in spec.sin_terms],
    )
