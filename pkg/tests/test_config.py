import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canonsys.config import DEFAULT_TOLERANCES, RunConfig, build_coefficient, config_help, emit_config, parse_config
from canonsys.errors import ConfigError

SYSTEM = """\
system:
  kind: constant
  matrix: [[0.5, 0.0], [0.0, 0.5]]
  period: 6.283185307179586
"""


def test_minimal_defaults():
    cfg = parse_config("subcommand: analyze\n" + SYSTEM)
    assert cfg.z_values == [1.0]
    assert cfg.grid.steps_per_period == 1024 and cfg.grid.scheme == "magnus4"
    assert cfg.tolerances == DEFAULT_TOLERANCES
    assert cfg.output.format == "structured-document" and cfg.seed == 0
    assert cfg.tol_circle == 1e-7


@pytest.mark.parametrize(
    "text,expected",
    [
        ("z: 2.0", [2.0]),
        ("z: '1+1i'", [1 + 1j]),
        ("z: [[0.5, 1.0]]", [0.5 + 1j]),
        ("z: [0.5, 1.0]", [0.5, 1.0]),
        ("z: [1, '0.5-2i', [0, 3]]", [1.0, 0.5 - 2j, 3j]),
    ],
)
def test_z_forms(text, expected):
    cfg = parse_config(f"subcommand: analyze\n{SYSTEM}{text}\n")
    assert cfg.z_values == expected


@pytest.mark.parametrize(
    "extra,where",
    [
        ("grid: {steps_per_period: 8}", "grid.steps_per_period"),
        ("bogus: 1", "bogus"),
        ("tolerances: {not_a_residual: 1.0e-3}", "tolerances"),
        ("tolerances: {det_C: -1.0}", "tolerances"),
        ("z: []", "z"),
        ("output: {format: xml}", "output.format"),
    ],
)
def test_invalid_fields_name_location(extra, where):
    with pytest.raises(ConfigError) as info:
        parse_config(f"subcommand: analyze\n{SYSTEM}{extra}\n")
    assert where in str(info.value)


def test_missing_system_and_yaml_error():
    with pytest.raises(ConfigError, match="requires a 'system'"):
        parse_config("subcommand: evolve\n")
    parse_config("subcommand: graphene-bands\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("subcommand: analyze\nseed: a: b\n")
    with pytest.raises(ConfigError, match="mapping"):
        parse_config("- 1\n- 2\n")


def test_partial_tolerances_merge():
    cfg = parse_config("subcommand: analyze\n" + SYSTEM + "tolerances: {det_C: 1.0e-3}\n")
    assert cfg.tolerances["det_C"] == 1e-3
    assert cfg.tolerances["expK"] == DEFAULT_TOLERANCES["expK"]


def test_system_kinds_build():
    fourier = parse_config(
        "subcommand: analyze\nsystem:\n  kind: fourier\n  period: 2.0\n"
        "  constant: [[1.0, 0.0], [0.0, 1.0]]\n  sin_terms: [[[0.2, 0.0], [0.0, 0.1]]]\n"
    )
    coef = build_coefficient(fourier.system)
    assert coef.period == 2.0 and coef(0.5)[0, 0] == pytest.approx(1.2)
    pw = parse_config(
        "subcommand: analyze\nsystem:\n  kind: piecewise\n  breakpoints: [0.0, 0.5, 1.0]\n"
        "  matrices: [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]]\n  periodic: true\n"
    )
    assert build_coefficient(pw.system).period == 1.0
    with pytest.raises(ConfigError, match="system"):
        parse_config("subcommand: analyze\nsystem: {kind: fourier, period: 1.0}\n")


def test_help_lists_defaults():
    text = config_help()
    assert "steps_per_period: 1024" in text
    assert "det_drift" in text


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(
    sub=st.sampled_from(["analyze", "evolve", "stability", "factorize"]),
    zs=st.lists(st.tuples(finite, finite), min_size=1, max_size=4),
    sps=st.integers(16, 4096),
    periods=st.integers(1, 5),
    seed=st.integers(0, 2**31),
    tol=st.floats(1e-14, 1.0),
    fmt=st.sampled_from(["csv", "structured-document"]),
)
def test_emit_parse_round_trip(sub, zs, sps, periods, seed, tol, fmt):
    cfg = RunConfig.model_validate(
        {
            "subcommand": sub,
            "system": {"kind": "constant", "matrix": [[1.0, 0.1], [0.1, 2.0]], "period": 1.5},
            "z": [list(z) for z in zs],
            "grid": {"steps_per_period": sps, "periods": periods},
            "seed": seed,
            "tolerances": {"det_C": tol},
            "output": {"format": fmt},
        }
    )
    again = parse_config(emit_config(cfg))
    assert again == cfg
    assert emit_config(again) == emit_config(cfg)
    assert all(not math.isnan(v) for v in again.tolerances.values())
