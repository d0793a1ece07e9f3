import math

import pytest

from fbepi.config import format_config, parse_config, parse_config_text
from fbepi.errors import ConfigError


def test_minimal_file_gets_defaults(ini_file):
    cfg = parse_config(ini_file)
    assert cfg.values["run"]["horizon"] == 200.0
    assert cfg.values["grid"]["window_factor"] == 20.0
    assert cfg.dt is None
    assert cfg.params.H.family == "monod" and cfg.params.J1.family == "quartic-bump"
    assert cfg.grid.h0 == pytest.approx(0.2)
    assert "spread_safety = 1.25" in format_config(cfg)


def test_effective_config_round_trips(ini_file, tmp_path):
    cfg = parse_config(ini_file)
    echo = tmp_path / "echo.ini"
    echo.write_text(format_config(cfg))
    again = parse_config(echo)
    assert again == cfg
    assert format_config(again) == format_config(cfg)


def test_round_trip_keeps_awkward_floats(ini_text):
    cfg = parse_config_text(ini_text.replace("p = 0.2", "p = 0.1234567890123456789") + "[run]\ndt = 0.01\n")
    again = parse_config_text(format_config(cfg))
    assert again.params.p == cfg.params.p
    assert again.dt == 0.01


def test_unknown_key_names_key_and_line(ini_text):
    text = ini_text.replace("rho = 0.5", "mu_rho = 0.5")
    with pytest.raises(ConfigError) as err:
        parse_config_text(text, "run.ini")
    assert "mu_rho" in str(err.value)
    assert err.value.line == text.splitlines().index("mu_rho = 0.5") + 1
    assert str(err.value).startswith(f"run.ini:{err.value.line}:")


def test_unknown_section(ini_text):
    with pytest.raises(ConfigError, match=r"unknown section \[solver\]"):
        parse_config_text(ini_text + "[solver]\nx = 1\n")


def test_missing_mandatory_key(ini_text):
    with pytest.raises(ConfigError, match="missing mandatory key 'dx'"):
        parse_config_text(ini_text.replace("dx = 0.05", ""))


def test_type_mismatch(ini_text):
    with pytest.raises(ConfigError, match="expected float") as err:
        parse_config_text(ini_text.replace("d1 = 1.0", "d1 = fast"))
    assert err.value.line == 2


def test_negative_dx_surfaces_grid_error(ini_text):
    text = ini_text.replace("dx = 0.05", "dx = -0.05")
    with pytest.raises(ConfigError, match="grid spacing must be positive") as err:
        parse_config_text(text)
    assert err.value.line == text.splitlines().index("dx = -0.05") + 1


def test_invalid_parameter_values(ini_text):
    with pytest.raises(ConfigError, match="a.positive"):
        parse_config_text(ini_text.replace("a_base = 1.0", "a_base = -1.0"))


def test_nan_dt_default_is_written(ini_file):
    cfg = parse_config(ini_file)
    assert "dt = nan" in format_config(cfg)
    assert math.isnan(parse_config_text(format_config(cfg)).values["run"]["dt"])


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.ini")
