# python
"""
tests/test_config.py
Line-based run.conf parsing, schema validation, precedence and assembly.
"""
import pytest

from epblowup.config import DEFAULT_CONFIG, load_config, merge_config, parse_config_text, parse_value
from epblowup.errors import ConfigError
from epblowup.model import FamilyProfile


def test_parse_value_kinds() -> None:
    assert parse_value("3") == 3
    assert parse_value("-0.25") == -0.25
    assert parse_value("yes") is True
    assert parse_value("-1.0 0.3 41") == [-1.0, 0.3, 41]
    assert parse_value("G0, v0") == ["G0", "v0"]
    assert parse_value("gaussian a=0.5 sigma=1") == {"kind": "family", "family": "gaussian", "a": 0.5, "sigma": 1.0}
    assert parse_value("grid r=0,1,2 v=1,0.5,0") == {"kind": "grid", "r": [0.0, 1.0, 2.0], "v": [1.0, 0.5, 0.0]}


def test_parse_value_rejects_bad_profiles() -> None:
    with pytest.raises(ConfigError):
        parse_value("gaussian a=1 sigma")
    with pytest.raises(ConfigError):
        parse_value("gaussian a=1 sigma=wide")
    with pytest.raises(ConfigError):
        parse_value("1 two 3")


def test_parse_config_text_sections_and_comments() -> None:
    cfg = parse_config_text(
        """
        # leading comment
        version = 0.1
        [params]
        d = 4   # trailing comment
        k = 1
        c = 0
        [scan]
        axes = u0, v0
        [phase]
        seeds = 0.5 0
        """
    )
    assert cfg["version"] == "0.1"
    assert cfg["params"] == {"d": 4, "k": 1, "c": 0}
    assert cfg["scan"]["axes"] == ["u0", "v0"]
    assert cfg["phase"]["seeds"] == [[0.5, 0]]


@pytest.mark.parametrize(
    "text,line",
    [
        ("d = 3\n", 1),
        ("[params\nd = 3\n", 1),
        ("[params]\nd 3\n", 2),
        ("[params]\nd =\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, line) -> None:
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.line == line
    assert exc.value.exit_code == 1


def test_merge_config_keeps_unrelated_defaults() -> None:
    merged = merge_config(DEFAULT_CONFIG, {"params": {"d": 4}})
    assert merged["params"]["d"] == 4
    assert merged["params"]["k"] == DEFAULT_CONFIG["params"]["k"]
    assert DEFAULT_CONFIG["params"]["d"] == 3


def test_load_config_defaults() -> None:
    cfg = load_config()
    assert (cfg.params.d, cfg.params.k, cfg.params.c0) == (3, -1.0, 1.0)
    assert cfg.output.format == "csv"
    assert cfg.jobs == 1
    assert not cfg.has_profiles
    assert cfg.point().r0 == 1.0


def test_overrides_beat_file(write_conf) -> None:
    path = write_conf("[policy]\ntol = 1e-8\njobs = 2\n")
    cfg = load_config(path, overrides={"policy": {"tol": 1e-11}, "output": {}})
    assert cfg.policy.rtol == 1e-11
    assert cfg.jobs == 2
    assert cfg.source == str(path)


@pytest.mark.parametrize(
    "body,field",
    [
        ("[params]\nd = 3\nk = 1\nc = 1\nspin = 2\n", None),
        ("[params]\nd = 0\nk = 1\nc = 1\n", "params.d"),
        ("[output]\nformat = xml\n", "output.format"),
        ("[scan]\naxes = G0\n", "scan.axes"),
        ("[policy]\ntol = -1\n", "policy.tol"),
    ],
)
def test_schema_violations(write_conf, body, field) -> None:
    with pytest.raises(ConfigError) as exc:
        load_config(write_conf(body))
    if field is not None:
        assert exc.value.field == field


def test_model_validation_surfaces_as_config_error(write_conf) -> None:
    with pytest.raises(ConfigError):
        load_config(write_conf("[params]\nd = 3\nk = 0\nc = 1\n"))


def test_missing_file_is_config_error(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.conf")


def test_scan_spec_and_r_grid(write_conf) -> None:
    cfg = load_config(write_conf("[data]\nF0 = 0.1\n[scan]\naxes = G0, v0\nG0 = -1 0 5\nr = 1 3 3\n"))
    assert cfg.scan.axes == ("G0", "v0")
    assert list(cfg.scan.values("G0")) == pytest.approx([-1.0, -0.75, -0.5, -0.25, 0.0])
    assert list(cfg.scan.r_values()) == pytest.approx([0.0, 1.0, 2.0, 3.0])
    assert cfg.scan.fixed["F0"] == 0.1
    assert cfg.scan.fixed["r0"] == 1.0


def test_profile_data_derives_point(write_conf) -> None:
    cfg = load_config(write_conf("[data]\nr0 = 1\nF0 = gaussian a=1 sigma=1\nG0 = -0.2\n"))
    assert cfg.has_profiles
    assert isinstance(cfg.profile("F0"), FamilyProfile)
    ip = cfg.point()
    assert ip.u0 == pytest.approx(-2.0 * ip.F0)
    assert ip.v0 == 0.0


def test_density_generates_G0(write_conf) -> None:
    cfg = load_config(write_conf("[params]\nd = 3\nk = 1\nc = 0\n[data]\nn0 = constant a=1.5\n"))
    # uniform density: the enclosed field is n/d everywhere
    assert cfg.profile("G0").value(2.0) == pytest.approx(-0.5)
    assert cfg.point().v0 == pytest.approx(0.0, abs=1e-10)
