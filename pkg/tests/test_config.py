import warnings

import pytest

from bwalk.config import SCHEMA, echo_config, load_config, parse_config
from bwalk.errors import ConfigError

DENSITY = """
[experiment]
kind = density

[kernel]
d = 1
alpha = 1.0

[dynamics]
times = 0.5, 2.0

[numerics]
M = 4096
"""


def test_minimal_config_fills_defaults():
    c = parse_config(DENSITY)
    assert c.kind == "density"
    assert c.get("kernel", "R") == 64
    assert c.get("dynamics", "times") == (0.5, 2.0)
    assert c.get("dynamics", "nu") == 0.0
    assert not c.strict


def test_echo_is_a_fixed_point():
    c = parse_config(DENSITY)
    text = echo_config(c)
    again = parse_config(text)
    assert again == c
    assert echo_config(again) == text


def test_echo_lists_schema_order():
    text = echo_config(parse_config(DENSITY))
    sections = [ln for ln in text.splitlines() if ln.startswith("[")]
    assert sections == [f"[{s}]" for s in SCHEMA]


def test_alpha_out_of_range_message():
    with pytest.raises(ConfigError) as exc:
        parse_config(DENSITY.replace("alpha = 1.0", "alpha = 2.0"))
    assert any("α ∈ (0,2)" in v for v in exc.value.violations)


def test_all_violations_reported_together():
    bad = DENSITY.replace("alpha = 1.0", "alpha = -1").replace("M = 4096", "M = 1000")
    bad = bad.replace("d = 1", "d = 3")
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    assert len(exc.value.violations) >= 3


def test_missing_mandatory_keys():
    with pytest.raises(ConfigError) as exc:
        parse_config("[experiment]\nkind = density\n")
    msgs = " ".join(exc.value.violations)
    for key in ("kernel.d", "kernel.alpha", "dynamics.times", "numerics.M"):
        assert key in msgs


def test_negative_rate_rejected():
    with pytest.raises(ConfigError):
        parse_config(DENSITY.replace("[dynamics]", "[dynamics]\nnu = -1"))


def test_kind_mismatch_rejected():
    with pytest.raises(ConfigError):
        parse_config(DENSITY, kind="front")


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        parse_config(DENSITY.replace("kind = density", "kind = teleport"))


def test_unknown_key_warns_or_fails():
    text = DENSITY.replace("[kernel]", "[kernel]\ncolour = blue")
    with pytest.warns(UserWarning, match="kernel.colour"):
        c = parse_config(text)
    assert c.warnings == ("unknown key kernel.colour",)
    with pytest.raises(ConfigError):
        parse_config(text, strict=True)
    with pytest.raises(ConfigError):
        parse_config(text.replace("M = 4096", "M = 4096\nstrict = true"))


def test_unknown_section():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises(UserWarning):
            parse_config(DENSITY + "\n[extras]\nx = 1\n")


def test_window_smaller_than_kernel_table():
    with pytest.raises(ConfigError) as exc:
        parse_config(DENSITY.replace("M = 4096", "M = 64"))
    assert "2R+2" in " ".join(exc.value.violations)


def test_times_must_increase():
    with pytest.raises(ConfigError):
        parse_config(DENSITY.replace("times = 0.5, 2.0", "times = 2.0, 0.5"))


def test_syntax_error():
    with pytest.raises(ConfigError):
        parse_config("this is not ini")


def test_bad_value_types():
    with pytest.raises(ConfigError):
        parse_config(DENSITY.replace("M = 4096", "M = lots"))
    with pytest.raises(ConfigError):
        parse_config(DENSITY.replace("alpha = 1.0", "alpha = nan"))
    with pytest.raises(ConfigError):
        parse_config(DENSITY.replace("M = 4096", "M = 4096\nstrict = maybe"))


def test_profile_rules():
    with pytest.raises(ConfigError):
        parse_config(DENSITY.replace("alpha = 1.0", "alpha = 1.0\nprofile = 1, 2"))
    d2 = DENSITY.replace("d = 1", "d = 2").replace("M = 4096", "M = 256")
    ok = parse_config(d2.replace("alpha = 1.0", "alpha = 1.0\nprofile = 1, 2, 1, 2"))
    assert ok.get("kernel", "profile") == (1.0, 2.0, 1.0, 2.0)
    with pytest.raises(ConfigError):
        parse_config(d2.replace("alpha = 1.0", "alpha = 1.0\nprofile = 1, 2, 3, 4"))


def test_mc_requirements():
    mc = DENSITY.replace("kind = density", "kind = mc-validate")
    with pytest.raises(ConfigError) as exc:
        parse_config(mc)
    assert "mc.replicas" in " ".join(exc.value.violations)
    with pytest.raises(ConfigError):
        parse_config(mc + "\n[mc]\nreplicas = 10\nseed = 1\n")
    c = parse_config(mc + "\n[mc]\nreplicas = 100\nseed = 1\n")
    assert c.get("mc", "sites") == (0, 5, -5, 20, -20)


def test_front_and_intermittency_need_branching():
    front = DENSITY.replace("kind = density", "kind = front")
    with pytest.raises(ConfigError):
        parse_config(front)
    inter = DENSITY.replace("kind = density", "kind = intermittency").replace(
        "[dynamics]", "[dynamics]\nnu = 0.5")
    with pytest.raises(ConfigError):
        parse_config(inter)   # times must exceed 1 and there must be 3 of them


def test_overrides():
    c = parse_config(DENSITY).with_overrides(output="elsewhere", strict=True)
    assert c.get("experiment", "output") == "elsewhere" and c.strict


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.ini"))
    assert len(files) == 6
    for f in files:
        load_config(f, strict=True)
