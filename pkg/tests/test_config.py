import pytest

from fewatom.config import (PRESETS, ConfigError, RunConfig, build_config,
                            load_config, parse_pairs)
from fewatom.constants import c3_atomic_to_si


def test_defaults():
    cfg = load_config()
    assert cfg.bin_width == 0.1
    assert cfg.per_atom_rate == 10_000.0
    assert cfg.ensemble == 1
    assert cfg.b1 is None and cfg.b2 is None
    assert cfg.trap.r0 == 10e-6


def test_parse_pairs():
    text = """
    # comment line
    trap.r0_um = 12   # trailing comment
    sim.seed = 9
    """
    pairs = parse_pairs(text)
    assert pairs == {"trap.r0_um": "12", "sim.seed": "9"}


def test_parse_pairs_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_pairs("not a pair")
    with pytest.raises(ConfigError):
        parse_pairs("key = ")
    with pytest.raises(ConfigError):
        parse_pairs("a = 1\na = 2")


def test_unknown_key_hints_prefix():
    with pytest.raises(ConfigError) as err:
        build_config({"trap.bogus": "1"})
    assert "trap.r0_um" in str(err.value)


def test_unit_conversions():
    cfg = build_config({
        "trap.intensity_mw_cm2": "42",
        "trap.temperature_uk": "316",
        "trap.r0_um": "10",
        "shielding.repump_detuning_ghz": "9",
        "constants.c3_au": "12",
    })
    assert cfg.trap.intensity == pytest.approx(420.0)
    assert cfg.trap.temperature == pytest.approx(316e-6)
    assert cfg.trap.r0 == pytest.approx(10e-6)
    assert cfg.shielding.repump_detuning == pytest.approx(9e9)
    assert cfg.constants.c3 == pytest.approx(c3_atomic_to_si(12.0), rel=1e-12)


def test_gamma_mhz_key():
    cfg = build_config({"constants.gamma_mhz": "5.2"})
    assert cfg.constants.gamma == pytest.approx(2 * 3.141592653589793 * 5.2e6)


def test_bad_value_reports_key():
    with pytest.raises(ConfigError) as err:
        build_config({"sim.seed": "ten"})
    assert "sim.seed" in str(err.value)


def test_fig2_preset_rate_model():
    cfg = load_config(preset="fig2")
    model = cfg.rate_model()
    assert model.load_rate == pytest.approx(0.1403)
    assert model.bg_rate == pytest.approx(1.0 / 60.0)
    assert model.b1 == pytest.approx(0.004)
    assert model.b2 == pytest.approx(0.006)


def test_fig4_presets():
    for name, t_uk in (("fig4a", 316.0), ("fig4b", 506.0), ("fig4c", 705.0)):
        cfg = load_config(preset=name)
        assert cfg.trap.temperature == pytest.approx(t_uk * 1e-6)
        assert cfg.trap.depth_min == pytest.approx(0.045)
    assert load_config(preset="fig4a").trap.intensity == pytest.approx(420.0)
    with pytest.raises(ConfigError):
        load_config(preset="fig9")


def test_precedence_preset_file_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("trap.bg_lifetime_s = 45\nsim.seed = 3\n")
    cfg = load_config(path, preset="fig2", overrides={"sim.seed": "7"})
    # file beats preset, explicit override beats file
    assert cfg.trap.bg_lifetime == 45.0
    assert cfg.seed == 7
    assert cfg.trap.load_rate == pytest.approx(0.1403)  # untouched preset key
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_volume_cm3():
    cfg = load_config(preset="fig4a")
    assert cfg.volume_cm3() == pytest.approx(1.968701243215303e-9, rel=1e-12)


def test_composed_rate_model_uses_channels():
    # without explicit rates the model composes the channel Monte Carlo
    cfg = load_config(preset="fig4a")
    model = cfg.rate_model()
    assert model.load_rate == cfg.trap.load_rate
    assert model.b1 > 0.0
    assert model.b2 > 0.0
    v = cfg.volume_cm3()
    # betas divided by volume, pair channel halved per event
    assert model.b2 * 2.0 * v < 1e-9


def test_run_validation():
    with pytest.raises(ConfigError):
        build_config({"sim.ensemble": "0"})
    with pytest.raises(ConfigError):
        build_config({"trace.bin_width_s": "0"})
    with pytest.raises(ConfigError):
        build_config({"shield.s0_min": "5", "shield.s0_max": "2"})
    with pytest.raises(ConfigError):
        build_config({"rates.b1_per_s": "-1"})
