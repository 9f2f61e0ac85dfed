import numpy as np
import pytest

from fockdecay.config import (
    ConfigError,
    RunConfig,
    load_config,
    manifest_text,
    parse_config_text,
    validate,
)


class TestParse:
    def test_comments_and_blanks(self):
        raw = parse_config_text("""
            # a comment
            capacity = 4   # trailing comment

            n_particles = 1..4
        """)
        assert raw == {"capacity": "4", "n_particles": "1..4"}

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("capacity 4")


class TestValidate:
    def test_empty_config_gives_defaults(self):
        cfg = validate({})
        assert cfg.capacity == 8
        assert cfg.resolved_v0() == pytest.approx(64 * np.pi**2)
        assert cfg.resolved_dt() == pytest.approx(2e-5)
        assert cfg.particle_range() == [8]

    def test_dt_scales_inversely_with_depth(self):
        cfg = validate({"capacity": "12"})
        assert cfg.resolved_dt() == pytest.approx(2e-5 * 64 / 144)

    def test_particle_number_exceeds_capacity(self):
        with pytest.raises(ConfigError, match="exceeds capacity"):
            validate({"capacity": "8", "n_particles": "9"})

    def test_cut_outside_grid_reported(self):
        with pytest.raises(ConfigError, match="absorber"):
            validate({"cut": "40"})

    def test_errors_are_aggregated(self):
        with pytest.raises(ConfigError) as info:
            validate({"capacity": "8", "n_particles": "9", "cut": "40", "epsilon_tq": "-1"})
        text = str(info.value)
        assert "exceeds capacity" in text
        assert "absorber" in text
        assert "epsilon_tq" in text

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            validate({"not_a_key": "1"})

    def test_range_parsing(self):
        cfg = validate({"n_particles": "2..5"})
        assert cfg.particle_range() == [2, 3, 4, 5]

    def test_channels(self):
        cfg = validate({"channels": "P,S"})
        assert cfg.channel_set() == {"P", "S"}
        with pytest.raises(ConfigError, match="channels"):
            validate({"channels": "P,Q"})

    def test_energy_shift_values(self):
        assert validate({"energy_shift": "auto"}).resolved_energy_shift(
            np.array([-10.0, -2.0])
        ) == pytest.approx(-6.0)
        assert validate({"energy_shift": "-5.5"}).resolved_energy_shift(
            np.array([-10.0, -2.0])
        ) == pytest.approx(-5.5)
        with pytest.raises(ConfigError, match="energy_shift"):
            validate({"energy_shift": "sideways"})

    def test_alpha_parsing_checked(self):
        with pytest.raises(ConfigError, match="statistics"):
            validate({"alpha": "anyon"})


class TestManifest:
    def test_round_trip_is_identity(self, tmp_path):
        cfg = validate({"capacity": "4", "dt": "0.00013", "n_particles": "1..3"})
        text = manifest_text(cfg, {"t_end": 1.2345678901234567})
        path = tmp_path / "manifest.txt"
        path.write_text(text)
        cfg2 = load_config(str(path))
        assert cfg2.capacity == cfg.capacity
        assert cfg2.dt == cfg.dt
        assert cfg2.t_end == 1.2345678901234567   # repr round-trips exactly
        assert manifest_text(cfg2, {"t_end": cfg2.t_end}) == text
