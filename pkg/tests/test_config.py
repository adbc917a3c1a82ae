import pytest

from semihartree.config import (
    CORRECTIONS_EPS_LIST,
    DEFAULT_EPS_LIST,
    ExperimentConfig,
    parse_config,
)
from semihartree.errors import ConfigError


MINIMAL = (b'{"phi":{"name":"cosine"},"U":{"name":"cosine","params":[1]},'
           b'"T":1,"eps_list":[0.32,0.16,0.08]}')


class TestParse:
    def test_minimal_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.q0 == 0.0
        assert cfg.p0 == 1.0
        assert cfg.mode == "physical"
        assert cfg.a0 == "standard-gaussian"
        assert cfg.eps_list == (0.32, 0.16, 0.08)
        assert cfg.mu_n == 512
        assert cfg.mu_halfwidth == 16.0

    def test_round_trips_all_fields(self):
        text = (b'{"a0":"standard-gaussian","phi":{"name":"quadratic",'
                b'"params":[1,-1]},"U":{"name":"harmonic","params":[1]},'
                b'"q0":0.5,"p0":2,"T":2,"eps_list":[0.1,0.05],"dt":0.0005,'
                b'"grid":{"mu_n":256,"mu_halfwidth":12},"mode":"rescaled"}')
        cfg = parse_config(text)
        assert cfg.phi_params == (1.0, -1.0)
        assert cfg.dt == 5e-4
        assert cfg.mu_n == 256
        assert cfg.mode == "rescaled"

    def test_malformed_json(self):
        with pytest.raises(ConfigError, match="malformed JSON"):
            parse_config(b"{not json")

    def test_non_utf8(self):
        with pytest.raises(ConfigError, match="UTF-8"):
            parse_config(b"\xff\xfe{}")

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config(b'{"phi":{"name":"cosine"},"seed":3}')

    def test_unknown_grid_key(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config(b'{"grid":{"nx":64}}')

    def test_increasing_eps_rejected(self):
        with pytest.raises(ConfigError, match="strictly decreasing"):
            parse_config(b'{"eps_list":[0.1, 0.2]}')

    def test_nonpositive_eps_rejected(self):
        with pytest.raises(ConfigError, match="positive"):
            parse_config(b'{"eps_list":[0.1, 0.0]}')

    def test_unknown_pair_name_lists_valid(self):
        with pytest.raises(ConfigError, match="valid names are"):
            parse_config(b'{"phi":{"name":"coulomb"}}')

    def test_unknown_mode(self):
        with pytest.raises(ConfigError, match="valid modes"):
            parse_config(b'{"mode":"wigner"}')


class TestDefaults:
    def test_default_eps_by_mode(self):
        assert ExperimentConfig().eps_list == DEFAULT_EPS_LIST
        assert ExperimentConfig(mode="rescaled").eps_list == DEFAULT_EPS_LIST
        assert ExperimentConfig(mode="corrections-1").eps_list \
            == CORRECTIONS_EPS_LIST

    def test_physical_dt_scales_with_sqrt_eps(self):
        cfg = ExperimentConfig()
        assert cfg.physical_dt(0.02) == pytest.approx(2e-4)
        assert cfg.physical_dt(0.08) == pytest.approx(4e-4)
        assert cfg.physical_dt(0.32) == pytest.approx(8e-4)

    def test_explicit_dt_wins(self):
        cfg = ExperimentConfig(dt=1e-4)
        assert cfg.physical_dt(0.32) == 1e-4
        assert cfg.mu_dt() == 1e-4

    def test_builders(self):
        cfg = parse_config(MINIMAL)
        assert cfg.pair().name == "cosine"
        assert cfg.external().name == "cosine"
        assert cfg.mu_grid().n == 512
        assert abs(cfg.initial_profile().samples[256]) > 0.1
