import pytest

from snodri.config import DEFAULTS, PipelineConfig, apply_overrides, render_toml, stage_seed
from snodri.errors import ConfigError
from snodri.timeseries import MonthStamp

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

BASE = {"inputs": {"basins": ["b.csv"]}, "split": {"train_end": "2000-12"}}


def cfg(**over):
    doc = apply_overrides(BASE, [f"{k.replace('__', '.')}={v}" for k, v in over.items()])
    return PipelineConfig.from_dict(doc, "/data")


class TestLoading:
    def test_defaults_filled(self):
        c = cfg()
        assert c.seed == 0 and c.doc["spi"]["timescales"] == DEFAULTS["spi"]["timescales"]
        assert c.train_window == (None, MonthStamp(2000, 12))
        assert str(c.basin_paths[0]) == "/data/b.csv" and c.index_basin == "b"

    def test_overrides_parse_toml_literals(self):
        c = cfg(seed="7", features__top_k="4", spi__timescales="[3, 6]", split__train_start='"1990-01"')
        assert c.seed == 7 and c.doc["features"]["top_k"] == 4
        assert c.doc["spi"]["timescales"] == [3, 6]
        assert c.train_window[0] == MonthStamp(1990, 1)

    def test_bare_string_override(self):
        assert cfg(index__standardization="global").doc["index"]["standardization"] == "global"

    def test_load_file(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text(render_toml(BASE))
        c = PipelineConfig.load(p, ["seed=3"])
        assert c.seed == 3 and c.base_dir == tmp_path

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            PipelineConfig.load(tmp_path / "none.toml")

    def test_bad_toml(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("seed = = 1")
        with pytest.raises(ConfigError):
            PipelineConfig.load(p)

    @pytest.mark.parametrize("doc", [
        {"inputs": {"basins": ["b.csv"]}, "split": {"train_end": ""}},
        {"inputs": {"basins": []}, "split": {"train_end": "2000-12"}},
        {**BASE, "bogus": 1},
        {**BASE, "spi": {"timescales": [0]}},
        {**BASE, "spi": {"timescales": []}},
        {**BASE, "index": {"standardization": "none"}},
        {**BASE, "inputs": {"basins": ["b.csv"], "missing_policy": "fill"}},
        {**BASE, "inputs": {"basins": ["b.csv"], "aggregation": {"P": "max"}}},
        {"inputs": {"basins": ["b.csv"]}, "split": {"train_start": "2001-01", "train_end": "2000-12"}},
        {"inputs": {"basins": ["b.csv"]}, "split": {"train_end": "2000/12"}},
        {**BASE, "evaluate": {"event_windows": [["2000-01"]]}},
        {**BASE, "encoder": {"epochs": 0}},
        {**BASE, "split": "2000"},
    ])
    def test_rejected(self, doc):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict(doc)

    def test_override_must_be_key_value(self):
        with pytest.raises(ConfigError):
            apply_overrides(BASE, ["seed"])


class TestIdentity:
    def test_hash_stable(self):
        assert cfg().hash == cfg().hash and len(cfg().hash) == 12

    def test_hash_ignores_output_dir(self):
        assert cfg(output_dir='"elsewhere"').hash == cfg().hash

    def test_hash_tracks_settings(self):
        assert cfg(seed="1").hash != cfg().hash
        assert cfg(features__top_k="4").hash != cfg().hash

    def test_render_round_trip(self):
        doc = cfg(evaluate__event_windows='[["1999-12", "2000-04"]]').doc
        assert tomllib.loads(render_toml(doc)) == doc

    def test_stage_seeds(self):
        a = stage_seed(0, "train")
        assert a == stage_seed(0, "train") and 0 <= a < 2**63
        assert len({stage_seed(s, n) for s in range(5) for n in ("train", "select-features")}) == 10

    def test_typed_views(self):
        c = cfg(features__features_per_split="0", seed="5")
        assert c.forest_hyperparams(1).features_per_split is None
        assert c.train_config.seed == stage_seed(5, "train")
