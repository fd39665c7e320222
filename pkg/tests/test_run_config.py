import copy
import json
from pathlib import Path

import pytest

from exceptions import ConfigError
from run_config import load_run_config, parse_run_config
from services import RunManifest
from utils import derive_seed

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def raw(name):
    return json.loads((CONFIGS / f"{name}.example.json").read_text())


@pytest.fixture
def tiv_raw():
    return raw("tiv")


def field_error(document, **kwargs):
    with pytest.raises(ConfigError) as excinfo:
        parse_run_config(document, **kwargs)
    return excinfo.value


class TestExampleConfigs:
    @pytest.mark.parametrize("name", ["friberg", "tiv", "expgrowth"])
    def test_examples_load(self, name):
        cfg = load_run_config(CONFIGS / f"{name}.example.json")
        assert cfg.model == name
        assert cfg.generation is not None
        assert cfg.fitting is not None

    def test_friberg(self):
        cfg = parse_run_config(raw("friberg"))
        spec = cfg.stat_model_spec()
        assert spec.random_names == ["k_prol", "k_tr", "N0", "EC50"]
        assert spec.fixed_effect_names == ["k_circ", "gamma"]
        assert spec.fixed_constants == {"Emax": 1.0}
        assert len(cfg.generation.design.obs_times) == 22
        assert [d.time for d in cfg.generation.design.doses] == [0.0, 21.0, 42.0, 63.0]
        assert cfg.generation.design.doses[0].target == 5
        assert cfg.equation_flags()["pk_literal"] is False
        assert cfg.fitting.bounds["EC50"] == (0.03, 0.6)

    def test_tiv(self, tiv_raw):
        cfg = parse_run_config(tiv_raw)
        assert cfg.build_model().observation_scale == "log10"
        assert len(cfg.generation.design.obs_times) == 16
        assert cfg.generation.design.noise.kind == "additive_on_log10"
        assert cfg.equation_flags() == {}
        assert cfg.appendix is None

    def test_expgrowth_appendix_defaults(self):
        cfg = parse_run_config(raw("expgrowth"))
        assert cfg.appendix.replicates == [5, 20, 50, 200]
        assert cfg.appendix.n_mc == 10_000
        assert cfg.appendix.box == ((0.01, 2.0), (0.01, 2.0))

    def test_odd_monte_carlo_size_is_rejected(self):
        document = raw("expgrowth")
        document["appendix"]["n_mc"] = 10_001
        assert field_error(document).field == "appendix.n_mc"

    def test_pk_literal_flag_is_reported(self):
        document = raw("friberg")
        document["pk"]["literal"] = True
        cfg = parse_run_config(document)
        assert cfg.build_model().pk_literal
        assert cfg.equation_flags()["pk_missing_plus_restored"] is False


class TestErrors:
    def test_errors_name_the_field(self, tiv_raw):
        tiv_raw["generation"]["population"][1]["spread"] = -1.0
        error = field_error(tiv_raw)
        assert error.field == "generation.population[1].spread"
        assert str(error) == "generation.population[1].spread: must be >= 0.0 (got -1.0)"
        assert error.exit_code == 2

    def test_unknown_model(self, tiv_raw):
        tiv_raw["model"] = "gompertz"
        assert field_error(tiv_raw).field == "model"

    def test_missing_model(self, tiv_raw):
        del tiv_raw["model"]
        assert field_error(tiv_raw).field == "model"

    def test_missing_generation_parameter(self, tiv_raw):
        del tiv_raw["generation"]["constants"]["d_T"]
        error = field_error(tiv_raw)
        assert error.field == "generation.population"
        assert "d_T" in str(error)

    def test_inverted_bounds(self, tiv_raw):
        tiv_raw["fitting"]["bounds"]["beta"] = [1.0, 0.5]
        assert field_error(tiv_raw).field == "fitting.bounds.beta"

    def test_bounds_for_unfitted_parameter(self, tiv_raw):
        tiv_raw["fitting"]["bounds"]["c"] = [1.0, 50.0]
        assert field_error(tiv_raw).field == "fitting.bounds.c"

    def test_bad_error_model(self, tiv_raw):
        tiv_raw["fitting"]["error_model"]["kind"] = "exponential"
        assert field_error(tiv_raw).field == "fitting.error_model"

    def test_location_and_value_are_exclusive(self, tiv_raw):
        tiv_raw["generation"]["population"][0]["location"] = 0.0
        assert field_error(tiv_raw).field == "generation.population[0]"

    def test_fitting_parameters_must_cover_model(self, tiv_raw):
        tiv_raw["fitting"]["parameters"].pop()
        del tiv_raw["fitting"]["bounds"]["V0"]
        assert field_error(tiv_raw).field == "fitting"

    def test_friberg_needs_pk(self):
        document = raw("friberg")
        del document["pk"]
        assert field_error(document).field == "pk"

    def test_alpha_range(self, tiv_raw):
        tiv_raw["analysis"]["alpha"] = 1.0
        assert field_error(tiv_raw).field == "analysis.alpha"

    def test_required_section(self, tiv_raw):
        cfg = parse_run_config(tiv_raw)
        with pytest.raises(ConfigError, match="appendix"):
            cfg.require("appendix")

    def test_unknown_keys_are_ignored(self, tiv_raw):
        tiv_raw["comment"] = "anything"
        tiv_raw["generation"]["extra"] = 1
        assert parse_run_config(tiv_raw).model == "tiv"

    def test_file_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "missing.json")
        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_run_config(broken)


class TestSeeds:
    def test_stage_seeds_derive_from_root(self, tiv_raw):
        cfg = parse_run_config(tiv_raw)
        assert cfg.generation.seed == derive_seed(tiv_raw["seed"], "generation")
        assert cfg.fitting.seed == derive_seed(tiv_raw["seed"], "fitting")
        assert cfg.fitting.saem.seed == cfg.fitting.seed
        assert cfg.generation.seed != cfg.fitting.seed

    def test_explicit_stage_seed_is_kept(self, tiv_raw):
        tiv_raw["generation"]["seed"] = 17
        assert parse_run_config(tiv_raw).generation.seed == 17

    def test_override_rederives_every_stage(self, tiv_raw):
        tiv_raw["generation"]["seed"] = 17
        cfg = parse_run_config(tiv_raw, seed_override=99)
        assert cfg.seed == 99
        assert cfg.generation.seed == derive_seed(99, "generation")
        assert cfg.seeds() == {
            "root": 99,
            "generation": derive_seed(99, "generation"),
            "fitting": derive_seed(99, "fitting"),
        }

    def test_seed_changes_hash(self, tiv_raw):
        assert parse_run_config(tiv_raw).config_hash() != parse_run_config(tiv_raw, seed_override=1).config_hash()


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["friberg", "tiv", "expgrowth"])
    def test_resolved_config_reparses_to_same_hash(self, name):
        cfg = parse_run_config(raw(name))
        again = parse_run_config(copy.deepcopy(cfg.to_dict()))
        assert again.config_hash() == cfg.config_hash()
        assert again.seeds() == cfg.seeds()

    def test_manifest_is_a_valid_config(self, tiv_raw, tmp_path):
        cfg = parse_run_config(tiv_raw)
        manifest = RunManifest.for_run("simulate", cfg, out="data")
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest.to_dict()))
        assert load_run_config(path).config_hash() == cfg.config_hash()
        assert manifest.seeds["generation"] == cfg.generation.seed

    def test_manifest_stage_timing(self, tiv_raw):
        manifest = RunManifest.for_run("fit", parse_run_config(tiv_raw))
        with manifest.stage("estimate"):
            pass
        assert "estimate" in manifest.timings
        assert manifest.to_dict()["command"] == "fit"

    def test_input_manifest_hash_depends_on_inputs(self):
        a = RunManifest.for_inputs("analyze", fits="x", alpha=0.05)
        b = RunManifest.for_inputs("analyze", fits="x", alpha=0.01)
        assert a.config_hash != b.config_hash
        assert a.config is None
