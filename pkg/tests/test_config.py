import pytest

from dstgen.config import PipelineConfig
from dstgen.errors import ConfigError


def test_defaults_validate():
    PipelineConfig().validate()


def test_paper_scale_configuration_validates():
    config = PipelineConfig(mini_set_size=100, final_set_size=1000)
    config.validate()
    assert config.mini_set_size == 100
    assert config.final_set_size == 1000


def test_range_violations():
    with pytest.raises(ConfigError):
        PipelineConfig(mini_set_size=0).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(dedup_threshold=1.5).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(min_cluster_size=1).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(backend="carrier-pigeon").validate()
    with pytest.raises(ConfigError):
        PipelineConfig(workers=0).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(max_demonstrations=-1).validate()


def test_stage_model_keys_checked():
    PipelineConfig(stage_models={"qa_pairs": "gpt-4-0314"}).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(stage_models={"nonsense": "tag"}).validate()


def test_file_round_trip(tmp_path):
    config = PipelineConfig(
        mini_set_size=3,
        final_set_size=3,
        dialogues_per_scenario=2,
        seed=7,
        dedup_threshold=0.8,
        stage_models={"qa_pairs": "gpt-4-0314"},
        run_dir="some/run",
    )
    path = tmp_path / "pipeline.cfg"
    config.to_file(path)
    restored = PipelineConfig.from_file(path)
    assert restored == config


def test_file_comments_and_blank_lines(tmp_path):
    path = tmp_path / "pipeline.cfg"
    path.write_text(
        "# a comment\n"
        "\n"
        "seed = 9   # trailing comment\n"
        "model.dialogue = special-tag\n",
        encoding="utf-8",
    )
    config = PipelineConfig.from_file(path)
    assert config.seed == 9
    assert config.stage_models == {"dialogue": "special-tag"}


def test_file_unknown_key(tmp_path):
    path = tmp_path / "pipeline.cfg"
    path.write_text("no_such_option = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        PipelineConfig.from_file(path)


def test_file_bad_value(tmp_path):
    path = tmp_path / "pipeline.cfg"
    path.write_text("seed = not-a-number\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        PipelineConfig.from_file(path)


def test_env_overrides_file_values():
    config = PipelineConfig(seed=1, workers=1)
    config.apply_env({
        "DSTGEN_SEED": "42",
        "DSTGEN_WORKERS": "3",
        "DSTGEN_MODEL_QA_PAIRS": "gpt-4-0314",
        "UNRELATED": "ignored",
    })
    assert config.seed == 42
    assert config.workers == 3
    assert config.stage_models["qa_pairs"] == "gpt-4-0314"


def test_env_bad_value():
    with pytest.raises(ConfigError):
        PipelineConfig().apply_env({"DSTGEN_SEED": "elephant"})
