import pytest

from trendwatch.config import load_config, parse_config
from trendwatch.errors import ConfigError

MINIMAL = """
[run]
out_dir = "out"

[corpus]
input = "corpus.jsonl"
start = "2024-01-01"
end = "2024-01-10"

[embeddings]
provider = "precomputed-file"
location = "vectors.jsonl"
expected_dim = 16
"""


def write(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return path


def test_minimal_config_with_defaults(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert cfg.engine.merge_threshold == 0.7
    assert cfg.engine.decay_lambda == 0.01
    assert cfg.extraction.reduced_dim == 5
    assert cfg.extraction.min_cluster_size == 2
    assert cfg.extraction.min_samples == 1
    assert cfg.extraction.top_n_words == 10
    assert cfg.granularity_days == 1
    assert cfg.max_unit_chars == 2000
    assert cfg.embedding.normalize is True
    assert cfg.llm is None


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(ConfigError, match="sections"):
        load_config(write(tmp_path, MINIMAL + "\n[mystery]\nx = 1\n"))


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown keys"):
        load_config(write(tmp_path, MINIMAL + "\n[engine]\nwindoww = 5\n"))


def test_missing_required_key(tmp_path):
    broken = MINIMAL.replace('start = "2024-01-01"\n', "")
    with pytest.raises(ConfigError, match="start"):
        load_config(write(tmp_path, broken))


def test_merge_threshold_range(tmp_path):
    with pytest.raises(ConfigError, match="merge_threshold"):
        load_config(write(tmp_path, MINIMAL + "\n[engine]\nmerge_threshold = 1.4\n"))


def test_beta_range(tmp_path):
    bad = MINIMAL + '\n[[zeroshot]]\nname = "x"\ndescription = "y"\nbeta = 0.0\n'
    with pytest.raises(ConfigError, match="beta"):
        load_config(write(tmp_path, bad))


def test_duplicate_zeroshot_names(tmp_path):
    bad = MINIMAL + (
        '\n[[zeroshot]]\nname = "x"\ndescription = "a"\n'
        '\n[[zeroshot]]\nname = "x"\ndescription = "b"\n'
    )
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(write(tmp_path, bad))


def test_granularity_flows_into_engine_params(tmp_path):
    text = MINIMAL.replace('end = "2024-01-10"', 'end = "2024-01-15"\ngranularity_days = 7')
    cfg = load_config(write(tmp_path, text))
    assert cfg.engine.granularity_days == 7


def test_paths_resolved_relative_to_config(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert cfg.out_dir == tmp_path / "out"
    assert cfg.corpus_input == tmp_path / "corpus.jsonl"


def test_llm_section(tmp_path):
    text = MINIMAL + '\n[llm]\nendpoint = "http://localhost:9/chat"\nmodel = "m"\n'
    cfg = load_config(write(tmp_path, text))
    assert cfg.llm is not None
    assert cfg.llm.temperature == 0.1


def test_fingerprint_changes_with_params():
    raw = {
        "run": {"out_dir": "o"},
        "corpus": {"input": "c.jsonl", "start": "2024-01-01", "end": "2024-01-05"},
        "embeddings": {"provider": "precomputed-file", "location": "v.jsonl", "expected_dim": 4},
    }
    base = parse_config(dict(raw))
    changed = parse_config({**raw, "engine": {"merge_threshold": 0.8}})
    assert base.fingerprint() != changed.fingerprint()
    again = parse_config(dict(raw))
    assert base.fingerprint() == again.fingerprint()


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/run.toml")
