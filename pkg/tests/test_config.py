from pathlib import Path

import pytest

from conftest import write_experiment
from secure_kgcomm.config import ExperimentConfig, load_config, parse_config
from secure_kgcomm.errors import ConfigError


def test_bundled_experiment(data_dir):
    cfg = load_config(data_dir / 'experiment.toml')
    assert cfg.paths.corpus == data_dir / 'corpus.txt'
    assert cfg.paths.output == data_dir / 'results' / 'fixture_run.csv'
    assert cfg.paths.embeddings is None
    assert cfg.channel.snr_db == (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    assert cfg.channel.fading == 'rayleigh'
    assert cfg.run.trials == 20
    assert cfg.run.strategies == ('no_key', 'random_key:7', 'diagonal_only:7')
    assert cfg.topics.num_topics == 5
    assert cfg.security.delta == 128
    assert cfg.metadata['bandwidth_hz'] == 45000


def test_defaults_fill_missing_tables():
    cfg = parse_config({}, '/data')
    assert cfg.paths.corpus == Path('/data/corpus.txt')
    assert cfg.paths.pairs is None
    assert cfg.frame.block_N == 64
    assert cfg.extraction.damping == 0.85
    assert cfg == ExperimentConfig(paths=cfg.paths)


def test_overrides(tmp_path):
    cfg = load_config(write_experiment(tmp_path), seed=99, out=tmp_path / 'other.csv')
    assert cfg.run.master_seed == 99
    assert cfg.paths.output == tmp_path / 'other.csv'
    assert cfg.run.trials == 2


@pytest.mark.parametrize('data', [
    {'chanel': {'snr_db': [10.0]}},
    {'run': {'trails': 3}},
    {'run': {'trials': 0}},
    {'run': {'workers': 0}},
    {'run': {'strategies': []}},
    {'channel': {'snr_db': []}},
    {'channel': {'fading': 'rician'}},
    {'frame': {'per_packet_X': 0}},
    {'dfp': {'dep': []}},
    {'topics': 'five'},
])
def test_rejected_configs(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_metadata_is_free_form():
    cfg = parse_config({'metadata': {'anything': [1, 2], 'note': 'x'}})
    assert cfg.metadata == {'anything': [1, 2], 'note': 'x'}


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'absent.toml')
    path = tmp_path / 'bad.toml'
    path.write_text('[run\ntrials = 2\n', encoding='utf-8')
    with pytest.raises(ConfigError):
        load_config(path)


def test_key_format_from_security_table():
    cfg = parse_config({'security': {'real_fields': 2}})
    assert cfg.security.key_format.real_fields == 2
