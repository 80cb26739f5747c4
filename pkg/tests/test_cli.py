import csv

import pytest

from conftest import DATA_DIR, TOY_KB_TEXT, write_experiment
from secure_kgcomm.chaoskey import ChaosKey, load_key
from secure_kgcomm.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from secure_kgcomm.harness import BIT_LENGTH_COLUMNS, DFP_COLUMNS, REPORT_COLUMNS, SUMMARY_COLUMNS
from secure_kgcomm.logger import StdoutLogger, get_logger, logger, set_logger


@pytest.fixture(autouse=True)
def restore_logger():
    previous = get_logger()
    yield
    set_logger(previous)


def header(path):
    with open(path, newline='', encoding='utf-8') as fin:
        return tuple(next(csv.reader(fin)))


def test_kb_validate(toy_kb_path, capsys):
    assert main(['kb-validate', str(toy_kb_path)]) == EXIT_OK
    assert '10 entities, 8 relations, 5 templates' in capsys.readouterr().out


def test_kb_validate_rejects_a_broken_file(tmp_path):
    path = tmp_path / 'broken.tsv'
    path.write_text(TOY_KB_TEXT + '#RELATION\nParis\tlocated_in\tAtlantis\n', encoding='utf-8')
    assert main(['kb-validate', str(path)]) == EXIT_RUNTIME
    assert main(['kb-validate', str(tmp_path / 'absent.tsv')]) == EXIT_RUNTIME


def test_keygen(tmp_path):
    path = tmp_path / 'key.txt'
    assert main(['keygen', '--seed', '3', '--out', str(path), '--burn-in', '200']) == EXIT_OK
    assert load_key(path) == ChaosKey.random(3, 200)


def test_sweep_bits(tmp_path):
    config = write_experiment(tmp_path)
    out = tmp_path / 'bits.csv'
    assert main(['sweep-bits', '-c', str(config), '--out', str(out)]) == EXIT_OK
    assert header(out) == BIT_LENGTH_COLUMNS
    assert main(['sweep-bits', '-c', str(config)]) == EXIT_OK
    assert header(tmp_path / 'report_bits.csv') == BIT_LENGTH_COLUMNS


def test_run_and_sweep_dfp(tmp_path, capsys):
    config = write_experiment(tmp_path, run='trials = 1\nstrategies = ["no_key"]\nworkers = 1\n',
                              channel='snr_db = [20.0, 30.0]\n')
    out = tmp_path / 'out' / 'run.csv'
    assert main(['--log-level', 'warning', 'run', '-c', str(config), '--seed', '5', '--out', str(out)]) == EXIT_OK
    assert header(out) == REPORT_COLUMNS
    assert header(tmp_path / 'out' / 'run_summary.csv') == SUMMARY_COLUMNS
    printed = capsys.readouterr().out
    assert 'spearman' in printed
    assert 'extraction vs reference triples' in printed
    assert main(['sweep-dfp', '-c', str(config)]) == EXIT_OK
    assert header(tmp_path / 'report_dfp.csv') == DFP_COLUMNS


def test_log_dir(tmp_path, toy_kb_path):
    log_dir = tmp_path / 'logs'
    assert main(['--log-dir', str(log_dir), 'kb-validate', str(toy_kb_path)]) == EXIT_OK
    assert log_dir.is_dir()


@pytest.mark.parametrize('argv', [
    ['bogus'],
    ['run'],
    ['keygen', '--seed', 'x', '--out', 'k.txt'],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_CONFIG


def test_config_errors(tmp_path):
    assert main(['run', '-c', str(tmp_path / 'absent.toml')]) == EXIT_CONFIG
    config = write_experiment(tmp_path, frame='block_N = 0\n')
    assert main(['sweep-bits', '-c', str(config)]) == EXIT_CONFIG


@pytest.mark.parametrize('command', ['run', 'sweep-dfp'])
def test_missing_corpus_is_a_config_error(tmp_path, capsys, command):
    paths = (f'corpus = "{(tmp_path / "absent.txt").as_posix()}"\n'
             f'kb = "{(DATA_DIR / "kb.tsv").as_posix()}"\n'
             f'key = "{(DATA_DIR / "key.txt").as_posix()}"\n'
             f'output = "{(tmp_path / "report.csv").as_posix()}"\n')
    config = write_experiment(tmp_path, paths=paths)
    assert main([command, '-c', str(config)]) == EXIT_CONFIG
    assert 'cannot read corpus' in capsys.readouterr().err


def test_logger_proxy(capsys):
    set_logger(StdoutLogger('warning'))
    logger.info('hidden')
    logger.warning('shown')
    assert capsys.readouterr().out == 'WARNING shown\n'
