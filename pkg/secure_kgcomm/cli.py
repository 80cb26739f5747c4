"""
Command line entry point: `secure-kgcomm run|sweep-dfp|sweep-bits|keygen|kb-validate`.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
import sys
from pathlib import Path
from typing import List, Optional

import click

from .logger import set_logger
from .chaoskey import ChaosKey, DEFAULT_BURN_IN, save_key
from .config import load_config
from .errors import ConfigError, KgCommError
from .harness import (BIT_LENGTH_COLUMNS, DFP_COLUMNS, SUMMARY_COLUMNS, build_sender, run_pipeline,
                      summarize, sweep_bit_length, sweep_compression_dfp, write_csv)
from .kb import load_kb
from .log_util import Fore, config_logger
from .log_util import logger as base_logger

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _setup_logging(log_level: str, log_dir: str) -> None:
    configured = config_logger(base_logger, log_level=log_level, log_dir=log_dir,
                               log_file='secure_kgcomm.log' if log_dir else '')
    set_logger(configured)


def _with_suffix(path: Path, suffix: str) -> Path:
    return path.with_name(f'{path.stem}{suffix}{path.suffix}')


@click.group()
@click.option('--log-level', default='info', show_default=True, help='debug, info, warning or error')
@click.option('--log-dir', default='', help='also log to a daily rotated file in this directory')
def cli(log_level: str, log_dir: str):
    """Secure knowledge-graph semantic communication simulator."""
    _setup_logging(log_level, log_dir)


@cli.command()
@click.option('-c', '--config', 'config_path', required=True, type=click.Path(), help='experiment TOML file')
@click.option('--seed', type=int, default=None, help='master seed, overrides run.master_seed')
@click.option('--out', type=click.Path(), default=None, help='CSV path, overrides paths.output')
def run(config_path: str, seed: Optional[int], out: Optional[str]):
    """Run the SNR x trial x strategy experiment and write the CSV report."""
    cfg = load_config(config_path, seed, out)
    sender = build_sender(cfg)
    report = run_pipeline(cfg, sender)
    summary = summarize(report)
    write_csv(_with_suffix(cfg.paths.output, '_summary'), SUMMARY_COLUMNS, summary.rows)
    for row in summary.rows:
        click.echo(f'{Fore.Cyan}{row["snr_db"]:>6.1f} dB{Fore.Reset} {row["strategy"]:<14} '
                   f'legitimate {Fore.Green}{row["bleu_legitimate"] or 0:.3f}{Fore.Reset} '
                   f'eavesdropper {Fore.Red}{row["bleu_eavesdropper"] or 0:.3f}{Fore.Reset}')
    if summary.spearman is not None:
        click.echo(f'spearman(legitimate BLEU, SNR) = {Fore.Magenta}{summary.spearman:.3f}{Fore.Reset}')
    scores = sender.extraction_scores
    if scores is not None:
        click.echo(f'extraction vs reference triples: precision {scores.precision:.3f}, '
                   f'recall {scores.recall:.3f}, f1 {scores.f1:.3f}')
    click.echo(f'wrote {Fore.Green}{cfg.paths.output}{Fore.Reset}')


@cli.command('sweep-dfp')
@click.option('-c', '--config', 'config_path', required=True, type=click.Path(), help='experiment TOML file')
@click.option('--seed', type=int, default=None, help='master seed, overrides run.master_seed')
@click.option('--out', type=click.Path(), default=None, help='CSV path')
def sweep_dfp(config_path: str, seed: Optional[int], out: Optional[str]):
    """Detection failure probability over compression ratios and DEP values."""
    cfg = load_config(config_path, seed)
    path = Path(out) if out else _with_suffix(cfg.paths.output, '_dfp')
    write_csv(path, DFP_COLUMNS, sweep_compression_dfp(cfg, build_sender(cfg)))
    click.echo(f'wrote {Fore.Green}{path}{Fore.Reset}')


@cli.command('sweep-bits')
@click.option('-c', '--config', 'config_path', required=True, type=click.Path(), help='experiment TOML file')
@click.option('--out', type=click.Path(), default=None, help='CSV path')
def sweep_bits(config_path: str, out: Optional[str]):
    """Decryption bit length for every SNR of the sweep."""
    cfg = load_config(config_path)
    path = Path(out) if out else _with_suffix(cfg.paths.output, '_bits')
    write_csv(path, BIT_LENGTH_COLUMNS, sweep_bit_length(cfg))
    click.echo(f'wrote {Fore.Green}{path}{Fore.Reset}')


@cli.command()
@click.option('--seed', type=int, required=True, help='seed for the key generator')
@click.option('--out', type=click.Path(), required=True, help='key file to write')
@click.option('--burn-in', type=int, default=DEFAULT_BURN_IN, show_default=True)
def keygen(seed: int, out: str, burn_in: int):
    """Write a random chaos key file."""
    save_key(ChaosKey.random(seed, burn_in), out)
    click.echo(f'wrote key {Fore.Green}{out}{Fore.Reset}')


@cli.command('kb-validate')
@click.argument('path', type=click.Path())
def kb_validate(path: str):
    """Load a knowledge base file and report its size."""
    kb = load_kb(path)
    click.echo(f'{Fore.Green}ok{Fore.Reset}: {len(kb.entities)} entities, {len(kb.relations)} relations, '
               f'{len(kb.templates)} templates')


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name='secure-kgcomm', standalone_mode=False)
    except click.exceptions.Exit as ex:
        return ex.exit_code
    except click.UsageError as ex:
        ex.show()
        return EXIT_CONFIG
    except ConfigError as ex:
        click.echo(f'{Fore.Red}config error{Fore.Reset}: {ex}', err=True)
        return EXIT_CONFIG
    except (KgCommError, OSError) as ex:
        click.echo(f'{Fore.Red}error{Fore.Reset}: {ex}', err=True)
        return EXIT_RUNTIME
    except click.Abort:
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
