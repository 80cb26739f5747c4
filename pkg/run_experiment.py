#!/usr/bin/env python3
# Runs the bundled fixture experiment end to end.

import os
import sys
from typing import Optional

from secure_kgcomm.cli import main as cli_main
from secure_kgcomm.log_util import Fore

_DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'secure_kgcomm', 'data')
_DEFAULT_CONFIG = os.path.join(_DATA_DIR, 'experiment.toml')


def main(config: str, out: str, seed: Optional[int], log_level: str) -> int:
    argv = ['--log-level', log_level, 'run', '-c', config, '--out', out]
    if seed is not None:
        argv += ['--seed', str(seed)]
    code = cli_main(argv)
    if code == 0:
        # DFP sweep lands next to the report
        base, ext = os.path.splitext(out)
        code = cli_main(['--log-level', log_level, 'sweep-dfp', '-c', config, '--out', f'{base}_dfp{ext}'])
    return code


if __name__ == '__main__':
    print(f'{Fore.Cyan}{sys.executable} {Fore.Green}{sys.version}{Fore.Reset}')
    file = os.path.basename(__file__)
    print(f'use {Fore.Cyan}python {file} --seed 7{Fore.Reset} to rerun the bundled fixture with another seed')
    print(f'use {Fore.Cyan}secure-kgcomm sweep-bits -c {_DEFAULT_CONFIG}{Fore.Reset} for the bit length sweep\n')

    try:
        import click
        has_click = True
    except ImportError:
        has_click = False

    if has_click:
        @click.command()
        @click.option('-c', '--config', default=_DEFAULT_CONFIG, help='experiment TOML file')
        @click.option('-o', '--out', default='results/fixture_run.csv', help='report CSV path')
        @click.option('-s', '--seed', type=int, default=None, help='master seed override')
        @click.option('-l', '--log-level', default='info', help='debug, info, warning or error')
        def _wrap_function(config: str, out: str, seed: Optional[int], log_level: str):
            sys.exit(main(config, out, seed, log_level))
        _wrap_function()
    else:
        import argparse

        parser = argparse.ArgumentParser()
        parser.add_argument('-c', '--config', default=_DEFAULT_CONFIG, help='experiment TOML file')
        parser.add_argument('-o', '--out', default='results/fixture_run.csv', help='report CSV path')
        parser.add_argument('-s', '--seed', type=int, default=None, help='master seed override')
        parser.add_argument('-l', '--log-level', default='info', help='debug, info, warning or error')

        args = parser.parse_args()
        sys.exit(main(args.config, args.out, args.seed, args.log_level))
