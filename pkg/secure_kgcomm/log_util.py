#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Console/file logging for the experiment runner.

The library itself only talks to `secure_kgcomm.logger.logger`; applications call
config_logger() once and hand the configured logger to set_logger().
"""
import os
import sys
import time
import threading

try:
    import colorama
    colorama.init(autoreset=True)

    class Fore:
        Blue = colorama.Fore.LIGHTBLUE_EX
        Cyan = colorama.Fore.LIGHTCYAN_EX
        Green = colorama.Fore.LIGHTGREEN_EX
        Magenta = colorama.Fore.LIGHTMAGENTA_EX
        Red = colorama.Fore.LIGHTRED_EX
        Yellow = colorama.Fore.LIGHTYELLOW_EX
        Reset = colorama.Fore.RESET

except ImportError:

    class Fore:
        Blue = '\033[94m'
        Cyan = '\033[96m'
        Green = '\033[92m'
        Magenta = '\033[95m'
        Red = '\033[91m'
        Yellow = '\033[93m'
        Reset = '\033[39m'


try:
    from loguru import logger

    def config_logger(logger, log_level: str = 'info', log_dir: str = '', log_file: str = '',
                      backup_count: int = 15, log_to_stdout: bool = True):
        def add_thread_native_id(record):
            record['extra']['thread'] = threading.get_native_id()

        logger.configure(patcher=add_thread_native_id)
        if log_dir and log_dir != '.':
            os.makedirs(log_dir, exist_ok=True)
        log_level = log_level.upper()
        logger.remove()   # drop the default stderr sink
        file_format = '{time:YYYY-MM-DD HH:mm:ss.SSS} {level} T{extra[thread]} L{line} {function}: {message}'
        if log_to_stdout:
            console_format = ('<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> <lvl>{level}</lvl> '
                '{file},{line} <light-blue>T{extra[thread]}</light-blue> <light-cyan>{function}</light-cyan>'
                ': <lvl>{message}</lvl>')
            logger.add(sys.stdout, level=log_level, colorize=True, format=console_format)
        if log_dir and log_file:
            logger.add(f'{log_dir}/{log_file}', level=log_level, enqueue=True, rotation='00:00:00',
                       retention=backup_count, compression='zip', format=file_format)
        return logger

except ImportError:

    import zipfile
    import logging
    import logging.handlers

    logging.basicConfig(
        level=logging.INFO,
        format=f'%(asctime)s %(levelname)s %(filename)s,%(lineno)d {Fore.Blue}T%(thread)d{Fore.Reset} {Fore.Cyan}%(funcName)s{Fore.Reset}: %(message)s',
    )
    logger = logging.getLogger('secure_kgcomm')

    class ZipTimedRotatingFileHandler(logging.handlers.TimedRotatingFileHandler):
        def doRollover(self):
            if self.stream:
                self.stream.close()
                self.stream = None
            last_rollover = time.localtime(self.rolloverAt - self.interval)
            old_log_path = f'{self.baseFilename}.{time.strftime(self.suffix, last_rollover)}'
            super().doRollover()
            if not os.path.exists(old_log_path):
                return
            try:
                with zipfile.ZipFile(f'{old_log_path}.zip', 'w', zipfile.ZIP_DEFLATED) as zf:
                    zf.write(old_log_path, os.path.basename(old_log_path))
                os.remove(old_log_path)
            except OSError as ex:
                print(f'compress failed: {old_log_path}: {ex!r}')

    def config_logger(logger: logging.Logger, log_level: str = 'info', log_dir: str = '', log_file: str = '',
                      backup_count: int = 15, log_to_stdout: bool = True):
        if log_dir and log_dir != '.':
            os.makedirs(log_dir, exist_ok=True)
        logger.setLevel(logging._nameToLevel[log_level.upper()])
        logging.Formatter.default_msec_format = '%s.%03d'
        if not log_to_stdout:
            logger.propagate = False
        if log_dir and log_file:
            file_handler = ZipTimedRotatingFileHandler(f'{log_dir}/{log_file}', when='midnight',
                                                       interval=1, backupCount=backup_count)
            file_handler.setFormatter(logging.Formatter(
                '%(asctime)s %(levelname)s T%(thread)d L%(lineno)d %(funcName)s: %(message)s'))
            logger.addHandler(file_handler)
        return logger
