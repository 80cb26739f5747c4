from typing import Any, Protocol


class LoggerLike(Protocol):
    def log(self, level: str, message: str, **kwargs: Any) -> None:
        ...

    def debug(self, message: str, **kwargs: Any) -> None:
        ...

    def info(self, message: str, **kwargs: Any) -> None:
        ...

    def warning(self, message: str, **kwargs: Any) -> None:
        ...

    def error(self, message: str, **kwargs: Any) -> None:
        ...

    def critical(self, message: str, **kwargs: Any) -> None:
        ...


_LEVELS = {'DEBUG': 10, 'INFO': 20, 'WARNING': 30, 'ERROR': 40, 'CRITICAL': 50}


class StdoutLogger:
    def __init__(self, level: str = 'INFO'):
        self.level = level.upper()

    def log(self, level: str, message: str) -> None:
        if _LEVELS.get(level, 0) >= _LEVELS.get(self.level, 0):
            print(level, message)

    def debug(self, message: str) -> None:
        self.log('DEBUG', message)

    def info(self, message: str) -> None:
        self.log('INFO', message)

    def warning(self, message: str) -> None:
        self.log('WARNING', message)

    def error(self, message: str) -> None:
        self.log('ERROR', message)

    def critical(self, message: str) -> None:
        self.log('CRITICAL', message)


class _LoggerProxy:
    """
    Every module holds a reference to this proxy, so set_logger() takes effect
    everywhere without re-importing.
    """

    def __init__(self, target: LoggerLike):
        self.target = target

    def __getattr__(self, name: str) -> Any:
        return getattr(self.target, name)


logger = _LoggerProxy(StdoutLogger())


def set_logger(new_logger: LoggerLike) -> None:
    logger.target = new_logger


def get_logger() -> LoggerLike:
    return logger.target
