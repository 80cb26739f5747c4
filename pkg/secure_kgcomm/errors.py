from typing import Any, Optional


class KgCommError(Exception):
    """Base class of every error raised by secure_kgcomm."""


class ConfigError(KgCommError, ValueError):
    pass


class EmptyCorpus(KgCommError, ValueError):
    pass


class ParseError(KgCommError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f'line {line}: {message}')
        self.line = line


class ValidationError(KgCommError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f'line {line}: {message}')
        self.line = line


class TopicModelError(KgCommError, ValueError):
    pass


class ClusteringError(KgCommError, ValueError):
    pass


class TaggerError(KgCommError, ValueError):
    pass


class EmbeddingError(KgCommError, ValueError):
    pass


class ZeroVector(KgCommError, ValueError):
    pass


class GraphError(KgCommError, ValueError):
    pass


class ConvergenceError(KgCommError):
    """
    Raised by pagerank when max_iters is reached.
    `last` holds the last iterate as a node -> score dict.
    """

    def __init__(self, message: str, last: Any = None):
        super().__init__(message)
        self.last = last


class FieldTooLong(KgCommError, ValueError):
    pass


class DecodeFailure(KgCommError):
    BAD_MAGIC = 'bad_magic'
    TRUNCATED = 'truncated'
    INVALID_UTF8 = 'invalid_utf8'

    def __init__(self, reason: str, detail: Optional[str] = None):
        super().__init__(f'{reason}: {detail}' if detail else reason)
        self.reason = reason


class ModulationError(KgCommError, ValueError):
    pass


class PacketError(KgCommError, ValueError):
    pass


class KeyFormatError(KgCommError, ValueError):
    pass


class DegenerateKey(KgCommError, ValueError):
    pass


class KeystreamExhausted(KgCommError):
    pass


class DeepFade(KgCommError):
    pass


class MetricDomainError(KgCommError, ValueError):
    pass
