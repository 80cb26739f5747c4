"""
Experiment configuration, read from TOML.

Every table maps onto one dataclass below; unknown tables or keys are
rejected, except under [metadata] which is recorded as given. Relative paths
are resolved against the directory of the config file.
"""
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, TypeVar, Union

from .chaoskey import DEFAULT_BURN_IN, KeyFormat
from .channel import CSI_PERFECT, FADING_NONE, ChannelConfig
from .errors import ConfigError
from .kgraph import DEFAULT_DAMPING, DEFAULT_SIM_THRESHOLD, DEFAULT_TOP_K
from .topics import TopicConfig

try:
    import tomllib  # python 3.11 introduced tomllib
except ImportError:
    import tomli as tomllib

PathLike = Union[str, Path]
T = TypeVar('T')


@dataclass(frozen=True)
class PathsConfig:
    corpus: Path = Path('corpus.txt')
    kb: Path = Path('kb.tsv')
    key: Path = Path('key.txt')
    pairs: Optional[Path] = None
    embeddings: Optional[Path] = None
    output: Path = Path('results.csv')


@dataclass(frozen=True)
class ChannelSweep:
    snr_db: Tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    fading: str = FADING_NONE
    fading_variance: float = 1.0
    csi: str = CSI_PERFECT

    def at(self, snr_db: float, seed: int) -> ChannelConfig:
        return ChannelConfig(snr_db, self.fading, self.fading_variance, seed, self.csi)


@dataclass(frozen=True)
class RunConfig:
    trials: int = 1
    master_seed: int = 0
    strategies: Tuple[str, ...] = ('no_key', 'random_key', 'diagonal_only')
    workers: int = 4
    encryption: bool = True


@dataclass(frozen=True)
class FrameConfig:
    block_N: int = 64
    per_packet_X: int = 32


@dataclass(frozen=True)
class TaggerConfig:
    epochs: int = 10
    learn_rate: float = 0.1
    l2: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class EmbeddingConfig:
    window: int = 2
    dimension: Optional[int] = None


@dataclass(frozen=True)
class ExtractionConfig:
    top_k: int = DEFAULT_TOP_K
    sim_threshold: float = DEFAULT_SIM_THRESHOLD
    damping: float = DEFAULT_DAMPING


@dataclass(frozen=True)
class DfpConfig:
    dep: Tuple[float, ...] = (0.3, 0.5, 0.7)
    freq: float = 1.0
    covert_rate: float = 1.0
    ratios: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.5, 0.7, 1.0)


@dataclass(frozen=True)
class SecurityConfig:
    delta: int = 128
    burn_in: int = DEFAULT_BURN_IN
    real_fields: int = 3
    mantissa_bits: int = 53
    burn_in_bits: int = 16
    offset_bits: int = 16

    @property
    def key_format(self) -> KeyFormat:
        return KeyFormat(self.real_fields, self.mantissa_bits, self.burn_in_bits, self.offset_bits)


@dataclass(frozen=True)
class ExperimentConfig:
    paths: PathsConfig = PathsConfig()
    channel: ChannelSweep = ChannelSweep()
    run: RunConfig = RunConfig()
    frame: FrameConfig = FrameConfig()
    topics: TopicConfig = TopicConfig()
    tagger: TaggerConfig = TaggerConfig()
    embeddings: EmbeddingConfig = EmbeddingConfig()
    extraction: ExtractionConfig = ExtractionConfig()
    dfp: DfpConfig = DfpConfig()
    security: SecurityConfig = SecurityConfig()
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.run.trials < 1:
            raise ConfigError(f'run.trials must be >= 1, got {self.run.trials}')
        if not self.channel.snr_db:
            raise ConfigError('channel.snr_db must not be empty')
        if not self.run.strategies:
            raise ConfigError('run.strategies must not be empty')
        if self.run.workers < 1:
            raise ConfigError(f'run.workers must be >= 1, got {self.run.workers}')
        if self.frame.block_N < 1 or self.frame.per_packet_X < 1:
            raise ConfigError('frame.block_N and frame.per_packet_X must be >= 1')
        if not self.dfp.dep:
            raise ConfigError('dfp.dep must not be empty')
        # surfaces bad channel settings at load time
        self.channel.at(self.channel.snr_db[0], 0)

    def with_overrides(self, seed: Optional[int] = None, out: Optional[PathLike] = None) -> 'ExperimentConfig':
        cfg = self
        if seed is not None:
            cfg = replace(cfg, run=replace(cfg.run, master_seed=seed))
        if out is not None:
            cfg = replace(cfg, paths=replace(cfg.paths, output=Path(out)))
        return cfg


_TABLES: Dict[str, Type] = {
    'paths': PathsConfig,
    'channel': ChannelSweep,
    'run': RunConfig,
    'frame': FrameConfig,
    'topics': TopicConfig,
    'tagger': TaggerConfig,
    'embeddings': EmbeddingConfig,
    'extraction': ExtractionConfig,
    'dfp': DfpConfig,
    'security': SecurityConfig,
}


def _build(cls: Type[T], table: str, values: Dict[str, Any]) -> T:
    if not isinstance(values, dict):
        raise ConfigError(f'[{table}] must be a table')
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f'[{table}] unknown keys: {", ".join(unknown)}')
    kwargs = {}
    for name, value in values.items():
        if isinstance(value, list):
            value = tuple(value)
        if table == 'paths':
            value = Path(value) if value else None
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as ex:
        raise ConfigError(f'[{table}] {ex}') from ex


def _resolve_paths(paths: PathsConfig, base: Path) -> PathsConfig:
    return replace(paths, **{f.name: base / getattr(paths, f.name) for f in fields(paths)
                             if getattr(paths, f.name) is not None})


def parse_config(data: Dict[str, Any], base_dir: PathLike = '.') -> ExperimentConfig:
    base = Path(base_dir)
    unknown = sorted(set(data) - set(_TABLES) - {'metadata'})
    if unknown:
        raise ConfigError(f'unknown tables: {", ".join(unknown)}')
    sections = {name: _build(cls, name, data[name]) for name, cls in _TABLES.items() if name in data}
    sections['paths'] = _resolve_paths(sections.get('paths', PathsConfig()), base)
    try:
        return ExperimentConfig(metadata=dict(data.get('metadata', {})), **sections)
    except (TypeError, ValueError) as ex:
        if isinstance(ex, ConfigError):
            raise
        raise ConfigError(str(ex)) from ex


def load_config(path: PathLike, seed: Optional[int] = None, out: Optional[PathLike] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, 'rb') as fin:
            data = tomllib.load(fin)
    except OSError as ex:
        raise ConfigError(f'cannot read config {path}: {ex.strerror}') from ex
    except tomllib.TOMLDecodeError as ex:
        raise ConfigError(f'{path}: {ex}') from ex
    return parse_config(data, path.parent).with_overrides(seed, out)
