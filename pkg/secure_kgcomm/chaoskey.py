"""
Chaotic keystreams from the 2D Logistic-Sine coupling map

    x' = sin(pi * (4 t x (1 - x) + (1 - t) sin(pi y)))
    y' = sin(pi * (4 t y (1 - y) + (1 - t) sin(pi x')))

sin(pi * .) is evaluated by a fixed polynomial so that sender and receiver
produce bit-identical orbits whatever the platform libm.

The orbit does not start at (x0, y0) itself: every bit of the key and a
per-frame nonce is hashed into the start point, so keys one ULP apart begin
on unrelated orbits and frames under one key never share a keystream.
"""
import hashlib
import math
import struct
import threading
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from .errors import DegenerateKey, KeyFormatError, KeystreamExhausted
from .logger import logger

PathLike = Union[str, Path]

DEFAULT_BURN_IN = 1000
TAU_PER_PACKET = 9
MIN_AMPLITUDE = 1e-9
_DEGENERATE_EPS = 1e-15
_ALPHA_EPS = 1e-9
_ORBIT_CACHE_SIZE = 64

# Taylor coefficients of sin(t) up to t**19, highest order first
_SIN_COEFFS = tuple((-1) ** k / math.factorial(2 * k + 1) for k in range(9, -1, -1))


def sin_pi(x: float) -> float:
    r = x - 2.0 * math.floor(x / 2.0 + 0.5)   # [-1, 1)
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    t = math.pi * r
    t2 = t * t
    acc = 0.0
    for c in _SIN_COEFFS:
        acc = acc * t2 + c
    return acc * t


def lscm_step(x: float, y: float, theta: float) -> Tuple[float, float]:
    x_next = sin_pi(4.0 * theta * x * (1.0 - x) + (1.0 - theta) * sin_pi(y))
    y_next = sin_pi(4.0 * theta * y * (1.0 - y) + (1.0 - theta) * sin_pi(x_next))
    return x_next, y_next


@dataclass(frozen=True)
class ChaosKey:
    x0: float
    y0: float
    theta: float
    burn_in: int = DEFAULT_BURN_IN
    varpi: float = 1.0

    def __post_init__(self):
        for name in ('x0', 'y0', 'theta'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 < value < 1.0):
                raise KeyFormatError(f'{name} must lie strictly inside (0, 1), got {value!r}')
        if not isinstance(self.burn_in, int) or not 0 <= self.burn_in < 1 << 16:
            raise KeyFormatError(f'burn_in must be an integer in [0, 65536), got {self.burn_in!r}')
        if not (math.isfinite(self.varpi) and self.varpi > 0):
            raise KeyFormatError(f'varpi must be positive, got {self.varpi!r}')

    @property
    def map_param(self) -> float:
        return self.theta

    @property
    def amplitude_offset(self) -> float:
        return self.varpi

    @classmethod
    def random(cls, seed: int, burn_in: int = DEFAULT_BURN_IN) -> 'ChaosKey':
        rng = np.random.default_rng(seed)
        x0, y0, theta = (int(v) / 2.0 ** 53 for v in rng.integers(1, 1 << 53, size=3))
        varpi = 1.0 + int(rng.integers(0, 1 << 16)) / 2.0 ** 16
        return cls(x0, y0, theta, burn_in, varpi)

    def perturbed(self, ulps: int = 1, field: str = 'x0') -> 'ChaosKey':
        """The same key with one real field moved by `ulps` units in the last place."""
        value = getattr(self, field)
        toward = 1.0 if ulps > 0 else 0.0
        for _ in range(abs(ulps)):
            value = float(np.nextafter(value, toward))
        params = self.as_dict()
        params[field] = value
        return ChaosKey(**params)

    def as_dict(self) -> Dict[str, Union[float, int]]:
        return {'x0': self.x0, 'y0': self.y0, 'theta': self.theta, 'burn_in': self.burn_in, 'varpi': self.varpi}


@dataclass(frozen=True)
class KeyFormat:
    real_fields: int = 3
    mantissa_bits: int = 53
    burn_in_bits: int = 16
    offset_bits: int = 16


def keyspace_bits(key_format: KeyFormat = KeyFormat()) -> int:
    return key_format.real_fields * key_format.mantissa_bits + key_format.burn_in_bits + key_format.offset_bits


@dataclass(frozen=True, eq=False)
class Keystream:
    f: np.ndarray
    zeta: np.ndarray
    tau: np.ndarray

    @property
    def num_symbols(self) -> int:
        return self.f.size

    @property
    def num_packets(self) -> int:
        return self.tau.size // TAU_PER_PACKET

    def tau_for(self, packet: int) -> np.ndarray:
        if packet >= self.num_packets:
            raise KeystreamExhausted(f'keystream covers {self.num_packets} packets, asked for packet {packet}')
        return self.tau[TAU_PER_PACKET * packet:TAU_PER_PACKET * (packet + 1)]

    def equals(self, other: 'Keystream') -> bool:
        return (np.array_equal(self.f, other.f) and np.array_equal(self.zeta, other.zeta)
                and np.array_equal(self.tau, other.tau))


_NONCE_MASK = (1 << 64) - 1
_UNIT = 2.0 ** -53


def start_state(key: ChaosKey, nonce: int = 0) -> Tuple[float, float]:
    """Orbit start point: (x0, y0) shifted by a BLAKE2b digest of the exact key bits and the nonce."""
    packed = struct.pack('>dddHdQ', key.x0, key.y0, key.theta, key.burn_in, key.varpi, nonce & _NONCE_MASK)
    digest = hashlib.blake2b(packed, digest_size=16, person=b'kgcomm-lscm').digest()
    shifts = (int.from_bytes(digest[i:i + 8], 'big') >> 11 for i in (0, 8))
    x, y = ((base + shift * _UNIT) % 1.0 for base, shift in zip((key.x0, key.y0), shifts))
    return x or _UNIT, y or _UNIT


class _Orbit:
    """Post-burn-in orbit of one (key, nonce), extended on demand."""

    def __init__(self, key: ChaosKey, nonce: int = 0):
        x, y = start_state(key, nonce)
        for _ in range(key.burn_in):
            x_next, y_next = lscm_step(x, y, key.theta)
            if abs(x_next - x) < _DEGENERATE_EPS and abs(y_next - y) < _DEGENERATE_EPS:
                raise DegenerateKey(f'orbit reached a fixed point ({x_next!r}, {y_next!r}) during burn-in')
            x, y = x_next, y_next
        self.theta = key.theta
        self.state = (x, y)
        self.xs = []
        self.ys = []
        self.lock = threading.Lock()

    def take(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        with self.lock:
            x, y = self.state
            for _ in range(n - len(self.xs)):
                x, y = lscm_step(x, y, self.theta)
                self.xs.append(x)
                self.ys.append(y)
            self.state = (x, y)
            return np.asarray(self.xs[:n]), np.asarray(self.ys[:n])


_orbits: 'OrderedDict[Tuple[ChaosKey, int], _Orbit]' = OrderedDict()
_orbits_lock = threading.Lock()


def _orbit_for(key: ChaosKey, nonce: int = 0) -> _Orbit:
    slot = (key, nonce & _NONCE_MASK)
    with _orbits_lock:
        orbit = _orbits.get(slot)
        if orbit is not None:
            _orbits.move_to_end(slot)
            return orbit
    orbit = _Orbit(key, nonce)
    with _orbits_lock:
        orbit = _orbits.setdefault(slot, orbit)
        while len(_orbits) > _ORBIT_CACHE_SIZE:
            _orbits.popitem(last=False)
    return orbit


def generate_keystream(key: ChaosKey, num_symbols: int, num_packets: int, nonce: int = 0) -> Keystream:
    """Keystream for one frame; `nonce` selects an independent orbit under the same key."""
    if num_symbols < 1 or num_packets < 1:
        raise ValueError(f'counts must be >= 1, got num_symbols={num_symbols}, num_packets={num_packets}')
    xs, ys = _orbit_for(key, nonce).take(num_symbols + TAU_PER_PACKET * num_packets)
    f = np.maximum(np.abs(xs[:num_symbols]), MIN_AMPLITUDE)
    zeta = np.abs(ys[:num_symbols]) % 1.0
    frac_x = np.abs(xs[num_symbols:]) % 1.0
    tau = np.floor(4.0 * frac_x).reshape(num_packets, TAU_PER_PACKET)
    tau[:, 0] = np.clip(4.0 * frac_x.reshape(num_packets, TAU_PER_PACKET)[:, 0], _ALPHA_EPS, 4.0 - _ALPHA_EPS)
    return Keystream(f, zeta, tau.ravel())


_KEY_FIELDS = ('x0', 'y0', 'theta', 'burn_in', 'varpi')


def save_key(key: ChaosKey, path: PathLike) -> None:
    lines = [f'{name}={value!r}' for name, value in key.as_dict().items()]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


def load_key(path: PathLike) -> ChaosKey:
    values: Dict[str, Union[int, float]] = {}
    with open(path, encoding='utf-8') as fin:
        for line_no, line in enumerate(fin, 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            name, sep, raw = line.partition('=')
            name = name.strip()
            if not sep or name not in _KEY_FIELDS:
                raise KeyFormatError(f'{path} line {line_no}: expected one of {", ".join(_KEY_FIELDS)} as key=value')
            try:
                values[name] = int(raw) if name == 'burn_in' else float(raw)
            except ValueError as ex:
                raise KeyFormatError(f'{path} line {line_no}: {ex}') from ex
    missing = [name for name in _KEY_FIELDS if name not in values]
    if missing:
        raise KeyFormatError(f'{path}: missing {", ".join(missing)}')
    key = ChaosKey(**values)
    logger.info(f'loaded key {path}: burn_in={key.burn_in}, varpi={key.varpi}')
    return key
