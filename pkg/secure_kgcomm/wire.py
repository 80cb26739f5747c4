"""
Bit-exact KnowledgeGraph codec, Gray-mapped QPSK and packet framing.

Wire format (big-endian):

    magic 0x4B47 (2 bytes) | triple count (4 bytes) | pad byte (1 byte)
    then per triple, per field: length (2 bytes) | UTF-8 bytes

See docs/wire_format.md for a worked example.
"""
import math
import struct
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import DecodeFailure, FieldTooLong, ModulationError, PacketError
from .kgraph import KnowledgeGraph

MAGIC = 0x4B47
_HEADER = struct.Struct('>HIB')
_FIELD_LEN = struct.Struct('>H')
HEADER_BITS = _HEADER.size * 8
MAX_FIELD_BYTES = 0xFFFF
_SQRT_HALF = 1 / math.sqrt(2)


class BitStream:
    __slots__ = ('bits', 'pad_bits')

    def __init__(self, bits: Union[Sequence[int], np.ndarray], pad_bits: int = 0):
        self.bits = np.asarray(bits, dtype=np.uint8).ravel()
        self.pad_bits = pad_bits

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.pad_bits == other.pad_bits and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f'BitStream({self.bits.size} bits, pad_bits={self.pad_bits})'

    @classmethod
    def from_bytes(cls, data: bytes) -> 'BitStream':
        return cls(np.unpackbits(np.frombuffer(data, dtype=np.uint8)))

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    def payload(self) -> np.ndarray:
        """Bits with the recorded padding removed."""
        return self.bits[:self.bits.size - self.pad_bits]

    def padded_to(self, multiple: int) -> 'BitStream':
        extra = -self.bits.size % multiple
        if not extra:
            return self
        return BitStream(np.concatenate([self.bits, np.zeros(extra, dtype=np.uint8)]), self.pad_bits + extra)


def serialize_kg(g: KnowledgeGraph) -> BitStream:
    chunks = [_HEADER.pack(MAGIC, len(g.triples), 0)]
    for triple in g.triples:
        for part in triple:
            data = part.encode('utf-8')
            if len(data) > MAX_FIELD_BYTES:
                raise FieldTooLong(f'field of {len(data)} bytes exceeds {MAX_FIELD_BYTES}: {part[:32]!r}...')
            chunks.append(_FIELD_LEN.pack(len(data)))
            chunks.append(data)
    # whole bytes, so the stream is already of even length
    return BitStream.from_bytes(b''.join(chunks))


def deserialize_kg(bits: Union[BitStream, Sequence[int], np.ndarray]) -> KnowledgeGraph:
    """Inverse of serialize_kg. Raises DecodeFailure and nothing else on bad input."""
    raw = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, dtype=np.uint8).ravel()
    if raw.size < HEADER_BITS:
        raise DecodeFailure(DecodeFailure.TRUNCATED, f'{raw.size} bits is shorter than the header')
    data = np.packbits(raw[:raw.size - raw.size % 8]).tobytes()
    magic, count, _ = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DecodeFailure(DecodeFailure.BAD_MAGIC, f'0x{magic:04X}')
    pos = _HEADER.size
    # every triple takes at least 3 length prefixes
    if count * 3 * _FIELD_LEN.size > len(data) - pos:
        raise DecodeFailure(DecodeFailure.TRUNCATED, f'{count} triples cannot fit in {len(data)} bytes')
    triples: List[Tuple[str, str, str]] = []
    for n in range(count):
        parts = []
        for _ in range(3):
            if pos + _FIELD_LEN.size > len(data):
                raise DecodeFailure(DecodeFailure.TRUNCATED, f'triple {n}: length prefix past end')
            (size,) = _FIELD_LEN.unpack_from(data, pos)
            pos += _FIELD_LEN.size
            if pos + size > len(data):
                raise DecodeFailure(DecodeFailure.TRUNCATED, f'triple {n}: field of {size} bytes past end')
            try:
                parts.append(data[pos:pos + size].decode('utf-8'))
            except UnicodeDecodeError as ex:
                raise DecodeFailure(DecodeFailure.INVALID_UTF8, f'triple {n}: {ex.reason}') from ex
            pos += size
        triples.append((parts[0], parts[1], parts[2]))
    return KnowledgeGraph(tuple(triples))


def qpsk_modulate(bits: Union[BitStream, Sequence[int], np.ndarray]) -> np.ndarray:
    """Gray mapping, first bit of a dibit on the imaginary axis: 00 -> (1+1j)/sqrt(2), 01 -> (-1+1j)/sqrt(2)."""
    raw = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, dtype=np.uint8).ravel()
    if raw.size % 2:
        raise ModulationError(f'QPSK needs an even number of bits, got {raw.size}')
    pairs = raw.reshape(-1, 2).astype(np.float64)
    return ((1 - 2 * pairs[:, 1]) + 1j * (1 - 2 * pairs[:, 0])) * _SQRT_HALF


def qpsk_demodulate(symbols: Union[Sequence[complex], np.ndarray]) -> BitStream:
    """Nearest constellation point; a component exactly on an axis decides as positive."""
    z = np.asarray(symbols, dtype=np.complex128).ravel()
    bits = np.empty((z.size, 2), dtype=np.uint8)
    bits[:, 0] = z.imag < 0
    bits[:, 1] = z.real < 0
    return BitStream(bits.ravel())


@dataclass(frozen=True, eq=False)
class SymbolFrame:
    packets: np.ndarray            # (L, X) complex
    layout: Tuple[int, int]        # (M, N)
    pad_symbols: int
    bits_per_packet: int
    pad_bits: int = 0

    @property
    def num_packets(self) -> int:
        return self.packets.shape[0]

    @property
    def per_packet(self) -> int:
        return self.packets.shape[1]

    @property
    def num_symbols(self) -> int:
        return self.layout[0] * self.layout[1]

    def flatten(self) -> np.ndarray:
        """The M*N data symbols, packet padding dropped."""
        return self.packets.ravel()[:self.num_symbols]

    def with_packets(self, packets: np.ndarray) -> 'SymbolFrame':
        packets = np.asarray(packets, dtype=np.complex128)
        if packets.shape != self.packets.shape:
            raise PacketError(f'packet shape {packets.shape} does not match {self.packets.shape}')
        return replace(self, packets=packets)

    def equals(self, other: 'SymbolFrame', atol: float = 0.0) -> bool:
        return (self.layout == other.layout and self.pad_symbols == other.pad_symbols
                and self.packets.shape == other.packets.shape
                and np.allclose(self.packets, other.packets, rtol=0, atol=atol))


def packetize(symbols: Union[Sequence[complex], np.ndarray], blocks_M: int, block_N: int,
              per_packet_X: int) -> SymbolFrame:
    z = np.asarray(symbols, dtype=np.complex128).ravel()
    if per_packet_X < 1:
        raise PacketError(f'per_packet_X must be >= 1, got {per_packet_X}')
    if blocks_M < 1 or block_N < 1:
        raise PacketError(f'bad layout M={blocks_M}, N={block_N}')
    if z.size != blocks_M * block_N:
        raise PacketError(f'{z.size} symbols do not fill {blocks_M} blocks of {block_N}')
    num_packets = -(-z.size // per_packet_X)
    packets = np.zeros(num_packets * per_packet_X, dtype=np.complex128)
    packets[:z.size] = z
    return SymbolFrame(packets.reshape(num_packets, per_packet_X), (blocks_M, block_N),
                       num_packets * per_packet_X - z.size, 2 * per_packet_X)


def frame_bits(bits: BitStream, block_N: int, per_packet_X: int) -> SymbolFrame:
    """Zero-pads to whole N-symbol blocks, modulates and packetizes."""
    if block_N < 1:
        raise PacketError(f'block_N must be >= 1, got {block_N}')
    padded = bits.padded_to(2 * block_N)
    symbols = qpsk_modulate(padded)
    frame = packetize(symbols, symbols.size // block_N, block_N, per_packet_X)
    return replace(frame, pad_bits=padded.pad_bits)


def unframe_bits(symbols: Union[Sequence[complex], np.ndarray], frame: SymbolFrame) -> BitStream:
    """Demodulates the data symbols of a received frame and drops the bit padding."""
    z = np.asarray(symbols, dtype=np.complex128).ravel()[:frame.num_symbols]
    demodulated = qpsk_demodulate(z)
    return BitStream(demodulated.bits[:demodulated.bits.size - frame.pad_bits])
