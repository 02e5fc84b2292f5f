"""Binary wire format for round messages and stream framing.

Message layout (little-endian throughout)::

    "FSL1" | u8 direction | u32 round | u32 client_id | u64 n_k | u32 segment_count
    segment: u16 name_len | name (UTF-8) | u8 rank | u32 dims[rank] | f64 data[prod(dims)]

Frames on a stream are ``u32 length`` followed by the payload.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..numcore import ParameterVector

MAGIC = b"FSL1"
HELLO_MAGIC = b"FSLH"
ACCEPT_MAGIC = b"FSLA"
REJECT_MAGIC = b"FSLR"
ERROR_MAGIC = b"FSLE"

BROADCAST = 0
UPLOAD = 1
DIRECTIONS = {BROADCAST: "broadcast", UPLOAD: "upload"}
MAX_RANK = 32

_HEADER = struct.Struct("<4sBIIQI")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


class CodecError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class RoundMessage:
    direction: int
    round: int
    segments: ParameterVector
    client_id: int = 0
    n_k: int = 0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"bad direction {self.direction}")
        if self.direction == UPLOAD and self.n_k <= 0:
            raise ValueError("uploads must carry n_k > 0")

    def __eq__(self, other) -> bool:
        if not isinstance(other, RoundMessage):
            return NotImplemented
        return (self.direction, self.round, self.client_id, self.n_k) == (
            other.direction, other.round, other.client_id, other.n_k
        ) and self.segments.bitwise_equal(other.segments)

    __hash__ = None


def encode_message(m: RoundMessage) -> bytes:
    parts = [_HEADER.pack(MAGIC, m.direction, m.round, m.client_id, m.n_k, len(m.segments))]
    for name, arr in m.segments.items():
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise CodecError(f"segment name too long: {name[:20]!r}...", sum(map(len, parts)))
        if arr.ndim > MAX_RANK:
            raise CodecError(f"segment {name!r} has rank {arr.ndim} > {MAX_RANK}", sum(map(len, parts)))
        parts.append(_U16.pack(len(raw)))
        parts.append(raw)
        parts.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n: int, what: str) -> memoryview:
        if self.pos + n > len(self.buf):
            raise CodecError(f"truncated message while reading {what}", self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out


def decode_message(buf: bytes) -> RoundMessage:
    r = _Reader(buf)
    if bytes(r.buf[:4]) != MAGIC:
        raise CodecError("bad magic", 0)
    magic, direction, rnd, cid, n_k, count = _HEADER.unpack(r.take(_HEADER.size, "header"))
    if direction not in DIRECTIONS:
        raise CodecError(f"bad direction {direction}", 4)
    if direction == UPLOAD and n_k == 0:
        raise CodecError("upload with n_k == 0", 13)
    segs: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for _ in range(count):
        start = r.pos
        (name_len,) = _U16.unpack(r.take(2, "name length"))
        try:
            name = bytes(r.take(name_len, "name")).decode("utf-8")
        except UnicodeDecodeError:
            raise CodecError("segment name is not UTF-8", start + 2) from None
        if name in seen:
            raise CodecError(f"duplicate segment name {name!r}", start)
        seen.add(name)
        (rank,) = r.take(1, "rank")
        if rank > MAX_RANK:
            raise CodecError(f"rank {rank} exceeds {MAX_RANK}", r.pos - 1)
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank, "dims"))
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = np.frombuffer(r.take(8 * size, "data"), dtype="<f8").astype(np.float64)
        segs.append((name, data.reshape(dims)))
    if r.pos != len(r.buf):
        raise CodecError("trailing bytes after message", r.pos)
    return RoundMessage(direction, rnd, ParameterVector(segs), cid, n_k)


def frame(payload: bytes) -> bytes:
    return _U32.pack(len(payload)) + payload


def encode_hello(client_id: int, config_digest: bytes) -> bytes:
    if len(config_digest) != 32:
        raise ValueError("config digest must be 32 bytes")
    return HELLO_MAGIC + _U32.pack(client_id) + config_digest


def decode_hello(buf: bytes) -> tuple[int, bytes]:
    if bytes(buf[:4]) != HELLO_MAGIC:
        raise CodecError("bad hello magic", 0)
    if len(buf) != 40:
        raise CodecError("hello frame must be 40 bytes", min(len(buf), 40))
    (cid,) = _U32.unpack(buf[4:8])
    return cid, bytes(buf[8:40])


def encode_text(magic: bytes, text: str) -> bytes:
    raw = text.encode("utf-8")
    return magic + _U16.pack(len(raw)) + raw


def decode_text(buf: bytes) -> str:
    (n,) = _U16.unpack(buf[4:6])
    return bytes(buf[6:6 + n]).decode("utf-8", errors="replace")
