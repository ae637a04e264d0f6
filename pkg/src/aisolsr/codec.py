"""Binary wire format for the extended HELLO and TC control messages.

Both messages share a fixed 24-byte head; see README for the full layout
table. All multi-byte fields are big-endian. Physical quantities are
fixed-point on the wire: energy in centijoules, distances and coordinates
in decimeters, so values round-trip exactly when they sit on those grids
(and within one quantum otherwise).

    offset  size  field
    0       2     packet_length        (whole packet, bytes)
    2       2     packet_sequence
    4       1     message_type         (1 = HELLO, 2 = TC)
    5       1     vtime
    6       2     message_size         (packet_length - 4)
    8       4     originator
    12      1     ttl                  (HELLO: always 1)
    13      1     hop_count
    14      2     message_sequence
    16..24        message-specific word, then repeated blocks:
      HELLO: energy u16 | distance u16 | geographic u32 (x dm << 16 | y dm)
             blocks of 5: link_code u8 | neighbor_id u32
      TC:    ansn u16 | originator energy u16 | geographic u32
             blocks of 6: neighbor_id u32 | link_distance u16
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .model import Position

MSG_HELLO = 1
MSG_TC = 2

# HELLO link codes
LINK_HEARD = 0
LINK_SYM = 1
LINK_MPR = 2

_HEAD = struct.Struct(">HHBBHIBBH")  # through message_sequence (16 bytes)
_HELLO_EXT = struct.Struct(">HHHH")  # energy, distance, x, y
_TC_EXT = struct.Struct(">HHHH")  # ansn, energy, x, y
_HELLO_BLOCK = struct.Struct(">BI")
_TC_BLOCK = struct.Struct(">IH")
_FIXED_LEN = 24

ENERGY_SCALE = 100.0  # joules -> centijoules
DIST_SCALE = 10.0  # meters -> decimeters


class EncodeError(ValueError):
    """A field does not fit its wire representation."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DecodeError(ValueError):
    """Buffer rejected; reason is one of truncated | bad-type | length-mismatch."""

    def __init__(self, reason: str, message: str):
        super().__init__(f"{reason}: {message}")
        self.reason = reason


@dataclass(frozen=True)
class HelloNeighbor:
    link_code: int
    neighbor_id: int


@dataclass(frozen=True)
class HelloMessage:
    """One-hop neighbor-sensing broadcast, extended with energy/distance/position."""

    originator: int
    energy: float
    position: Position
    neighbors: tuple[HelloNeighbor, ...] = ()
    distance: float = 0.0  # always emitted as 0; receivers compute the link distance
    vtime: int = 6
    ttl: int = 1
    hop_count: int = 0
    packet_sequence: int = 0
    message_sequence: int = 0


@dataclass(frozen=True)
class TcAdvertisedLink:
    neighbor_id: int
    link_distance: float


@dataclass(frozen=True)
class TcMessage:
    """Flooded topology advertisement: selector links plus originator state."""

    originator: int
    ansn: int
    energy: float
    position: Position
    advertised: tuple[TcAdvertisedLink, ...] = ()
    vtime: int = 6
    ttl: int = 255
    hop_count: int = 0
    packet_sequence: int = 0
    message_sequence: int = 0


def _check_uint(value: int, bits: int, field: str) -> int:
    if not isinstance(value, int) or not 0 <= value < (1 << bits):
        raise EncodeError(field, f"value {value!r} outside unsigned {bits}-bit range")
    return value


def _quantize(value: float, scale: float, field: str) -> int:
    q = round(value * scale)
    if not 0 <= q <= 0xFFFF:
        limit = 0xFFFF / scale
        raise EncodeError(field, f"value {value!r} outside [0, {limit}]")
    return q


def _pack_head(msg, msg_type: int, payload_len: int) -> bytes:
    packet_length = _FIXED_LEN + payload_len
    if packet_length > 0xFFFF:
        raise EncodeError("packet_length", "message too large")
    return _HEAD.pack(
        packet_length,
        _check_uint(msg.packet_sequence, 16, "packet_sequence"),
        msg_type,
        _check_uint(msg.vtime, 8, "vtime"),
        packet_length - 4,
        _check_uint(msg.originator, 32, "originator"),
        _check_uint(msg.ttl, 8, "ttl"),
        _check_uint(msg.hop_count, 8, "hop_count"),
        _check_uint(msg.message_sequence, 16, "message_sequence"),
    )


def encode(msg: HelloMessage | TcMessage) -> bytes:
    """Serialize a message; length fields are computed, never trusted."""
    if isinstance(msg, HelloMessage):
        if msg.ttl != 1:
            raise EncodeError("ttl", "HELLO ttl must be 1")
        parts = [
            _pack_head(msg, MSG_HELLO, 5 * len(msg.neighbors)),
            _HELLO_EXT.pack(
                _quantize(msg.energy, ENERGY_SCALE, "energy"),
                _quantize(msg.distance, DIST_SCALE, "distance"),
                _quantize(msg.position.x, DIST_SCALE, "geographic"),
                _quantize(msg.position.y, DIST_SCALE, "geographic"),
            ),
        ]
        for nb in msg.neighbors:
            parts.append(
                _HELLO_BLOCK.pack(
                    _check_uint(nb.link_code, 8, "link_code"),
                    _check_uint(nb.neighbor_id, 32, "neighbor_id"),
                )
            )
        return b"".join(parts)
    if isinstance(msg, TcMessage):
        parts = [
            _pack_head(msg, MSG_TC, 6 * len(msg.advertised)),
            _TC_EXT.pack(
                _check_uint(msg.ansn, 16, "ansn"),
                _quantize(msg.energy, ENERGY_SCALE, "energy"),
                _quantize(msg.position.x, DIST_SCALE, "geographic"),
                _quantize(msg.position.y, DIST_SCALE, "geographic"),
            ),
        ]
        for adv in msg.advertised:
            parts.append(
                _TC_BLOCK.pack(
                    _check_uint(adv.neighbor_id, 32, "neighbor_id"),
                    _quantize(adv.link_distance, DIST_SCALE, "link_distance"),
                )
            )
        return b"".join(parts)
    raise TypeError(f"not an encodable message: {type(msg)!r}")


def decode(buf: bytes) -> HelloMessage | TcMessage:
    """Parse a packet; never reads past the declared packet_length."""
    if len(buf) < 4:
        raise DecodeError("truncated", f"{len(buf)} bytes, need at least 4")
    packet_length = struct.unpack_from(">H", buf, 0)[0]
    if packet_length > len(buf):
        raise DecodeError(
            "truncated", f"declared {packet_length} bytes, buffer has {len(buf)}"
        )
    if packet_length < _FIXED_LEN:
        raise DecodeError(
            "length-mismatch", f"declared {packet_length} bytes, minimum is {_FIXED_LEN}"
        )
    (
        _,
        packet_sequence,
        msg_type,
        vtime,
        message_size,
        originator,
        ttl,
        hop_count,
        message_sequence,
    ) = _HEAD.unpack_from(buf, 0)
    if msg_type not in (MSG_HELLO, MSG_TC):
        raise DecodeError("bad-type", f"unknown message type {msg_type}")
    if message_size != packet_length - 4:
        raise DecodeError(
            "length-mismatch",
            f"message_size {message_size} vs packet_length {packet_length}",
        )
    payload_len = packet_length - _FIXED_LEN
    if msg_type == MSG_HELLO:
        if payload_len % _HELLO_BLOCK.size:
            raise DecodeError("length-mismatch", "neighbor blocks misaligned")
        energy_q, dist_q, x_q, y_q = _HELLO_EXT.unpack_from(buf, 16)
        neighbors = tuple(
            HelloNeighbor(*_HELLO_BLOCK.unpack_from(buf, off))
            for off in range(_FIXED_LEN, packet_length, _HELLO_BLOCK.size)
        )
        return HelloMessage(
            originator=originator,
            energy=energy_q / ENERGY_SCALE,
            position=Position(x_q / DIST_SCALE, y_q / DIST_SCALE),
            neighbors=neighbors,
            distance=dist_q / DIST_SCALE,
            vtime=vtime,
            ttl=ttl,
            hop_count=hop_count,
            packet_sequence=packet_sequence,
            message_sequence=message_sequence,
        )
    if payload_len % _TC_BLOCK.size:
        raise DecodeError("length-mismatch", "advertised blocks misaligned")
    ansn, energy_q, x_q, y_q = _TC_EXT.unpack_from(buf, 16)
    advertised = []
    for off in range(_FIXED_LEN, packet_length, _TC_BLOCK.size):
        nbr, dist_q = _TC_BLOCK.unpack_from(buf, off)
        advertised.append(TcAdvertisedLink(nbr, dist_q / DIST_SCALE))
    return TcMessage(
        originator=originator,
        ansn=ansn,
        energy=energy_q / ENERGY_SCALE,
        position=Position(x_q / DIST_SCALE, y_q / DIST_SCALE),
        advertised=tuple(advertised),
        vtime=vtime,
        ttl=ttl,
        hop_count=hop_count,
        packet_sequence=packet_sequence,
        message_sequence=message_sequence,
    )
