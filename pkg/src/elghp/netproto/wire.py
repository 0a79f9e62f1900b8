"""Wire format of the verification protocol.

Every frame is ``u32 payload_length | u8 type | payload``, big-endian
throughout. Text fields are ``u16 length | UTF-8``.

======  ================  ===================================================
type    message           payload
======  ================  ===================================================
0x01    VerifyRequest     text user_id, u16 count, count * (u32 L, L * u32)
0x02    VerifyResponse    u8 matched, text identity
0x03    RegisterRequest   text user_id, u16 count, count * (u16 w, u16 h, w*h bytes)
0x04    RegisterResponse  u8 accepted, text user_id
0x7F    Error             text message
======  ================  ===================================================
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass, field

import numpy as np

from ..imageio import GrayImage

VERIFY_REQUEST = 0x01
VERIFY_RESPONSE = 0x02
REGISTER_REQUEST = 0x03
REGISTER_RESPONSE = 0x04
ERROR = 0x7F

HEADER = struct.Struct(">IB")
MAX_PAYLOAD = 64 * 1024 * 1024


class ProtocolError(Exception):
    """Malformed or unexpected frame."""


@dataclass(frozen=True, eq=False)
class VerifyRequest:
    user_id: str
    vectors: list = field(default_factory=list)

    def __eq__(self, other):
        return (
            isinstance(other, VerifyRequest)
            and self.user_id == other.user_id
            and len(self.vectors) == len(other.vectors)
            and all(np.array_equal(a, b) for a, b in zip(self.vectors, other.vectors))
        )


@dataclass(frozen=True)
class VerifyResponse:
    matched: bool
    identity: str = ""


@dataclass(frozen=True, eq=False)
class RegisterRequest:
    user_id: str
    images: list = field(default_factory=list)

    def __eq__(self, other):
        return (
            isinstance(other, RegisterRequest)
            and self.user_id == other.user_id
            and list(self.images) == list(other.images)
        )


@dataclass(frozen=True)
class RegisterResponse:
    accepted: bool
    user_id: str


@dataclass(frozen=True)
class ErrorMessage:
    message: str


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ProtocolError("truncated payload")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def text(self) -> str:
        raw = self.take(self.u16())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("text field is not UTF-8") from exc

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise ProtocolError(f"{len(self.buf) - self.pos} trailing bytes in payload")


def _text(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ProtocolError("text field longer than 65535 bytes")
    return struct.pack(">H", len(raw)) + raw


def _count(n: int) -> bytes:
    if n > 0xFFFF:
        raise ProtocolError(f"too many items for a u16 count: {n}")
    return struct.pack(">H", n)


def encode_payload(msg) -> tuple[int, bytes]:
    if isinstance(msg, VerifyRequest):
        parts = [_text(msg.user_id), _count(len(msg.vectors))]
        for v in msg.vectors:
            v = np.asarray(v, dtype=np.uint32)
            parts.append(struct.pack(">I", v.shape[0]) + v.astype(">u4").tobytes())
        return VERIFY_REQUEST, b"".join(parts)
    if isinstance(msg, VerifyResponse):
        return VERIFY_RESPONSE, bytes([1 if msg.matched else 0]) + _text(msg.identity)
    if isinstance(msg, RegisterRequest):
        parts = [_text(msg.user_id), _count(len(msg.images))]
        for img in msg.images:
            if img.width > 0xFFFF or img.height > 0xFFFF:
                raise ProtocolError("image too large for the wire format")
            parts.append(struct.pack(">HH", img.width, img.height) + img.pixels.tobytes())
        return REGISTER_REQUEST, b"".join(parts)
    if isinstance(msg, RegisterResponse):
        return REGISTER_RESPONSE, bytes([1 if msg.accepted else 0]) + _text(msg.user_id)
    if isinstance(msg, ErrorMessage):
        return ERROR, _text(msg.message)
    raise TypeError(f"not a protocol message: {msg!r}")


def decode_payload(kind: int, payload: bytes):
    r = _Reader(payload)
    if kind == VERIFY_REQUEST:
        user_id = r.text()
        vectors = []
        for _ in range(r.u16()):
            n = r.u32()
            vectors.append(np.frombuffer(r.take(4 * n), dtype=">u4").astype(np.uint32))
        msg = VerifyRequest(user_id, vectors)
    elif kind == VERIFY_RESPONSE:
        msg = VerifyResponse(bool(r.u8()), r.text())
    elif kind == REGISTER_REQUEST:
        user_id = r.text()
        images = []
        for _ in range(r.u16()):
            w, h = r.u16(), r.u16()
            if w == 0 or h == 0:
                raise ProtocolError("zero-sized image")
            raw = np.frombuffer(r.take(w * h), dtype=np.uint8).reshape(h, w)
            images.append(GrayImage(w, h, raw))
        msg = RegisterRequest(user_id, images)
    elif kind == REGISTER_RESPONSE:
        msg = RegisterResponse(bool(r.u8()), r.text())
    elif kind == ERROR:
        msg = ErrorMessage(r.text())
    else:
        raise ProtocolError(f"unknown message type 0x{kind:02X}")
    r.done()
    return msg


def encode_frame(msg) -> bytes:
    kind, payload = encode_payload(msg)
    return HEADER.pack(len(payload), kind) + payload


def decode_frame(buf: bytes):
    """Decode exactly one complete frame."""
    if len(buf) < HEADER.size:
        raise ProtocolError("truncated frame header")
    length, kind = HEADER.unpack_from(buf)
    if len(buf) != HEADER.size + length:
        raise ProtocolError("frame length does not match buffer")
    return decode_payload(kind, buf[HEADER.size :])


def split_frames(stream: bytes) -> list[tuple[int, bytes]]:
    """Split a captured byte stream into ``(type, payload)`` pairs."""
    out = []
    pos = 0
    while pos < len(stream):
        if pos + HEADER.size > len(stream):
            raise ProtocolError("truncated frame header")
        length, kind = HEADER.unpack_from(stream, pos)
        pos += HEADER.size
        if pos + length > len(stream):
            raise ProtocolError("truncated frame payload")
        out.append((kind, stream[pos : pos + length]))
        pos += length
    return out


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(min(remaining, 1 << 16))
        if not chunk:
            if remaining == n:
                return None
            raise ProtocolError("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_message(sock: socket.socket):
    """Read one message; ``None`` on a clean EOF between frames."""
    header = _recv_exact(sock, HEADER.size)
    if header is None:
        return None
    length, kind = HEADER.unpack(header)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"frame too large: {length} bytes")
    payload = _recv_exact(sock, length) if length else b""
    if payload is None:
        raise ProtocolError("connection closed mid-frame")
    return decode_payload(kind, payload)


def send_message(sock: socket.socket, msg) -> None:
    sock.sendall(encode_frame(msg))
