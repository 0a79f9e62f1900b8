"""Client side: verification sends features only; registration sends images."""

from __future__ import annotations

import socket
from collections.abc import Sequence

from ..descriptor import DescriptorConfig, extract_features
from ..imageio import load_canonical
from . import wire


class ServerError(Exception):
    """The server answered with an error frame."""


def _exchange(address: tuple[str, int], msg, timeout: float):
    with socket.create_connection(address, timeout=timeout) as sock:
        wire.send_message(sock, msg)
        reply = wire.read_message(sock)
    if reply is None:
        raise wire.ProtocolError("server closed the connection without replying")
    if isinstance(reply, wire.ErrorMessage):
        raise ServerError(reply.message)
    return reply


def client_verify(address: tuple[str, int], user_id: str, image_files: Sequence,
                  cfg: DescriptorConfig = DescriptorConfig(), timeout: float = 30.0) -> bool:
    if not image_files:
        raise ValueError("at least one image is required")
    # load everything before connecting so a bad file leaves no half-open session
    vectors = [extract_features(load_canonical(f), cfg) for f in image_files]
    reply = _exchange(address, wire.VerifyRequest(user_id, vectors), timeout)
    if not isinstance(reply, wire.VerifyResponse):
        raise wire.ProtocolError(f"expected VerifyResponse, got {type(reply).__name__}")
    return reply.matched and reply.identity == user_id


def client_register(address: tuple[str, int], user_id: str, image_files: Sequence,
                    timeout: float = 30.0) -> bool:
    """Register ``user_id``; accepted only if the server echoes the same id."""
    if not user_id:
        raise ValueError("user id must be nonempty")
    if not image_files:
        raise ValueError("at least one image is required")
    images = [load_canonical(f) for f in image_files]
    reply = _exchange(address, wire.RegisterRequest(user_id, images), timeout)
    if not isinstance(reply, wire.RegisterResponse):
        raise wire.ProtocolError(f"expected RegisterResponse, got {type(reply).__name__}")
    return reply.accepted and reply.user_id == user_id
