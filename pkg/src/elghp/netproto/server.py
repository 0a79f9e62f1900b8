"""Verification server: one handler thread per client connection.

Handlers read a shared, immutable :class:`~elghp.matcher.Gallery` snapshot.
Registration builds a new snapshot under a lock and swaps it in with a
single reference assignment, so every verification sees the gallery either
entirely before or entirely after a registration.
"""

from __future__ import annotations

import logging
import os
import re
import socket
import socketserver
import threading
from collections import Counter, deque
from pathlib import Path

from ..descriptor import DescriptorConfig, extract_features
from ..imageio import load_canonical, resize_to_canonical, write_pgm
from ..matcher import Gallery, GalleryEntry, MatchError, identity_of, nearest
from . import wire

log = logging.getLogger(__name__)

_USER_ID = re.compile(r"[A-Za-z0-9][A-Za-z0-9.\-_]*\Z")


class RegistrationError(ValueError):
    pass


def verify(request: wire.VerifyRequest, gallery: Gallery) -> wire.VerifyResponse:
    """Majority vote of per-vector 1NN identities against the claimed id.

    A tie for the most votes counts as no match.
    """
    if not len(gallery):
        raise MatchError("empty gallery")
    if not request.vectors:
        raise MatchError("no feature vectors in request")
    votes = Counter(nearest(v, gallery).identity for v in request.vectors)
    ranked = votes.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return wire.VerifyResponse(False, "")
    winner = ranked[0][0]
    if winner == request.user_id:
        return wire.VerifyResponse(True, winner)
    return wire.VerifyResponse(False, "")


def load_gallery(directory: str | os.PathLike, cfg: DescriptorConfig) -> Gallery:
    """Extract features for every ``*.pgm`` in ``directory`` (sorted by name)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"gallery directory {str(directory)!r} is not readable")
    entries = []
    for path in sorted(directory.glob("*.pgm")):
        feats = extract_features(load_canonical(path), cfg)
        entries.append(GalleryEntry.from_name(path.name, feats))
    return Gallery(entries)


class GalleryStore:
    """The server's gallery: lock-free reads, serialized registrations."""

    def __init__(self, directory: str | os.PathLike, cfg: DescriptorConfig):
        self.directory = Path(directory)
        self.cfg = cfg
        self._gallery = load_gallery(self.directory, cfg)
        self._write_lock = threading.Lock()

    def snapshot(self) -> Gallery:
        return self._gallery

    def register(self, user_id: str, images) -> str:
        if not _USER_ID.match(user_id or ""):
            raise RegistrationError("invalid user id")
        if not images:
            raise RegistrationError("no images")
        canonical = [resize_to_canonical(img) for img in images]
        feats = [extract_features(img, self.cfg) for img in canonical]
        with self._write_lock:
            current = self._gallery
            if user_id in current.identities or any(self.directory.glob(f"{glob_escape(user_id)}_*.pgm")):
                raise RegistrationError("identity exists")
            written = []
            try:
                for k, img in enumerate(canonical):
                    path = self.directory / f"{user_id}_{k}.pgm"
                    write_pgm(path, img)
                    written.append(path)
            except OSError:
                for path in written:
                    path.unlink(missing_ok=True)
                raise
            new = [GalleryEntry(p.name, identity_of(p.name), f) for p, f in zip(written, feats)]
            self._gallery = current.extended(new)
        log.info("registered %s with %d images", user_id, len(new))
        return user_id


def glob_escape(s: str) -> str:
    return re.sub(r"([\[\]*?])", r"[\1]", s)


class _Handler(socketserver.BaseRequestHandler):
    server: VerificationServer

    def handle(self):
        sock: socket.socket = self.request
        while True:
            try:
                msg = wire.read_message(sock)
            except wire.ProtocolError as exc:
                self._send(wire.ErrorMessage(f"protocol error: {exc}"))
                return
            except OSError:
                return
            if msg is None:
                return
            reply = self.server.dispatch(msg)
            if not self._send(reply):
                return

    def _send(self, msg) -> bool:
        try:
            wire.send_message(self.request, msg)
        except OSError:
            return False
        return True


class VerificationServer(socketserver.ThreadingTCPServer):
    """TCP verification/registration server over a gallery directory."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, gallery_dir, cfg: DescriptorConfig = DescriptorConfig(),
                 address: tuple[str, int] = ("127.0.0.1", 7100)):
        self.store = GalleryStore(gallery_dir, cfg)
        self.cfg = cfg
        # (claimed id, gallery version, gallery size) seen by each verification
        self.observations: deque[tuple[str, int, int]] = deque(maxlen=10000)
        super().__init__(address, _Handler)
        log.info("serving %d gallery images on %s:%d", len(self.store.snapshot()), *self.server_address[:2])

    def dispatch(self, msg):
        if isinstance(msg, wire.VerifyRequest):
            gallery = self.store.snapshot()
            self.observations.append((msg.user_id, gallery.version, len(gallery)))
            if len(gallery) and any(len(v) != gallery.dim for v in msg.vectors):
                return wire.ErrorMessage("dimension mismatch")
            try:
                return verify(msg, gallery)
            except MatchError as exc:
                return wire.ErrorMessage(str(exc))
        if isinstance(msg, wire.RegisterRequest):
            try:
                uid = self.store.register(msg.user_id, msg.images)
            except RegistrationError as exc:
                return wire.ErrorMessage(str(exc))
            except OSError as exc:
                log.error("registration of %s failed: %s", msg.user_id, exc)
                return wire.ErrorMessage("registration failed")
            return wire.RegisterResponse(True, uid)
        return wire.ErrorMessage(f"unexpected message {type(msg).__name__}")


def serve(gallery_dir, cfg: DescriptorConfig = DescriptorConfig(),
          address: tuple[str, int] = ("127.0.0.1", 7100)) -> None:
    """Run the server until interrupted."""
    with VerificationServer(gallery_dir, cfg, address) as server:
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
