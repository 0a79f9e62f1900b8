"""Synthetic corpora, server fixtures and a recording TCP proxy."""

import contextlib
import socket
import threading
from pathlib import Path

import numpy as np

from elghp.imageio import GrayImage, write_pgm
from elghp.netproto import VerificationServer

# 7x7 worked-example image, row-major
WORKED_IMAGE = [
    [2, 5, 3, 9, 5, 4, 3],
    [1, 3, 8, 7, 6, 2, 4],
    [5, 4, 1, 6, 9, 2, 3],
    [4, 9, 8, 2, 7, 5, 3],
    [4, 2, 3, 6, 5, 6, 9],
    [6, 1, 7, 4, 5, 1, 8],
    [5, 3, 9, 8, 5, 6, 7],
]

# its derivative fields over the centre 3x3 (rows 3-5, cols 3-5, 1-indexed)
WORKED_DERIVATIVES = {
    0: [[-5, -3, 7], [6, -5, 2], [-3, 1, -1]],
    1: [[-7, -1, 3], [7, -4, -2], [-5, 4, -2]],
    2: [[-3, 5, 3], [-1, -6, 5], [1, 3, -1]],
    3: [[-7, 4, 2], [5, -4, 2], [-4, 2, 0]],
}


def random_image(rng, h=64, w=64):
    return GrayImage.from_array(rng.integers(0, 256, size=(h, w), dtype=np.uint8))


def perturbed(base: np.ndarray, rng, fraction=0.05, amplitude=3):
    """``base`` with a small random subset of pixels nudged by +-amplitude."""
    img = base.astype(np.int16).copy()
    mask = rng.random(img.shape) < fraction
    noise = rng.integers(-amplitude, amplitude + 1, size=img.shape)
    img[mask] += noise[mask]
    return GrayImage.from_array(np.clip(img, 0, 255).astype(np.uint8))


def identity_corpus(n_ids, per_id, seed=0, prefix="id"):
    """``{name: GrayImage}`` with per-identity base textures and small perturbations."""
    rng = np.random.default_rng(seed)
    images = {}
    for i in range(n_ids):
        base = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        for k in range(per_id):
            images[f"{prefix}{i:02d}_{k}.pgm"] = perturbed(base, rng)
    return images


def write_corpus(directory: Path, images: dict) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, img in images.items():
        path = directory / name
        write_pgm(path, img)
        paths.append(path)
    return paths


@contextlib.contextmanager
def running_server(gallery_dir, cfg=None):
    kwargs = {} if cfg is None else {"cfg": cfg}
    server = VerificationServer(gallery_dir, address=("127.0.0.1", 0), **kwargs)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)


class RecordingProxy:
    """TCP proxy that records every byte the client sends upstream."""

    def __init__(self, upstream):
        self.upstream = upstream
        self.sent = bytearray()
        self.received = bytearray()
        self._lock = threading.Lock()
        self._listener = socket.create_server(("127.0.0.1", 0))
        self.address = self._listener.getsockname()[:2]
        self._thread = threading.Thread(target=self._accept, daemon=True)
        self._thread.start()

    def _accept(self):
        while True:
            try:
                client, _ = self._listener.accept()
            except OSError:
                return
            server = socket.create_connection(self.upstream)
            threading.Thread(target=self._pump, args=(client, server, self.sent), daemon=True).start()
            threading.Thread(target=self._pump, args=(server, client, self.received), daemon=True).start()

    def _pump(self, src, dst, log):
        try:
            while True:
                chunk = src.recv(65536)
                if not chunk:
                    break
                with self._lock:
                    log.extend(chunk)
                dst.sendall(chunk)
        except OSError:
            pass
        finally:
            with contextlib.suppress(OSError):
                dst.shutdown(socket.SHUT_WR)

    def close(self):
        self._listener.close()
