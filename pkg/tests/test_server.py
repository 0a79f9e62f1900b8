import socket
import threading

import numpy as np
import pytest

from elghp.descriptor import DescriptorConfig, extract_features
from elghp.imageio import load_canonical
from elghp.matcher import Gallery, GalleryEntry, MatchError
from elghp.netproto import (
    ProtocolError,
    ServerError,
    VerifyRequest,
    VerifyResponse,
    client_register,
    client_verify,
    load_gallery,
    verify,
)
from elghp.netproto import wire
from helpers import identity_corpus, running_server, write_corpus

CFG = DescriptorConfig()


@pytest.fixture
def gallery_dir(tmp_path):
    write_corpus(tmp_path / "gallery", identity_corpus(4, 5, seed=11, prefix="user"))
    return tmp_path / "gallery"


def _entries(*identities):
    rng = np.random.default_rng(0)
    return [GalleryEntry.from_name(f"{ident}_{k}.pgm", rng.integers(0, 9, 16).astype(np.uint32) + 100 * i)
            for i, ident in enumerate(identities) for k in range(2)]


def test_verify_votes():
    gallery = Gallery(_entries("A", "B"))
    a_vec, b_vec = gallery[0].features, gallery[2].features
    assert verify(VerifyRequest("A", [a_vec] * 5), gallery) == VerifyResponse(True, "A")
    assert verify(VerifyRequest("B", [a_vec] * 5), gallery) == VerifyResponse(False, "")
    assert verify(VerifyRequest("A", [a_vec] * 3 + [b_vec] * 2), gallery).matched
    assert not verify(VerifyRequest("B", [a_vec] * 3 + [b_vec] * 2), gallery).matched
    # a tie for the most votes is unmatched
    assert not verify(VerifyRequest("A", [a_vec, a_vec, b_vec, b_vec]), gallery).matched
    with pytest.raises(MatchError):
        verify(VerifyRequest("A", [a_vec]), Gallery())


def test_load_gallery(gallery_dir, tmp_path):
    g = load_gallery(gallery_dir, CFG)
    assert len(g) == 20 and g.identities == {"user00", "user01", "user02", "user03"}
    with pytest.raises(FileNotFoundError):
        load_gallery(tmp_path / "missing", CFG)


def test_verify_and_two_factor(gallery_dir):
    files = sorted(gallery_dir.glob("user01_*.pgm"))
    with running_server(gallery_dir) as server:
        addr = server.server_address[:2]
        assert client_verify(addr, "user01", files)
        assert not client_verify(addr, "user02", files)  # right face, wrong id
        other = sorted(gallery_dir.glob("user03_*.pgm"))
        assert not client_verify(addr, "user01", other)  # right id, wrong face


def test_register_then_verify(gallery_dir, tmp_path):
    new = write_corpus(tmp_path / "new", identity_corpus(1, 3, seed=99, prefix="newbie"))
    with running_server(gallery_dir) as server:
        addr = server.server_address[:2]
        assert not client_verify(addr, "fresh", new)
        assert client_register(addr, "fresh", new)
        assert client_verify(addr, "fresh", new)
        assert sorted(p.name for p in gallery_dir.glob("fresh_*.pgm")) == ["fresh_0.pgm", "fresh_1.pgm", "fresh_2.pgm"]
        with pytest.raises(ServerError, match="identity exists"):
            client_register(addr, "fresh", new)
        with pytest.raises(ServerError, match="identity exists"):
            client_register(addr, "user00", new)
        with pytest.raises(ServerError, match="invalid user id"):
            client_register(addr, "../evil", new)
    # persisted: a restarted server sees the registration
    with running_server(gallery_dir) as server:
        assert client_verify(server.server_address[:2], "fresh", new)


def test_register_client_validation(gallery_dir):
    with pytest.raises(ValueError):
        client_register(("127.0.0.1", 1), "someone", [])
    with pytest.raises(ValueError):
        client_register(("127.0.0.1", 1), "", ["x.pgm"])


def test_dimension_mismatch_and_bad_frames(gallery_dir):
    with running_server(gallery_dir) as server:
        addr = server.server_address[:2]
        with pytest.raises(ServerError, match="dimension mismatch"):
            client_verify(addr, "user00", sorted(gallery_dir.glob("user00_*.pgm")), DescriptorConfig(radii=(1,)))
        with socket.create_connection(addr) as sock:
            sock.sendall(wire.HEADER.pack(3, 0x55) + b"abc")
            reply = wire.read_message(sock)
            assert isinstance(reply, wire.ErrorMessage) and "protocol error" in reply.message
            assert wire.read_message(sock) is None  # connection closed afterwards
        with socket.create_connection(addr) as sock:
            wire.send_message(sock, wire.VerifyResponse(True, "x"))
            assert isinstance(wire.read_message(sock), wire.ErrorMessage)


def test_empty_gallery_error_frame(tmp_path, gallery_dir):
    (tmp_path / "empty").mkdir()
    with running_server(tmp_path / "empty") as server:
        with pytest.raises(ServerError, match="empty gallery"):
            client_verify(server.server_address[:2], "user00", sorted(gallery_dir.glob("*.pgm"))[:1])


def test_server_unreachable(gallery_dir):
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    with pytest.raises(OSError):
        client_verify(("127.0.0.1", port), "user00", sorted(gallery_dir.glob("*.pgm"))[:1])


def _fake_server(reply):
    listener = socket.create_server(("127.0.0.1", 0))

    def run():
        conn, _ = listener.accept()
        with conn:
            wire.read_message(conn)
            wire.send_message(conn, reply)
        listener.close()

    threading.Thread(target=run, daemon=True).start()
    return listener.getsockname()[:2]


def test_client_rejects_wrong_echo(gallery_dir):
    files = sorted(gallery_dir.glob("*.pgm"))[:2]
    assert not client_register(_fake_server(wire.RegisterResponse(True, "mallory")), "alice", files)
    assert not client_register(_fake_server(wire.RegisterResponse(False, "alice")), "alice", files)
    assert client_register(_fake_server(wire.RegisterResponse(True, "alice")), "alice", files)
    with pytest.raises(ProtocolError):
        client_register(_fake_server(wire.VerifyResponse(True, "alice")), "alice", files)


def test_client_distrusts_inconsistent_verify_reply(gallery_dir):
    files = sorted(gallery_dir.glob("*.pgm"))[:1]
    assert not client_verify(_fake_server(wire.VerifyResponse(True, "someone-else")), "alice", files)


def test_client_writes_nothing(gallery_dir, tmp_path, monkeypatch):
    work = tmp_path / "client"
    files = write_corpus(work, identity_corpus(1, 2, seed=5, prefix="c"))
    before = sorted(p.name for p in work.rglob("*"))
    monkeypatch.chdir(work)
    with running_server(gallery_dir) as server:
        addr = server.server_address[:2]
        client_verify(addr, "c00", files)
        client_register(addr, "c00", files)
        client_verify(addr, "c00", files)
    assert sorted(p.name for p in work.rglob("*")) == before


def test_features_computed_at_startup(gallery_dir):
    with running_server(gallery_dir) as server:
        g = server.store.snapshot()
        assert len(g) == 20 and g.dim == 9216
        name = g[0].name
        assert np.array_equal(g[0].features, extract_features(load_canonical(gallery_dir / name)))
