"""Client state machine and the two message transports.

Both transports carry the same encoded bytes; the coordinator always reads
uploads back in ascending client id order.
"""
from __future__ import annotations

import queue
import socket
import struct
import threading
import traceback

from ..numcore import ParameterVector
from .codec import (ACCEPT_MAGIC, BROADCAST, ERROR_MAGIC, REJECT_MAGIC, UPLOAD, RoundMessage,
                    decode_hello, decode_message, decode_text, encode_hello, encode_message,
                    encode_text)
from .config import FEDPER_PARTIAL, FederationConfig
from .training import LocalMetrics, local_train

_LEN = struct.Struct("<I")
HANDSHAKE_TIMEOUT = 30.0


class FederationError(RuntimeError):
    """A round was aborted; no aggregation happened for it."""


class HandshakeError(FederationError):
    pass


class FederatedClient:
    """One silo: owns its data and full local model, answers broadcasts with uploads."""

    def __init__(self, dataset, task, config: FederationConfig):
        self.dataset = dataset
        self.task = task
        self.config = config
        self.client_id = dataset.client_id
        self.params: ParameterVector | None = None
        self.local_test_mse: float | None = None
        self.last_metrics: LocalMetrics | None = None

    def receive(self, msg: RoundMessage) -> ParameterVector:
        if msg.direction != BROADCAST:
            raise FederationError(f"client {self.client_id}: expected a broadcast")
        if self.params is None or set(msg.segments.names) == set(self.params.names):
            self.params = msg.segments
        else:
            self.params = self.params.replace(msg.segments)
        return self.params

    def handle(self, payload: bytes) -> bytes:
        msg = decode_message(payload)
        w = self.receive(msg)
        w_out, metrics = local_train(w, self.dataset, self.config, self.task, round_index=msg.round)
        self.params = w_out
        self.last_metrics = metrics
        self.local_test_mse = self.task.mse(w_out, self.dataset.test)
        up = w_out
        if self.config.aggregation_mode == FEDPER_PARTIAL:
            up = w_out.select(self.config.shared_segment_names)
        return encode_message(RoundMessage(UPLOAD, msg.round, up, self.client_id, self.dataset.n_k))

    def model_with(self, shared: ParameterVector) -> ParameterVector:
        """Full model: aggregated shared part plus this client's private segments."""
        if self.params is None:
            return shared
        return self.params.replace(shared)


def _error_reply(client_id: int, exc: BaseException) -> bytes:
    tb = traceback.format_exception_only(type(exc), exc)[-1].strip()
    return encode_text(ERROR_MAGIC, f"client {client_id}: {tb}")


class InProcessTransport:
    """Ordered in-memory queues; clients run in the caller's thread in id order."""

    def __init__(self, clients: list[FederatedClient]):
        self.clients = {c.client_id: c for c in clients}
        self.down = {cid: queue.SimpleQueue() for cid in self.clients}
        self.up = {cid: queue.SimpleQueue() for cid in self.clients}

    def exchange(self, payloads: dict[int, bytes]) -> dict[int, bytes]:
        for cid in sorted(payloads):
            self.down[cid].put(payloads[cid])
        for cid in sorted(payloads):
            client = self.clients[cid]
            try:
                reply = client.handle(self.down[cid].get())
            except Exception as exc:  # surfaces as a round abort below
                reply = _error_reply(cid, exc)
            self.up[cid].put(reply)
        return {cid: self.up[cid].get() for cid in sorted(payloads)}

    def close(self) -> None:
        pass


def send_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(_LEN.pack(len(payload)) + payload)


def recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            raise ConnectionError(f"connection closed after {len(buf)} of {n} bytes")
        buf.extend(chunk)
    return bytes(buf)


def recv_frame(sock: socket.socket) -> bytes:
    (n,) = _LEN.unpack(recv_exact(sock, 4))
    return recv_exact(sock, n)


def client_loop(client: FederatedClient, host: str, port: int, digest: bytes) -> str:
    """Connect, say hello, then answer broadcasts until the coordinator hangs up.

    Returns ``"rejected: ..."`` or ``"closed"``.
    """
    with socket.create_connection((host, port), timeout=HANDSHAKE_TIMEOUT) as sock:
        send_frame(sock, encode_hello(client.client_id, digest))
        reply = recv_frame(sock)
        if reply[:4] == REJECT_MAGIC:
            return "rejected: " + decode_text(reply)
        sock.settimeout(None)
        while True:
            try:
                payload = recv_frame(sock)
            except ConnectionError:
                return "closed"
            try:
                out = client.handle(payload)
            except Exception as exc:
                out = _error_reply(client.client_id, exc)
            send_frame(sock, out)


class SocketTransport:
    """Length-prefixed frames over loopback TCP; each client runs in its own thread."""

    def __init__(self, clients: list[FederatedClient], config: FederationConfig,
                 host: str = "127.0.0.1", client_digests: dict[int, bytes] | None = None):
        self.expected = {c.client_id for c in clients}
        self.digest = config.digest()
        self.server = socket.create_server((host, config.port))
        self.server.settimeout(HANDSHAKE_TIMEOUT)
        port = self.server.getsockname()[1]
        self.outcomes: dict[int, str] = {}
        self.threads = []
        for c in clients:
            d = (client_digests or {}).get(c.client_id, self.digest)
            t = threading.Thread(target=self._run_client, args=(c, host, port, d),
                                 name=f"fedsilo-client-{c.client_id}", daemon=True)
            t.start()
            self.threads.append(t)
        self.conns: dict[int, socket.socket] = {}
        try:
            self._handshake(len(clients))
        except Exception:
            self.close()
            raise

    def _run_client(self, client, host, port, digest):
        try:
            self.outcomes[client.client_id] = client_loop(client, host, port, digest)
        except Exception as exc:
            self.outcomes[client.client_id] = f"error: {exc}"

    def _handshake(self, k: int) -> None:
        rejected = []
        for _ in range(k):
            conn, _addr = self.server.accept()
            conn.settimeout(HANDSHAKE_TIMEOUT)
            cid, digest = decode_hello(recv_frame(conn))
            reason = None
            if digest != self.digest:
                reason = "config hash mismatch"
            elif cid not in self.expected or cid in self.conns:
                reason = f"unexpected client id {cid}"
            if reason:
                send_frame(conn, encode_text(REJECT_MAGIC, reason))
                conn.close()
                rejected.append(f"client {cid}: {reason}")
                continue
            send_frame(conn, ACCEPT_MAGIC)
            conn.settimeout(None)
            self.conns[cid] = conn
        if rejected:
            raise HandshakeError("; ".join(rejected))

    def exchange(self, payloads: dict[int, bytes]) -> dict[int, bytes]:
        for cid in sorted(payloads):
            send_frame(self.conns[cid], payloads[cid])
        return {cid: recv_frame(self.conns[cid]) for cid in sorted(payloads)}

    def close(self) -> None:
        for conn in self.conns.values():
            try:
                conn.close()
            except OSError:
                pass
        self.conns = {}
        self.server.close()
        for t in self.threads:
            t.join(timeout=HANDSHAKE_TIMEOUT)


def make_transport(clients: list[FederatedClient], config: FederationConfig):
    if config.transport == "socket":
        return SocketTransport(clients, config)
    return InProcessTransport(clients)


def check_reply(cid: int, reply: bytes, round_index: int) -> RoundMessage:
    if reply[:4] == ERROR_MAGIC:
        raise FederationError(f"round {round_index} aborted: {decode_text(reply)}")
    msg = decode_message(reply)
    if msg.direction != UPLOAD or msg.client_id != cid or msg.round != round_index:
        raise FederationError(
            f"round {round_index} aborted: unexpected message from client {cid} "
            f"(direction {msg.direction}, client {msg.client_id}, round {msg.round})")
    return msg
