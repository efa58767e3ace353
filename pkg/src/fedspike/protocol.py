"""Two-round federated exchange: message schema, codec, and transports.

Round 1 sends privatized projector frames client -> server, the server
broadcasts the aggregated frame, and round 2 sends privatized eigenvalue
blocks client -> server. Messages travel as UTF-8 JSON objects; matrices
are ``{"rows": .., "cols": .., "data": [..]}`` with row-major doubles
rendered at 17 significant digits, so decode(encode(m)) is bit-exact.

Three interchangeable transports are provided: in-process (plain object
hand-off), file exchange (one ``{round}_{client_id}.msg`` file per message
in a session directory), and TCP (4-byte big-endian length prefix per
frame). A seeded session produces bit-identical results on all three.
"""

from __future__ import annotations

import os
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .client import ClientConfig, local_private_eigenvalues, local_private_projector
from .messages import (
    SCHEMA_VERSION,
    BroadcastMessage,
    EigenvalueMessage,
    MessageDecodeError,
    MessageError,
    ProjectorMessage,
    decode,
    encode,
)
from .model import Dataset
from .server import (
    AggregationWeights,
    aggregate_projectors,
    assemble_covariance,
    weights_from_messages,
)

__all__ = [
    "SCHEMA_VERSION",
    "ProjectorMessage",
    "BroadcastMessage",
    "EigenvalueMessage",
    "MessageError",
    "MessageDecodeError",
    "encode",
    "decode",
    "SessionError",
    "SessionResult",
    "ClientHandle",
    "ServerHandle",
    "InProcessTransport",
    "FileTransport",
    "TcpTransport",
    "run_federated_session",
]


class SessionError(RuntimeError):
    """A federated session could not complete (dropouts, duplicates, ...)."""


class ClientHandle:
    """One participant: its data, its configuration, and its two releases."""

    def __init__(self, data: Dataset, config: ClientConfig, responsive: bool = True):
        self.data = data
        self.config = config
        self.responsive = responsive  # test hook: a silent client

    @property
    def client_id(self) -> str:
        return self.config.client_id

    def projector(self) -> ProjectorMessage:
        return local_private_projector(self.data, self.config)

    def eigenvalues(self, broadcast: BroadcastMessage) -> EigenvalueMessage:
        return local_private_eigenvalues(self.data, broadcast.u_hat_global, self.config)


class ServerHandle:
    """Central aggregation: weight choice, projector averaging, assembly.

    Weights are either computed from the (n, epsilon, delta) carried by the
    round-1 messages (needs the plug-in lam/sigma2) or supplied explicitly.
    """

    def __init__(
        self,
        rank_r: int,
        sigma2: float,
        lam: float | None = None,
        scheme: str = "optimal",
        weights: AggregationWeights | None = None,
        as_printed: bool = False,
        psd_clip: bool = False,
    ):
        if weights is None and lam is None:
            raise ValueError("either explicit weights or a lam plug-in is required")
        self.rank_r = rank_r
        self.sigma2 = sigma2
        self.lam = lam
        self.scheme = scheme
        self.explicit_weights = weights
        self.as_printed = as_printed
        self.psd_clip = psd_clip

    def weights_for(self, msgs: list[ProjectorMessage]) -> AggregationWeights:
        if self.explicit_weights is not None:
            return self.explicit_weights
        return weights_from_messages(
            msgs, self.rank_r, self.lam, self.sigma2, self.scheme, self.as_printed
        )

    def aggregate(self, msgs: list[ProjectorMessage], weights: AggregationWeights) -> BroadcastMessage:
        u_hat = aggregate_projectors(msgs, weights)
        return BroadcastMessage(u_hat)

    def assemble(
        self,
        u_hat: np.ndarray,
        eig_msgs: list[EigenvalueMessage],
        weights: AggregationWeights,
    ) -> np.ndarray:
        return assemble_covariance(u_hat, eig_msgs, weights, self.sigma2, self.psd_clip)


@dataclass
class SessionResult:
    u_hat: np.ndarray
    sigma_hat: np.ndarray
    weights: AggregationWeights
    transcript: list = field(default_factory=list)
    responders: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------

_SERVER_ID = "server"


class InProcessTransport:
    """Message objects handed over directly; the reference backend."""

    name = "inproc"

    def open(self, expected_ids: list[str]) -> None:
        self._uplink: list = []
        self._broadcast = None

    def send_from_client(self, client_id: str, msg) -> None:
        self._uplink.append(msg)

    def collect_at_server(self, expected_ids: list[str]) -> list:
        got, self._uplink = self._uplink, []
        return got

    def broadcast_from_server(self, msg: BroadcastMessage, client_ids: list[str]) -> None:
        self._broadcast = msg

    def receive_at_client(self, client_id: str) -> BroadcastMessage:
        if self._broadcast is None:
            raise SessionError(f"no broadcast available for client {client_id}")
        return self._broadcast

    def close(self) -> None:
        pass


class FileTransport:
    """One file per message, named ``{round}_{client_id}.msg``."""

    name = "file"

    def __init__(self, session_dir):
        self.session_dir = str(session_dir)

    def open(self, expected_ids: list[str]) -> None:
        os.makedirs(self.session_dir, exist_ok=True)
        self._consumed: set[str] = set()

    def _path(self, round_no: int, sender: str) -> str:
        return os.path.join(self.session_dir, f"{round_no}_{sender}.msg")

    def send_from_client(self, client_id: str, msg) -> None:
        with open(self._path(msg.round, client_id), "wb") as fh:
            fh.write(encode(msg))

    def collect_at_server(self, expected_ids: list[str]) -> list:
        # Files persist as the session record; track what was already read.
        out = []
        for cid in expected_ids:
            for round_no in (1, 2):
                path = self._path(round_no, cid)
                if path not in self._consumed and os.path.exists(path):
                    with open(path, "rb") as fh:
                        out.append(decode(fh.read()))
                    self._consumed.add(path)
        return out

    def broadcast_from_server(self, msg: BroadcastMessage, client_ids: list[str]) -> None:
        with open(self._path(msg.round, _SERVER_ID), "wb") as fh:
            fh.write(encode(msg))

    def receive_at_client(self, client_id: str) -> BroadcastMessage:
        path = self._path(2, _SERVER_ID)
        if not os.path.exists(path):
            raise SessionError(f"no broadcast file for client {client_id}")
        with open(path, "rb") as fh:
            return decode(fh.read())

    def close(self) -> None:
        pass


def _send_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(struct.pack(">I", len(payload)) + payload)


def _recv_exact(sock: socket.socket, count: int) -> bytes | None:
    buf = b""
    while len(buf) < count:
        chunk = sock.recv(count - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def _recv_frame(sock: socket.socket) -> bytes | None:
    head = _recv_exact(sock, 4)
    if head is None:
        return None
    (length,) = struct.unpack(">I", head)
    return _recv_exact(sock, length)


class TcpTransport:
    """Length-prefixed JSON frames over localhost TCP.

    A background thread accepts one connection per client and drains
    incoming frames into a queue; the server pushes the broadcast down the
    same connections. Clients are matched to connections by the client_id
    of their first frame.
    """

    name = "tcp"

    def __init__(self, host: str = "127.0.0.1", port: int = 0, timeout: float = 10.0):
        self.host = host
        self.port = port
        self.timeout = timeout

    def open(self, expected_ids: list[str]) -> None:
        self._listener = socket.create_server((self.host, self.port))
        self.port = self._listener.getsockname()[1]
        self._inbox: queue.Queue = queue.Queue()
        self._server_conns: dict[str, socket.socket] = {}
        self._client_socks: dict[str, socket.socket] = {}
        self._stop = threading.Event()
        self._threads = []
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self._threads.append(t)

    def _accept_loop(self) -> None:
        self._listener.settimeout(0.1)
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            t = threading.Thread(target=self._read_loop, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _read_loop(self, conn: socket.socket) -> None:
        while not self._stop.is_set():
            try:
                payload = _recv_frame(conn)
            except OSError:
                return
            if payload is None:
                return
            msg = decode(payload)
            sender = getattr(msg, "client_id", None)
            if sender is not None:
                self._server_conns.setdefault(sender, conn)
            self._inbox.put(msg)

    def _client_sock(self, client_id: str) -> socket.socket:
        sock = self._client_socks.get(client_id)
        if sock is None:
            sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
            self._client_socks[client_id] = sock
        return sock

    def send_from_client(self, client_id: str, msg) -> None:
        _send_frame(self._client_sock(client_id), encode(msg))

    def collect_at_server(self, expected_ids: list[str]) -> list:
        out = []
        deadline = time.monotonic() + self.timeout
        while len(out) < len(expected_ids):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                out.append(self._inbox.get(timeout=min(remaining, 0.1)))
            except queue.Empty:
                continue
        return out

    def broadcast_from_server(self, msg: BroadcastMessage, client_ids: list[str]) -> None:
        payload = encode(msg)
        for cid in client_ids:
            conn = self._server_conns.get(cid)
            if conn is None:
                raise SessionError(f"no connection for client {cid}")
            _send_frame(conn, payload)

    def receive_at_client(self, client_id: str) -> BroadcastMessage:
        sock = self._client_socks[client_id]
        sock.settimeout(self.timeout)
        payload = _recv_frame(sock)
        if payload is None:
            raise SessionError(f"connection closed before broadcast reached {client_id}")
        msg = decode(payload)
        if not isinstance(msg, BroadcastMessage):
            raise SessionError("unexpected message type on the broadcast channel")
        return msg

    def close(self) -> None:
        self._stop.set()
        for sock in self._client_socks.values():
            try:
                sock.close()
            except OSError:
                pass
        try:
            self._listener.close()
        except OSError:
            pass


# ---------------------------------------------------------------------------
# Session orchestration
# ---------------------------------------------------------------------------


def _expect(received: list, expected_ids: list[str], allow_dropout: bool, round_name: str):
    by_id: dict[str, object] = {}
    for msg in received:
        cid = msg.client_id
        if cid in by_id:
            raise SessionError(f"duplicate client_id {cid!r} in {round_name}")
        by_id[cid] = msg
    missing = sorted(set(expected_ids) - set(by_id))
    if missing and not allow_dropout:
        raise SessionError(f"clients did not respond in {round_name}: {missing}")
    if not by_id:
        raise SessionError(f"no client responded in {round_name}")
    return [by_id[cid] for cid in sorted(by_id)], missing


def run_federated_session(
    clients: list[ClientHandle],
    server: ServerHandle,
    transport,
    allow_dropout: bool = False,
) -> SessionResult:
    """Execute the two-round exchange and assemble the covariance estimate.

    Strict mode (the default) errors out listing any client that failed to
    respond; with ``allow_dropout`` the weights are renormalized over the
    responders. The transcript records every message in order handled.
    """
    ids = [c.client_id for c in clients]
    if len(set(ids)) != len(ids):
        raise SessionError("duplicate client_id among session participants")
    if not clients:
        raise SessionError("a session needs at least one client")

    transcript: list = []
    transport.open(ids)
    try:
        for client in clients:
            if client.responsive:
                transport.send_from_client(client.client_id, client.projector())
        proj_msgs, missing = _expect(
            transport.collect_at_server(ids), ids, allow_dropout, "round 1"
        )
        transcript.extend(proj_msgs)
        responders = [m.client_id for m in proj_msgs]

        weights = server.weights_for(proj_msgs)
        if missing and server.explicit_weights is not None:
            # Scheme-based weights are computed from the received messages
            # and already renormalize over responders; an explicit vector is
            # keyed to the full roster and must be restricted.
            weights = weights.restrict(responders, ids)
        broadcast = server.aggregate(proj_msgs, weights)
        transport.broadcast_from_server(broadcast, responders)
        transcript.append(broadcast)

        responding = [c for c in clients if c.client_id in responders]
        for client in responding:
            if client.responsive:
                received = transport.receive_at_client(client.client_id)
                transport.send_from_client(client.client_id, client.eigenvalues(received))
        eig_msgs, missing2 = _expect(
            transport.collect_at_server(responders), responders, allow_dropout, "round 2"
        )
        transcript.extend(eig_msgs)
        if missing2:
            weights = weights.restrict([m.client_id for m in eig_msgs], responders)
            responders = [m.client_id for m in eig_msgs]
        sigma_hat = server.assemble(broadcast.u_hat_global, eig_msgs, weights)
    finally:
        transport.close()

    return SessionResult(
        u_hat=broadcast.u_hat_global,
        sigma_hat=sigma_hat,
        weights=weights,
        transcript=transcript,
        responders=responders,
    )
