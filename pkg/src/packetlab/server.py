"""WebSocket and stdio endpoints exposing run control and the trace stream."""

import base64
import hashlib
import json
import socket
import struct
import sys
import threading

from .session import Session

PROTO_VERSION = 1
WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def encode_frame(payload: bytes, opcode: int = OP_TEXT,
                 mask: bytes | None = None) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        head += bytes([mask_bit | n])
    elif n < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", n)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", n)
    if mask:
        body = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return head + mask + body
    return head + payload


class FrameReader:
    """Incremental frame decoder; text messages may span continuations."""

    def __init__(self, recv):
        self._recv = recv
        self._buf = b""
        self._fragments: list[bytes] = []

    def _need(self, n: int) -> bytes:
        while len(self._buf) < n:
            chunk = self._recv(4096)
            if not chunk:
                raise ConnectionError("peer closed")
            self._buf += chunk
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def next_message(self):
        """Return (opcode, payload) for the next complete message."""
        while True:
            b0, b1 = self._need(2)
            fin, opcode = b0 & 0x80, b0 & 0x0F
            masked, length = b1 & 0x80, b1 & 0x7F
            if length == 126:
                (length,) = struct.unpack(">H", self._need(2))
            elif length == 127:
                (length,) = struct.unpack(">Q", self._need(8))
            mask = self._need(4) if masked else None
            payload = self._need(length)
            if mask:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode in (OP_CLOSE, OP_PING, OP_PONG):
                return opcode, payload
            self._fragments.append(payload)
            if fin:
                whole = b"".join(self._fragments)
                self._fragments = []
                return OP_TEXT, whole


def read_handshake(reader: FrameReader) -> dict:
    """Consume the HTTP upgrade request, returning its headers."""
    raw = b""
    while b"\r\n\r\n" not in raw:
        raw += reader._need(1)
    head, _, rest = raw.partition(b"\r\n\r\n")
    reader._buf = rest + reader._buf
    headers = {}
    for line in head.decode("latin-1").split("\r\n")[1:]:
        key, _, value = line.partition(":")
        headers[key.strip().lower()] = value.strip()
    return headers


class ControlServer:
    """Accepts WebSocket clients; serializes their commands into one session."""

    def __init__(self, session: Session, host: str = "127.0.0.1", port: int = 0):
        self.session = session
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)
        self.host, self.port = self._sock.getsockname()
        self._clients: list = []
        self._lock = threading.Lock()
        self._closed = False
        session.kernel.tracer.add_sink(self._trace_sink)
        session.on_status = self._status_sink
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)

    def start(self):
        self._accept_thread.start()

    def close(self):
        self._closed = True
        try:
            self._sock.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
        for conn, _ in clients:
            try:
                conn.close()
            except OSError:
                pass

    # -- fan-out ----------------------------------------------------------------

    def _broadcast(self, message: dict):
        data = encode_frame(json.dumps(message).encode())
        with self._lock:
            clients = list(self._clients)
        for conn, send_lock in clients:
            try:
                with send_lock:
                    conn.sendall(data)
            except OSError:
                self._drop(conn)

    def _trace_sink(self, record):
        self._broadcast({"type": "trace", "t": record.t, "level": record.level,
                         "comp": record.comp, "kind": record.kind,
                         "fields": record.fields})

    def _status_sink(self, status: dict):
        self._broadcast({"type": "status", **status})

    def _drop(self, conn):
        with self._lock:
            self._clients = [c for c in self._clients if c[0] is not conn]
        try:
            conn.close()
        except OSError:
            pass

    # -- per-connection ----------------------------------------------------------

    def _accept_loop(self):
        while not self._closed:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_client, args=(conn,),
                             daemon=True).start()

    def _serve_client(self, conn: socket.socket):
        send_lock = threading.Lock()
        try:
            reader = FrameReader(conn.recv)
            headers = read_handshake(reader)
            key = headers.get("sec-websocket-key", "")
            response = ("HTTP/1.1 101 Switching Protocols\r\n"
                        "Upgrade: websocket\r\n"
                        "Connection: Upgrade\r\n"
                        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n")
            conn.sendall(response.encode())
            with self._lock:
                self._clients.append((conn, send_lock))
            hello = {"type": "hello", "proto_version": PROTO_VERSION,
                     "status": self.session.status()}
            with send_lock:
                conn.sendall(encode_frame(json.dumps(hello).encode()))
            while not self._closed:
                opcode, payload = reader.next_message()
                if opcode == OP_CLOSE:
                    with send_lock:
                        conn.sendall(encode_frame(payload, OP_CLOSE))
                    break
                if opcode == OP_PING:
                    with send_lock:
                        conn.sendall(encode_frame(payload, OP_PONG))
                    continue
                if opcode == OP_PONG:
                    continue
                self._handle_text(conn, send_lock, payload)
        except (ConnectionError, OSError):
            pass
        finally:
            self._drop(conn)

    def _handle_text(self, conn, send_lock, payload: bytes):
        def reply(message: dict):
            data = encode_frame(json.dumps(message).encode())
            try:
                with send_lock:
                    conn.sendall(data)
            except OSError:
                self._drop(conn)

        try:
            msg = json.loads(payload.decode())
            if not isinstance(msg, dict):
                raise ValueError("message must be an object")
        except (ValueError, UnicodeDecodeError) as exc:
            reply({"type": "err", "id": None, "error": f"malformed: {exc}"})
            return
        rid = msg.get("id")
        cmd = {k: v for k, v in msg.items() if k not in ("type", "id")}

        def on_done(result: dict):
            if result.pop("ok", False):
                reply({"type": "ok", "id": rid, **result})
            else:
                reply({"type": "err", "id": rid,
                       "error": result.get("error", "failed")})

        self.session.submit(cmd, on_done)


def serve_stdio(session: Session, stdin=None, stdout=None):
    """Same message schema over stdio lines; runs the session loop inline."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def emit(message: dict):
        stdout.write(json.dumps(message) + "\n")
        stdout.flush()

    session.kernel.tracer.add_sink(
        lambda r: emit({"type": "trace", "t": r.t, "level": r.level,
                        "comp": r.comp, "kind": r.kind, "fields": r.fields}))
    session.on_status = lambda status: emit({"type": "status", **status})
    emit({"type": "hello", "proto_version": PROTO_VERSION,
          "status": session.status()})
    loop_thread = threading.Thread(target=session.loop, daemon=True)
    loop_thread.start()
    try:
        for line in stdin:
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
                if not isinstance(msg, dict):
                    raise ValueError("message must be an object")
            except ValueError as exc:
                emit({"type": "err", "id": None, "error": f"malformed: {exc}"})
                continue
            rid = msg.get("id")
            cmd = {k: v for k, v in msg.items() if k not in ("type", "id")}
            done = threading.Event()
            box = {}

            def on_done(result, box=box, done=done):
                box.update(result)
                done.set()

            session.submit(cmd, on_done)
            done.wait()
            if box.pop("ok", False):
                emit({"type": "ok", "id": rid, **box})
            else:
                emit({"type": "err", "id": rid,
                      "error": box.get("error", "failed")})
    finally:
        session.close()
        loop_thread.join(timeout=1.0)
