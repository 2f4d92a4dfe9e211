"""Minimal synchronous PostgreSQL wire-protocol (v3) client.

Implements the simple-query flow with trust, cleartext, md5, and
SCRAM-SHA-256 authentication. Values arrive in text mode and are converted to
Python types by column OID so result hashing matches the sqlite simulator.
No driver package is required; the protocol framing lives here.
"""

from __future__ import annotations

import base64
import decimal
import hashlib
import hmac
import os
import socket
import struct
from urllib.parse import unquote, urlparse


class PgTransportError(Exception):
    pass


class PgQueryError(Exception):
    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        self.code = code or ""


class PgProtocolError(PgTransportError):
    pass


_BOOL_OID = 16
_INT_OIDS = frozenset({20, 21, 23, 26})
_FLOAT_OIDS = frozenset({700, 701})
_NUMERIC_OID = 1700


def _convert(value: str | None, oid: int) -> object:
    if value is None:
        return None
    if oid == _BOOL_OID:
        return value == "t"
    if oid in _INT_OIDS:
        return int(value)
    if oid in _FLOAT_OIDS:
        return float(value)
    if oid == _NUMERIC_OID:
        return decimal.Decimal(value)
    return value


def parse_dsn(dsn: str) -> dict:
    parsed = urlparse(dsn)
    if parsed.scheme not in ("postgres", "postgresql"):
        raise ValueError(f"unsupported DSN scheme: {parsed.scheme!r}")
    return {
        "host": parsed.hostname or "localhost",
        "port": parsed.port or 5432,
        "user": unquote(parsed.username or os.environ.get("USER", "postgres")),
        "password": unquote(parsed.password or ""),
        "database": (parsed.path or "/postgres").lstrip("/") or "postgres",
    }


def encode_startup(user: str, database: str) -> bytes:
    body = struct.pack("!i", 196608)  # protocol 3.0
    for key, val in (("user", user), ("database", database), ("application_name", "slowforge")):
        body += key.encode() + b"\x00" + val.encode() + b"\x00"
    body += b"\x00"
    return struct.pack("!i", len(body) + 4) + body


def encode_message(kind: bytes, body: bytes) -> bytes:
    return kind + struct.pack("!i", len(body) + 4) + body


def encode_query(sql: str) -> bytes:
    return encode_message(b"Q", sql.encode("utf-8") + b"\x00")


def encode_password(secret: bytes) -> bytes:
    return encode_message(b"p", secret + b"\x00")


def md5_password(user: str, password: str, salt: bytes) -> bytes:
    inner = hashlib.md5(password.encode() + user.encode()).hexdigest()
    return b"md5" + hashlib.md5(inner.encode() + salt).hexdigest().encode()


def parse_error_fields(body: bytes) -> dict[str, str]:
    fields: dict[str, str] = {}
    for chunk in body.split(b"\x00"):
        if chunk:
            fields[chr(chunk[0])] = chunk[1:].decode("utf-8", "replace")
    return fields


def parse_row_description(body: bytes) -> list[int]:
    (count,) = struct.unpack_from("!h", body, 0)
    offset = 2
    oids: list[int] = []
    for _ in range(count):
        end = body.index(b"\x00", offset)
        offset = end + 1
        _table_oid, _attnum, oid, _typlen, _typmod, _fmt = struct.unpack_from(
            "!ihihih", body, offset
        )
        offset += 18
        oids.append(oid)
    return oids


def parse_data_row(body: bytes) -> list[str | None]:
    (count,) = struct.unpack_from("!h", body, 0)
    offset = 2
    values: list[str | None] = []
    for _ in range(count):
        (length,) = struct.unpack_from("!i", body, offset)
        offset += 4
        if length < 0:
            values.append(None)
        else:
            values.append(body[offset : offset + length].decode("utf-8"))
            offset += length
    return values


class ScramClient:
    """SCRAM-SHA-256 (RFC 5802/7677) client side."""

    def __init__(self, user: str, password: str, nonce: str | None = None):
        # PostgreSQL takes the username from the startup packet, so callers
        # pass user="" there; the field is kept for RFC test vectors.
        self.password = password
        self.nonce = nonce or base64.b64encode(os.urandom(18)).decode()
        self.client_first_bare = f"n={user},r={self.nonce}"
        self.auth_message = ""
        self._salted: bytes = b""

    def client_first(self) -> str:
        return "n,," + self.client_first_bare

    def client_final(self, server_first: str) -> str:
        attrs = dict(part.split("=", 1) for part in server_first.split(","))
        server_nonce = attrs["r"]
        if not server_nonce.startswith(self.nonce):
            raise PgProtocolError("server nonce does not extend client nonce")
        salt = base64.b64decode(attrs["s"])
        iterations = int(attrs["i"])
        self._salted = hashlib.pbkdf2_hmac(
            "sha256", self.password.encode(), salt, iterations
        )
        client_key = hmac.new(self._salted, b"Client Key", hashlib.sha256).digest()
        stored_key = hashlib.sha256(client_key).digest()
        without_proof = f"c=biws,r={server_nonce}"
        self.auth_message = ",".join(
            (self.client_first_bare, server_first, without_proof)
        )
        signature = hmac.new(
            stored_key, self.auth_message.encode(), hashlib.sha256
        ).digest()
        proof = bytes(a ^ b for a, b in zip(client_key, signature))
        return f"{without_proof},p={base64.b64encode(proof).decode()}"

    def verify_server_final(self, server_final: str) -> bool:
        attrs = dict(part.split("=", 1) for part in server_final.split(","))
        server_key = hmac.new(self._salted, b"Server Key", hashlib.sha256).digest()
        expected = hmac.new(
            server_key, self.auth_message.encode(), hashlib.sha256
        ).digest()
        return base64.b64decode(attrs["v"]) == expected


class PgConnection:
    def __init__(self, sock: socket.socket, user: str, password: str):
        self._sock = sock
        self._user = user
        self._password = password
        self._buffer = b""
        self._timeout_ms: int | None = None

    # -- connection lifecycle ------------------------------------------------

    @classmethod
    def connect(cls, dsn: str, connect_timeout: float = 10.0) -> "PgConnection":
        params = parse_dsn(dsn)
        try:
            sock = socket.create_connection(
                (params["host"], params["port"]), timeout=connect_timeout
            )
        except OSError as exc:
            raise PgTransportError(f"cannot connect to {params['host']}: {exc}") from exc
        sock.settimeout(None)
        conn = cls(sock, params["user"], params["password"])
        conn._send(encode_startup(params["user"], params["database"]))
        conn._authenticate()
        conn._drain_until_ready()
        return conn

    def close(self) -> None:
        try:
            self._send(encode_message(b"X", b""))
        except Exception:
            pass
        self._sock.close()

    # -- protocol I/O ----------------------------------------------------------

    def _send(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise PgTransportError(f"send failed: {exc}") from exc

    def _recv_message(self) -> tuple[bytes, bytes]:
        while len(self._buffer) < 5:
            self._fill()
        kind = self._buffer[0:1]
        (length,) = struct.unpack_from("!i", self._buffer, 1)
        total = 1 + length
        while len(self._buffer) < total:
            self._fill()
        body = self._buffer[5:total]
        self._buffer = self._buffer[total:]
        return kind, body

    def _fill(self) -> None:
        try:
            chunk = self._sock.recv(65536)
        except OSError as exc:
            raise PgTransportError(f"recv failed: {exc}") from exc
        if not chunk:
            raise PgTransportError("connection closed by server")
        self._buffer += chunk

    # -- auth -------------------------------------------------------------------

    def _authenticate(self) -> None:
        while True:
            kind, body = self._recv_message()
            if kind == b"E":
                fields = parse_error_fields(body)
                raise PgTransportError(fields.get("M", "authentication failed"))
            if kind != b"R":
                raise PgProtocolError(f"expected auth message, got {kind!r}")
            (code,) = struct.unpack_from("!i", body, 0)
            if code == 0:
                return
            if code == 3:
                self._send(encode_password(self._password.encode()))
            elif code == 5:
                salt = body[4:8]
                self._send(encode_password(md5_password(self._user, self._password, salt)))
            elif code == 10:
                mechanisms = body[4:].split(b"\x00")
                if b"SCRAM-SHA-256" not in mechanisms:
                    raise PgProtocolError("server offers no supported SASL mechanism")
                self._scram = ScramClient("", self._password)
                first = self._scram.client_first().encode()
                payload = b"SCRAM-SHA-256\x00" + struct.pack("!i", len(first)) + first
                self._send(encode_message(b"p", payload))
            elif code == 11:
                final = self._scram.client_final(body[4:].decode())
                self._send(encode_message(b"p", final.encode()))
            elif code == 12:
                if not self._scram.verify_server_final(body[4:].decode()):
                    raise PgProtocolError("server SCRAM signature mismatch")
            else:
                raise PgProtocolError(f"unsupported authentication request {code}")

    def _drain_until_ready(self) -> None:
        while True:
            kind, body = self._recv_message()
            if kind == b"Z":
                return
            if kind == b"E":
                fields = parse_error_fields(body)
                raise PgTransportError(fields.get("M", "startup failed"))
            # ParameterStatus / BackendKeyData / NoticeResponse are informational.

    # -- queries -----------------------------------------------------------------

    def set_statement_timeout(self, timeout_seconds: float) -> None:
        millis = max(1, int(timeout_seconds * 1000))
        if millis == self._timeout_ms:
            return
        self.query(f"SET statement_timeout = {millis}")
        self._timeout_ms = millis

    def query(self, sql: str) -> list[tuple]:
        self._send(encode_query(sql))
        oids: list[int] = []
        rows: list[tuple] = []
        error: PgQueryError | None = None
        while True:
            kind, body = self._recv_message()
            if kind == b"T":
                oids = parse_row_description(body)
            elif kind == b"D":
                values = parse_data_row(body)
                rows.append(
                    tuple(_convert(v, oids[i] if i < len(oids) else 25) for i, v in enumerate(values))
                )
            elif kind == b"E":
                fields = parse_error_fields(body)
                error = PgQueryError(fields.get("M", "query failed"), fields.get("C"))
            elif kind == b"Z":
                if error is not None:
                    raise error
                return rows
            elif kind in (b"C", b"I", b"N", b"S"):
                continue
            else:
                raise PgProtocolError(f"unexpected message {kind!r}")
