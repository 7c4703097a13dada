"""Newline-delimited JSON transport for the provider endpoints.

One JSON object per line, UTF-8, unknown fields ignored. Ops:

  -> {"op":"ask_price","request":{"tuple_id":str,"attr":str,"level":int},"tuple":{...}}
  <- {"ok":true,"price":number|"infinite"}
  -> {"op":"pay","price":number,"request":{...},"tuple":{...}}
  <- {"ok":true,"value":str,"level":int} | {"ok":false,"error":code}
  -> {"op":"info"}
  <- {"ok":true,"total_weight":number}

The embedded handle and the socket handle expose the same three calls so the
cleaner cannot observe the transport.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from typing import Callable

from .errors import (
    NoApplicableMD,
    NoMatch,
    PacasError,
    ProtocolError,
    QuoteMismatch,
    UnsafeRequest,
)
from .pricing import INFINITE, is_infinite
from .provider import ProviderSession, ValueRequest

_ERROR_CODES = {
    NoApplicableMD: "no_applicable_md",
    QuoteMismatch: "quote_mismatch",
    UnsafeRequest: "unsafe_request",
    NoMatch: "no_match",
}

_CODE_ERRORS = {code: exc for exc, code in _ERROR_CODES.items()}


def encode_price(amount) -> object:
    return "infinite" if is_infinite(amount) else amount


def decode_price(value) -> object:
    return INFINITE if value == "infinite" else value


def handle_message(session: ProviderSession, message: dict) -> dict:
    """Dispatch one parsed request object against a session."""
    op = message.get("op")
    try:
        if op == "ask_price":
            request = ValueRequest.from_json(message["request"])
            price = session.ask_price(request, message["tuple"])
            return {"ok": True, "price": encode_price(price)}
        if op == "pay":
            request = ValueRequest.from_json(message["request"])
            value, level = session.pay(
                decode_price(message["price"]), request, message["tuple"]
            )
            return {"ok": True, "value": value, "level": level}
        if op == "info":
            return {"ok": True, "total_weight": session.total_weight}
        return {"ok": False, "error": "unknown_op"}
    except tuple(_ERROR_CODES) as exc:
        return {"ok": False, "error": _ERROR_CODES[type(exc)], "detail": str(exc)}
    except (KeyError, TypeError, ValueError) as exc:
        return {"ok": False, "error": "invalid_request", "detail": str(exc)}
    except PacasError as exc:
        return {"ok": False, "error": "invalid_request", "detail": str(exc)}


class ProviderServer(socketserver.ThreadingTCPServer):
    """One ProviderSession per connection; sessions never share support sets."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, session_factory: Callable[[], ProviderSession]):
        self.session_factory = session_factory
        super().__init__(address, _ProviderHandler)


class _ProviderHandler(socketserver.StreamRequestHandler):
    def handle(self):
        session = self.server.session_factory()
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError:
                response = {"ok": False, "error": "bad_json"}
            else:
                response = handle_message(session, message)
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
            self.wfile.flush()


def start_server(session_factory, host: str = "127.0.0.1", port: int = 0):
    """Start a provider server on a background thread; returns (server, port)."""
    server = ProviderServer((host, port), session_factory)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, server.server_address[1]


class EmbeddedProvider:
    """In-process handle over a session; mirrors the wire semantics exactly."""

    def __init__(self, session: ProviderSession):
        self.session = session

    def ask_price(self, request: ValueRequest, client_tuple: dict):
        return self.session.ask_price(request, client_tuple)

    def pay(self, price, request: ValueRequest, client_tuple: dict):
        return self.session.pay(price, request, client_tuple)

    def total_weight(self) -> int:
        return self.session.total_weight

    def close(self) -> None:
        pass


class RemoteProvider:
    """Socket handle speaking the NDJSON protocol."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rwb")

    def _call(self, message: dict) -> dict:
        self._file.write((json.dumps(message) + "\n").encode("utf-8"))
        self._file.flush()
        raw = self._file.readline()
        if not raw:
            raise ProtocolError("connection closed by provider")
        try:
            response = json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"undecodable provider response: {exc}") from exc
        if response.get("ok"):
            return response
        code = response.get("error", "protocol_error")
        exc_type = _CODE_ERRORS.get(code, ProtocolError)
        raise exc_type(response.get("detail", code))

    def ask_price(self, request: ValueRequest, client_tuple: dict):
        response = self._call(
            {"op": "ask_price", "request": request.to_json(), "tuple": dict(client_tuple)}
        )
        return decode_price(response["price"])

    def pay(self, price, request: ValueRequest, client_tuple: dict):
        response = self._call(
            {
                "op": "pay",
                "price": encode_price(price),
                "request": request.to_json(),
                "tuple": dict(client_tuple),
            }
        )
        return response["value"], int(response["level"])

    def total_weight(self) -> int:
        return int(self._call({"op": "info"})["total_weight"])

    def close(self) -> None:
        try:
            self._file.close()
            self._sock.close()
        except OSError:
            pass
