"""Network plumbing for an agent: TCP frame transport and the console bridge.

Frames travel as newline-delimited JSON over TCP between agents.  The same
frames travel one-per-text-frame over a WebSocket bridge so a browser can
register as an agent identity and answer queries by hand; registration is
connection metadata (the ``as`` query parameter), not a protocol message.

The core agent logic is synchronous and lock-protected; connections feed it
one frame at a time, which keeps per-session FIFO order without any
per-session machinery here.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import mimetypes
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlsplit

from . import protocol as proto
from .agent import AgentCore
from .formula import AgentId
from .protocol import Message, ProtocolError

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class TcpSink:
    def __init__(self, writer: asyncio.StreamWriter):
        self.writer = writer

    async def send(self, msg: Message):
        self.writer.write(proto.encode(msg))
        await self.writer.drain()


class WsSink:
    def __init__(self, writer: asyncio.StreamWriter):
        self.writer = writer

    async def send(self, msg: Message):
        payload = proto.encode(msg).rstrip(b"\n")
        self.writer.write(ws_frame(OP_TEXT, payload))
        await self.writer.drain()


def ws_frame(opcode: int, payload: bytes) -> bytes:
    """One unmasked (server-side) frame."""
    head = bytearray([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head.append(n)
    elif n < 1 << 16:
        head.append(126)
        head += n.to_bytes(2, "big")
    else:
        head.append(127)
        head += n.to_bytes(8, "big")
    return bytes(head) + payload


WS_MAX_FRAME = 1 << 20


async def ws_read_frame(reader: asyncio.StreamReader) -> "tuple[int, bytes]":
    b1, b2 = await reader.readexactly(2)
    opcode = b1 & 0x0F
    masked = bool(b2 & 0x80)
    n = b2 & 0x7F
    if n == 126:
        n = int.from_bytes(await reader.readexactly(2), "big")
    elif n == 127:
        n = int.from_bytes(await reader.readexactly(8), "big")
    if n > WS_MAX_FRAME:
        raise ConnectionError(f"websocket frame of {n} bytes is over budget")
    mask = await reader.readexactly(4) if masked else b""
    payload = await reader.readexactly(n)
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


class AgentServer:
    """Host one agent: accept frames, dispatch to the core, route replies."""

    def __init__(self, core: AgentCore, routes: Optional[dict] = None,
                 assets: Optional[Path] = None):
        self.core = core
        self.routes = dict(routes or {})       # agent address -> "host:port"
        self.assets = Path(assets) if assets else None
        self.lock = asyncio.Lock()
        self.session_sinks: dict = {}          # session id -> sink to its peer
        self.console_sinks: dict = {}          # registered identity -> WsSink
        self._servers: list = []
        self._tasks: set = set()

    # -- lifecycle ---------------------------------------------------------------

    async def start(self, host: str, port: int,
                    console: "tuple[str, int] | None" = None) -> "tuple[str, int]":
        server = await asyncio.start_server(self._tcp_conn, host, port)
        self._servers.append(server)
        if console:
            chost, cport = console
            self._servers.append(
                await asyncio.start_server(self._console_conn, chost, cport))
        return server.sockets[0].getsockname()[:2]

    async def stop(self):
        for server in self._servers:
            server.close()
            await server.wait_closed()
        for task in list(self._tasks):
            task.cancel()

    def console_port(self) -> int:
        return self._servers[1].sockets[0].getsockname()[1]

    # -- frame dispatch -------------------------------------------------------------

    async def dispatch(self, msg: Message, origin):
        async with self.lock:
            if msg.type == proto.QUERY and msg.session not in self.session_sinks:
                self.session_sinks[msg.session] = origin
            try:
                outs = self.core.handle(msg)
            except Exception as exc:   # a bug must not kill the connection
                self.core.trace(f"internal error handling {msg.type} "
                                f"on {msg.session}: {exc!r}")
                outs = [(AgentId(self.core.owner.address),
                         proto.error(msg.session, str(self.core.owner), 0,
                                     proto.E_PARSE, "internal error"))]
        for dest, out in outs:
            await self._route(dest, out, origin)

    async def _route(self, dest: AgentId, msg: Message, origin):
        sink = self.session_sinks.get(msg.session)
        if sink is None and msg.type == proto.QUERY:
            sink = await self._open_peer(dest, msg.session)
            if sink is None:
                await self._fail_session(dest, msg.session,
                                         f"no route to agent {dest}")
                return
        if sink is None:
            sink = origin
        try:
            await sink.send(msg)
        except (ConnectionError, RuntimeError) as exc:
            await self._fail_session(dest, msg.session, f"send failed: {exc}")

    async def _open_peer(self, dest: AgentId, session: str):
        """Console registrations win over the static routing table."""
        sink = self.console_sinks.get(str(dest))
        if sink is not None:
            self.session_sinks[session] = sink
            return sink
        addr = self.routes.get(str(dest))
        if addr is None:
            return None
        host, _, port = addr.rpartition(":")
        try:
            reader, writer = await asyncio.open_connection(host, int(port))
        except (OSError, ValueError):
            return None
        sink = TcpSink(writer)
        self.session_sinks[session] = sink
        task = asyncio.ensure_future(self._pump_tcp(reader, sink))
        self._tasks.add(task)
        task.add_done_callback(self._tasks.discard)
        return sink

    async def _fail_session(self, dest: AgentId, session: str, reason: str):
        """Surface a transport failure as an inbound error on the session."""
        synthetic = proto.error(session, str(dest), 0, proto.E_REFUSED, reason)
        await self.dispatch(synthetic, origin=_NullSink())

    # -- TCP ---------------------------------------------------------------------------

    async def _tcp_conn(self, reader: asyncio.StreamReader,
                        writer: asyncio.StreamWriter):
        sink = TcpSink(writer)
        try:
            await self._pump_tcp(reader, sink)
        finally:
            writer.close()

    async def _pump_tcp(self, reader: asyncio.StreamReader, sink):
        while True:
            line = await reader.readline()
            if not line:
                return
            if not line.strip():
                continue
            await self._feed(line, sink)

    async def _feed(self, raw: bytes, sink):
        try:
            msg = proto.decode(raw)
        except ProtocolError as exc:
            reply = proto.error("-", str(self.core.owner), 0,
                                proto.E_PARSE, exc.text)
            try:
                await sink.send(reply)
            except (ConnectionError, RuntimeError):
                pass
            return
        await self.dispatch(msg, sink)

    # -- console bridge (HTTP + WebSocket) ------------------------------------------------

    async def _console_conn(self, reader: asyncio.StreamReader,
                            writer: asyncio.StreamWriter):
        try:
            head = await reader.readuntil(b"\r\n\r\n")
        except (asyncio.IncompleteReadError, asyncio.LimitOverrunError):
            writer.close()
            return
        request, headers = _parse_http_head(head)
        if request is None:
            writer.close()
            return
        method, target = request
        url = urlsplit(target)
        if headers.get("upgrade", "").lower() == "websocket":
            await self._ws_session(reader, writer, url, headers)
        elif method == "GET":
            await self._static(writer, url.path)
        else:
            writer.write(b"HTTP/1.1 405 Method Not Allowed\r\n\r\n")
            await writer.drain()
            writer.close()

    async def _ws_session(self, reader, writer, url, headers):
        key = headers.get("sec-websocket-key")
        identity = (parse_qs(url.query).get("as") or [""])[0]
        if not key or not identity:
            writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
            await writer.drain()
            writer.close()
            return
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        writer.write((f"HTTP/1.1 101 Switching Protocols\r\n"
                      f"Upgrade: websocket\r\nConnection: Upgrade\r\n"
                      f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())
        await writer.drain()
        sink = WsSink(writer)
        self.console_sinks[identity] = sink
        self.core.trace(f"console registered as {identity}")
        try:
            while True:
                opcode, payload = await ws_read_frame(reader)
                if opcode == OP_CLOSE:
                    writer.write(ws_frame(OP_CLOSE, b""))
                    await writer.drain()
                    return
                if opcode == OP_PING:
                    writer.write(ws_frame(OP_PONG, payload))
                    await writer.drain()
                    continue
                if opcode == OP_TEXT:
                    await self._feed(payload, sink)
        except (asyncio.IncompleteReadError, ConnectionError):
            return
        finally:
            if self.console_sinks.get(identity) is sink:
                del self.console_sinks[identity]
                self.core.trace(f"console for {identity} disconnected")
            writer.close()

    async def _static(self, writer, path: str):
        body, status, ctype = b"not found", "404 Not Found", "text/plain"
        if self.assets:
            name = path.lstrip("/") or "index.html"
            candidate = (self.assets / name).resolve()
            root = self.assets.resolve()
            if candidate.is_relative_to(root) and candidate.is_file():
                body = candidate.read_bytes()
                status = "200 OK"
                ctype = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        writer.write((f"HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\n"
                      f"Content-Length: {len(body)}\r\n"
                      f"Connection: close\r\n\r\n").encode() + body)
        await writer.drain()
        writer.close()


class _NullSink:
    async def send(self, msg: Message):
        pass


def _parse_http_head(head: bytes):
    try:
        lines = head.decode("latin-1").split("\r\n")
        method, target, _version = lines[0].split(" ", 2)
    except ValueError:
        return None, {}
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            name, value = line.split(":", 1)
            headers[name.strip().lower()] = value.strip()
    return (method, target), headers
