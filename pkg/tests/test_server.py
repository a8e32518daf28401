import asyncio
import base64
import functools
import hashlib
import os
import random
from pathlib import Path

from choicelogic import protocol as proto
from choicelogic.agent import AgentCore, load_kb
from choicelogic.client import ask
from choicelogic.protocol import decode, encode
from choicelogic.server import WS_GUID, AgentServer, ws_read_frame

KB_DIR = Path(__file__).resolve().parents[1] / "kb"
GOAL = "green + blue + yellow + red"


def async_test(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        asyncio.run(fn(*args, **kwargs))
    return wrapper


def core(name, trace=None):
    return AgentCore(load_kb((KB_DIR / name).read_text()), trace=trace)


async def start_weather_and_dress(trace=None):
    weather = AgentServer(core("weather.kb"))
    _wh, wport = await weather.start("127.0.0.1", 0)
    dress = AgentServer(core("dress.kb", trace=trace),
                        routes={"weather.com": f"127.0.0.1:{wport}"})
    _dh, dport = await dress.start("127.0.0.1", 0)
    return weather, dress, wport, dport


@async_test
async def test_ask_dress_over_loopback():
    weather, dress, _wp, dport = await start_weather_and_dress()
    try:
        result = await ask("127.0.0.1", dport, GOAL, timeout=5)
        assert result.exit_code == 0
        assert result.answer == "green"
    finally:
        await dress.stop()
        await weather.stop()


@async_test
async def test_ask_weather_directly():
    weather = AgentServer(core("weather.kb"))
    _h, port = await weather.start("127.0.0.1", 0)
    try:
        result = await ask("127.0.0.1", port, "cloudy + sunny", timeout=5)
        assert (result.exit_code, result.answer) == (0, "cloudy")
        result = await ask("127.0.0.1", port, "hot + cold", timeout=5)
        assert (result.exit_code, result.answer) == (0, "hot")
    finally:
        await weather.stop()


@async_test
async def test_refused_query_exit_code():
    weather = AgentServer(core("weather.kb"))
    _h, port = await weather.start("127.0.0.1", 0)
    try:
        result = await ask("127.0.0.1", port, "p + ~p", timeout=5)
        assert result.exit_code == 2
        assert "blocking" in result.detail
    finally:
        await weather.stop()


@async_test
async def test_elementary_provable_query_acks():
    weather = AgentServer(core("weather.kb"))
    _h, port = await weather.start("127.0.0.1", 0)
    try:
        result = await ask("127.0.0.1", port, "cloudy", timeout=5)
        assert (result.exit_code, result.answer) == (0, "cloudy")
        result = await ask("127.0.0.1", port, "cloudy /\\ hot", timeout=5)
        assert result.exit_code == 0
    finally:
        await weather.stop()


@async_test
async def test_unreachable_resource_aborts_with_refused():
    dress = AgentServer(core("dress.kb"))       # no route to weather.com
    _h, port = await dress.start("127.0.0.1", 0)
    try:
        result = await ask("127.0.0.1", port, GOAL, timeout=5)
        assert result.exit_code == 2
        assert "refused" in result.detail
    finally:
        await dress.stop()


@async_test
async def test_interactive_chooser_drives_user_choices():
    weather = AgentServer(core("weather.kb"))
    _h, port = await weather.start("127.0.0.1", 0)
    try:
        picks = []

        def chooser(sc):
            picks.append(sc.spec)
            return 2

        result = await ask("127.0.0.1", port, "cloudy & (cloudy + sunny)",
                           chooser=chooser, timeout=5)
        assert result.exit_code == 0
        assert result.answer == "cloudy"
        assert picks == [()]
    finally:
        await weather.stop()


@async_test
async def test_goal_requiring_a_win_against_every_weather_is_refused():
    # the machine cannot promise green when the user may pin it there but
    # the weather may answer sunny or cold
    weather, dress, _wp, dport = await start_weather_and_dress()
    try:
        result = await ask("127.0.0.1", dport, "green & (green + blue)",
                           chooser=lambda sc: 1, timeout=5)
        assert result.exit_code == 2
    finally:
        await dress.stop()
        await weather.stop()


@async_test
async def test_sixteen_concurrent_clients_two_schedules():
    weather, dress, _wp, dport = await start_weather_and_dress()
    goals = [GOAL, "blue + green + yellow + red",
             "yellow + red + green + blue", "cloudy + sunny"]
    try:
        async def run_schedule(seed):
            rng = random.Random(seed)

            async def one(i):
                await asyncio.sleep(rng.random() * 0.05)
                result = await ask("127.0.0.1", dport, goals[i % len(goals)],
                                   asker=f"user{i}", timeout=10)
                return i, result.exit_code, result.answer

            order = list(range(16))
            rng.shuffle(order)
            return sorted(await asyncio.gather(*(one(i) for i in order)))

        first = await run_schedule(1)
        second = await run_schedule(2)
        assert first == second
        assert all(code == 0 for _i, code, _a in first)
        for i, _code, answer in first:
            expected = "cloudy" if goals[i % len(goals)] == "cloudy + sunny" else "green"
            assert answer == expected
    finally:
        await dress.stop()
        await weather.stop()


@async_test
async def test_malformed_frame_gets_parse_error():
    weather = AgentServer(core("weather.kb"))
    _h, port = await weather.start("127.0.0.1", 0)
    try:
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        writer.write(b"this is not json\n")
        await writer.drain()
        reply = decode(await asyncio.wait_for(reader.readline(), 5))
        assert reply.type == "ERROR"
        assert reply.payload["code"] == "parse-error"
        writer.close()
    finally:
        await weather.stop()


# --- the console bridge -----------------------------------------------------------------


def mask_frame(payload: bytes) -> bytes:
    """One masked client-side text frame."""
    mask = os.urandom(4)
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    head = bytearray([0x81])
    n = len(masked)
    if n < 126:
        head.append(0x80 | n)
    elif n < 1 << 16:
        head.append(0x80 | 126)
        head += n.to_bytes(2, "big")
    else:
        head.append(0x80 | 127)
        head += n.to_bytes(8, "big")
    return bytes(head) + mask + masked


class WsClient:
    """Minimal RFC6455 client for tests: handshake plus masked text frames."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def connect(cls, host, port, path):
        reader, writer = await asyncio.open_connection(host, port)
        key = base64.b64encode(os.urandom(16)).decode()
        writer.write((f"GET {path} HTTP/1.1\r\nHost: {host}:{port}\r\n"
                      f"Upgrade: websocket\r\nConnection: Upgrade\r\n"
                      f"Sec-WebSocket-Key: {key}\r\n"
                      f"Sec-WebSocket-Version: 13\r\n\r\n").encode())
        await writer.drain()
        head = await reader.readuntil(b"\r\n\r\n")
        assert b"101" in head.splitlines()[0]
        expect = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        assert expect.encode() in head
        return cls(reader, writer)

    async def send(self, msg):
        self.writer.write(mask_frame(encode(msg).rstrip(b"\n")))
        await self.writer.drain()

    async def recv(self, timeout=5):
        opcode, payload = await asyncio.wait_for(
            ws_read_frame(self.reader), timeout)
        assert opcode == 0x1
        return decode(payload + b"\n")

    def close(self):
        self.writer.close()


@async_test
async def test_console_client_answers_as_weather():
    dress = AgentServer(core("dress.kb"))
    _h, dport = await dress.start("127.0.0.1", 0, console=("127.0.0.1", 0))
    cport = dress.console_port()
    try:
        console = await WsClient.connect("127.0.0.1", cport, "/ws?as=weather.com")
        await asyncio.sleep(0.05)

        user = asyncio.ensure_future(ask("127.0.0.1", dport, GOAL, timeout=10))

        seen = {}
        for _ in range(2):
            q = await console.recv()
            assert q.type == "QUERY"
            assert q.payload["asker"] == "dress.com"
            seen[q.payload["formula"]] = q.session
        assert set(seen) == {"cloudy + sunny", "hot + cold"}

        await console.send(proto.move(seen["cloudy + sunny"], "weather.com",
                                      0, "", 1))
        await console.send(proto.move(seen["hot + cold"], "weather.com",
                                      0, "", 1))
        result = await asyncio.wait_for(user, 10)
        assert (result.exit_code, result.answer) == (0, "green")
        console.close()
    finally:
        await dress.stop()


@async_test
async def test_console_move_errors_are_reported_back():
    # two choices in one queried item keep the session open after the first
    # move, so a repeated click on the first one is answered with stale-move
    kb = load_kb("agent host.example.\nc.\n((x + y) /\\ (z + w)) @ res.example.\n")
    host = AgentServer(AgentCore(kb))
    _h, hport = await host.start("127.0.0.1", 0, console=("127.0.0.1", 0))
    cport = host.console_port()
    try:
        console = await WsClient.connect("127.0.0.1", cport, "/ws?as=res.example")
        await asyncio.sleep(0.05)
        user = asyncio.ensure_future(ask("127.0.0.1", hport, "c + d", timeout=10))
        q = await console.recv()
        assert q.payload["formula"] == "(x + y) /\\ (z + w)"
        await console.send(proto.move(q.session, "res.example", 0, "1", 1))
        # a second resolution of the same occurrence is stale
        await console.send(proto.move(q.session, "res.example", 1, "1", 2))
        err = await console.recv()
        assert err.type == "ERROR"
        assert err.payload["code"] == "stale-move"
        # the session is undisturbed: finish it
        await console.send(proto.move(q.session, "res.example", 2, "2", 1))
        result = await asyncio.wait_for(user, 10)
        assert (result.exit_code, result.answer) == (0, "c")
        console.close()
    finally:
        await host.stop()


@async_test
async def test_console_static_and_missing_assets(tmp_path=None):
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        (tmp_path / "index.html").write_text("<html>console</html>")
        dress = AgentServer(core("dress.kb"), assets=tmp_path)
        _h, _p = await dress.start("127.0.0.1", 0, console=("127.0.0.1", 0))
        cport = dress.console_port()
        try:
            reader, writer = await asyncio.open_connection("127.0.0.1", cport)
            writer.write(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n")
            await writer.drain()
            reply = await reader.read(65536)
            assert reply.startswith(b"HTTP/1.1 200 OK")
            assert b"console" in reply
            writer.close()

            reader, writer = await asyncio.open_connection("127.0.0.1", cport)
            writer.write(b"GET /missing.js HTTP/1.1\r\nHost: x\r\n\r\n")
            await writer.drain()
            reply = await reader.read(65536)
            assert b"404" in reply.split(b"\r\n")[0]
            writer.close()
        finally:
            await dress.stop()
