"""Asker-side client: pose one query to an agent and drive it to an answer.

The client keeps its own mirror of the queried formula.  Inbound moves from
the answering machine resolve choices the answerer owns; when the query
contains choices the *asker* owns, a chooser callback picks the component
(interactively from the terminal, or scripted in tests).  The answerer
closes the session once the answer is fully delivered, so the client runs
until that CLOSE (or a REFUSE/ERROR) arrives.
"""

from __future__ import annotations

import asyncio
import uuid
from dataclasses import dataclass
from typing import Callable, Optional

from . import formula as fm
from . import protocol as proto
from .formula import (ChoiceAnd, Polarity, format_spec, parse_formula,
                      parse_spec, print_formula)
from .protocol import Message, ProtocolError

EXIT_ANSWERED = 0
EXIT_REFUSED = 2
EXIT_CONNECT = 3
EXIT_PROTOCOL = 4


@dataclass
class AskResult:
    exit_code: int
    answer: Optional[str] = None
    detail: str = ""


def _machine_resolved(sc) -> bool:
    """Does the answering machine own this occurrence of the query?"""
    if isinstance(sc.node, ChoiceAnd):
        return sc.polarity is Polarity.NEGATIVE
    return sc.polarity is Polarity.POSITIVE


def _own_choices(mirror) -> list:
    return [sc for sc in fm.surface_choices(mirror) if not _machine_resolved(sc)]


async def ask(host: str, port: int, query_text: str, asker: str = "user",
              chooser: Optional[Callable] = None,
              timeout: Optional[float] = None,
              trace: Optional[Callable] = None) -> AskResult:
    """Run one query session against the agent at host:port."""
    mirror = parse_formula(query_text)
    session = f"{asker}:{uuid.uuid4().hex[:12]}"
    try:
        reader, writer = await asyncio.open_connection(host, port)
    except OSError as exc:
        return AskResult(EXIT_CONNECT, detail=f"cannot connect to {host}:{port}: {exc}")

    seq_out = 0
    seq_in = 0

    def log(line: str):
        if trace:
            trace(line)

    async def send(msg: Message):
        writer.write(proto.encode(msg))
        await writer.drain()

    async def play_own_choices():
        nonlocal mirror, seq_out
        while chooser:
            ours = _own_choices(mirror)
            if not ours:
                return
            sc = ours[0]
            index = chooser(sc)
            if not 1 <= index <= sc.arity:
                raise ValueError(f"chosen index {index} out of range 1..{sc.arity}")
            mirror = fm.replace_at(mirror, sc.spec, sc.node.parts[index - 1])
            log(f"we choose {format_spec(sc.spec)}#{index}; "
                f"query = {print_formula(mirror)}")
            await send(proto.move(session, asker, seq_out,
                                  format_spec(sc.spec), index))
            seq_out += 1

    def apply_peer_move(msg: Message) -> Optional[AskResult]:
        nonlocal mirror, seq_in
        if msg.seq != seq_in:
            return AskResult(EXIT_PROTOCOL,
                             detail=f"out-of-order frame: expected {seq_in}, got {msg.seq}")
        seq_in += 1
        spec = parse_spec(msg.payload["spec"])
        try:
            occ = fm.resolve(mirror, spec)
        except fm.PathError as exc:
            return AskResult(EXIT_PROTOCOL, detail=f"bad move from answerer: {exc}")
        if not isinstance(occ.node, (fm.ChoiceAnd, fm.ChoiceOr)) or not occ.surface:
            return AskResult(EXIT_PROTOCOL,
                             detail="answerer move does not address a surface choice")
        index = msg.payload["index"]
        if not _machine_resolved(occ_to_choice(occ)) or not 1 <= index <= len(occ.node.parts):
            return AskResult(EXIT_PROTOCOL, detail="answerer move is not legal")
        mirror = fm.replace_at(mirror, spec, occ.node.parts[index - 1])
        log(f"{msg.sender} chooses {msg.payload['spec']}#{index}; "
            f"query = {print_formula(mirror)}")
        return None

    try:
        await send(proto.query(session, asker, seq_out, query_text, asker))
        seq_out += 1
        await play_own_choices()
        while True:
            line = await asyncio.wait_for(reader.readline(), timeout)
            if not line:
                return AskResult(EXIT_PROTOCOL, detail="connection closed mid-session")
            msg = proto.decode(line)
            if msg.session != session:
                return AskResult(EXIT_PROTOCOL,
                                 detail=f"frame for foreign session {msg.session}")
            if msg.type == proto.REFUSE:
                return AskResult(EXIT_REFUSED, detail=msg.payload["reason"])
            if msg.type == proto.ERROR:
                code = msg.payload["code"]
                exit_code = EXIT_REFUSED if code == proto.E_REFUSED else EXIT_PROTOCOL
                return AskResult(exit_code, detail=f"{code}: {msg.payload['text']}")
            if msg.type == proto.CLOSE:
                if fm.surface_choices(mirror):
                    return AskResult(EXIT_PROTOCOL,
                                     detail="session closed before resolution")
                await send(proto.close(session, asker, seq_out))
                return AskResult(EXIT_ANSWERED, answer=print_formula(mirror))
            if msg.type != proto.MOVE:
                return AskResult(EXIT_PROTOCOL, detail=f"unexpected {msg.type} frame")
            failure = apply_peer_move(msg)
            if failure:
                return failure
            await play_own_choices()
    except asyncio.TimeoutError:
        return AskResult(EXIT_CONNECT, detail=f"no answer within {timeout}s")
    except ProtocolError as exc:
        return AskResult(EXIT_PROTOCOL, detail=str(exc))
    except (ConnectionError, OSError) as exc:
        return AskResult(EXIT_CONNECT, detail=f"connection failed: {exc}")
    finally:
        writer.close()


def occ_to_choice(occ) -> fm.SurfaceChoice:
    return fm.SurfaceChoice(occ.spec, occ.node, occ.polarity, occ.env)


def terminal_chooser(sc) -> int:
    """Prompt the operator for one choice; reads a 1-based index from stdin."""
    kind = "&" if isinstance(sc.node, ChoiceAnd) else "+"
    print(f"your choice on ({kind}) at {format_spec(sc.spec) or '<root>'}:")
    for i, part in enumerate(sc.node.parts, start=1):
        print(f"  {i}) {print_formula(part)}")
    while True:
        raw = input(f"index 1..{sc.arity}> ").strip()
        if raw.isdigit() and 1 <= int(raw) <= sc.arity:
            return int(raw)
        print("not a valid index")
