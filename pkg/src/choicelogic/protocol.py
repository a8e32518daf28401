"""Wire format for inter-agent traffic.

One message per line: a UTF-8 JSON object with the fields ``type``,
``session``, ``sender``, ``seq`` and ``payload``, newline-terminated.
Sessions are multiplexed over any reliable ordered byte stream; each sender
numbers its frames per session from 0 so that ordering violations at a
transport boundary are detected rather than silently tolerated.

See PROTOCOL.md at the repository root for the full field and error-code
reference.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

QUERY = "QUERY"
MOVE = "MOVE"
REFUSE = "REFUSE"
ERROR = "ERROR"
CLOSE = "CLOSE"

TYPES = (QUERY, MOVE, REFUSE, ERROR, CLOSE)

# Error codes carried by ERROR frames.
E_UNKNOWN_SESSION = "unknown-session"
E_ILLEGAL_MOVE = "illegal-move"
E_STALE_MOVE = "stale-move"
E_REFUSED = "refused"
E_PARSE = "parse-error"
E_CAPACITY = "capacity"
E_OUT_OF_ORDER = "out-of-order"

ERROR_CODES = (E_UNKNOWN_SESSION, E_ILLEGAL_MOVE, E_STALE_MOVE, E_REFUSED,
               E_PARSE, E_CAPACITY, E_OUT_OF_ORDER)

_SPEC_RE = re.compile(r"(\d+(\.\d+)*)?\Z")


class ProtocolError(ValueError):
    def __init__(self, code: str, text: str):
        super().__init__(f"{code}: {text}")
        self.code = code
        self.text = text


@dataclass(frozen=True)
class Message:
    type: str
    session: str
    sender: str
    seq: int
    payload: dict = field(default_factory=dict)


def _need(payload: dict, key: str, kind) -> Any:
    value = payload.get(key)
    if not isinstance(value, kind):
        raise ProtocolError(E_PARSE, f"payload field {key!r} missing or mistyped")
    return value


def validate(msg: Message) -> Message:
    if msg.type not in TYPES:
        raise ProtocolError(E_PARSE, f"unknown message type {msg.type!r}")
    if not msg.session or not isinstance(msg.session, str):
        raise ProtocolError(E_PARSE, "session token must be a nonempty string")
    if not isinstance(msg.sender, str) or not msg.sender:
        raise ProtocolError(E_PARSE, "sender must be a nonempty string")
    if not isinstance(msg.seq, int) or isinstance(msg.seq, bool) or msg.seq < 0:
        raise ProtocolError(E_PARSE, "seq must be a nonnegative integer")
    if not isinstance(msg.payload, dict):
        raise ProtocolError(E_PARSE, "payload must be an object")
    if msg.type == QUERY:
        _need(msg.payload, "formula", str)
        _need(msg.payload, "asker", str)
    elif msg.type == MOVE:
        spec = _need(msg.payload, "spec", str)
        if not _SPEC_RE.match(spec):
            raise ProtocolError(E_PARSE, f"malformed move spec {spec!r}")
        index = _need(msg.payload, "index", int)
        if isinstance(index, bool) or index < 1:
            raise ProtocolError(E_PARSE, "move index must be >= 1")
    elif msg.type == ERROR:
        code = _need(msg.payload, "code", str)
        if code not in ERROR_CODES:
            raise ProtocolError(E_PARSE, f"unknown error code {code!r}")
        _need(msg.payload, "text", str)
    elif msg.type == REFUSE:
        _need(msg.payload, "reason", str)
    return msg


def encode(msg: Message) -> bytes:
    """One frame: canonical JSON, newline-terminated."""
    validate(msg)
    obj = {"type": msg.type, "session": msg.session, "sender": msg.sender,
           "seq": msg.seq, "payload": msg.payload}
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode() + b"\n"


def decode(line: "bytes | str") -> Message:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError(E_PARSE, "frame is not valid UTF-8") from None
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(E_PARSE, f"frame is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError(E_PARSE, "frame must be a JSON object")
    extra = set(obj) - {"type", "session", "sender", "seq", "payload"}
    if extra:
        raise ProtocolError(E_PARSE, f"unexpected frame fields {sorted(extra)}")
    try:
        msg = Message(obj["type"], obj["session"], obj["sender"],
                      obj["seq"], obj.get("payload", {}))
    except KeyError as exc:
        raise ProtocolError(E_PARSE, f"frame field {exc.args[0]!r} missing") from None
    return validate(msg)


# Convenience builders; senders fill seq through their per-session counters.

def query(session: str, sender: str, seq: int, formula_text: str, asker: str) -> Message:
    return Message(QUERY, session, sender, seq,
                   {"formula": formula_text, "asker": asker})


def move(session: str, sender: str, seq: int, spec: str, index: int) -> Message:
    return Message(MOVE, session, sender, seq, {"spec": spec, "index": index})


def refuse(session: str, sender: str, seq: int, reason: str) -> Message:
    return Message(REFUSE, session, sender, seq, {"reason": reason})


def error(session: str, sender: str, seq: int, code: str, text: str) -> Message:
    return Message(ERROR, session, sender, seq, {"code": code, "text": text})


def close(session: str, sender: str, seq: int) -> Message:
    return Message(CLOSE, session, sender, seq)
