"""The agent runtime: knowledgebase, sessions, and query handling.

An agent answers a query ``Q`` by proving ``KB -> Q`` and then playing the
proof.  Annotated knowledgebase items are *querying knowledge*: before play
starts the agent activates each such resource agent by sending it the item
as a query of its own (stage 1), opening one session per item occurrence.
Play (stage 2) then routes choice moves between the shared game and the
per-session peers, translating between session-relative and game-relative
occurrence paths.

This module is transport-free: ``AgentCore.handle`` consumes one decoded
frame and returns the frames to send, each tagged with its destination.
The asyncio plumbing lives in ``server``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import formula as fm
from . import protocol as proto
from .formula import (AgentId, Formula, FormulaError, Implies, Leaf, Polarity,
                      Spec, format_spec, make_and, parse_formula, parse_spec,
                      print_formula)
from .game import (GameError, GameState, Move, advance, apply_env_move,
                   legal_env_moves, new_game)
from .prover import Unprovable, prove
from .protocol import Message
from .validity import CapacityError

ASKER = "asker"
ANSWERER = "answerer"


class KBError(ValueError):
    """Malformed knowledgebase file."""


@dataclass(frozen=True)
class KBItem:
    formula: Formula
    env: Optional[AgentId]    # None for the agent's own (local) knowledge

    @property
    def local(self) -> bool:
        return self.env is None


@dataclass(frozen=True)
class KnowledgeBase:
    owner: AgentId
    items: tuple

    def item_env(self, item: KBItem) -> AgentId:
        return item.env if item.env is not None else self.owner


def load_kb(text: str) -> KnowledgeBase:
    """Parse a knowledgebase file.

    The first statement is ``agent <name>.``; every further statement is a
    formula terminated by ``.``, optionally annotated ``@ <agent>`` to mark
    querying knowledge.  ``%`` starts a comment.  Unannotated items must be
    choice-free: the agent holds them, nobody gets to pick inside them.
    """
    parser = fm.Parser(fm.tokenize(text))
    head = parser.peek()
    if head.kind != "ident" or head.text != "agent":
        raise KBError("knowledgebase must start with 'agent <name>.'")
    parser.take()
    owner = parser.agent_id()
    parser.expect(".")
    items = []
    while not parser.at_end():
        tok = parser.peek()
        if tok.kind == "ident" and tok.text == "agent":
            raise KBError(f"{tok.line}:{tok.column}: duplicate agent header")
        tree = parser.annotated()
        parser.expect(".")
        if isinstance(tree, Leaf):
            if tree.env == owner and not fm.is_elementary(tree.payload):
                raise KBError("item annotated with the owning agent cannot "
                              "carry choice connectives")
            items.append(KBItem(tree.payload, tree.env))
        elif fm.is_pure(tree):
            if not fm.is_elementary(tree):
                raise KBError("unannotated item contains choice connectives; "
                              "annotate it with the agent to query")
            items.append(KBItem(tree, None))
        else:
            raise KBError("an item takes at most one whole-formula annotation")
    return KnowledgeBase(owner, tuple(items))


@dataclass
class Session:
    """One live query channel, bound to one annotated occurrence.

    ``loc`` is where the session's formula sits inside the shared game;
    peer-relative move paths are the game-relative ones with this prefix
    stripped, and vice versa.
    """

    id: str
    peer: AgentId
    role: str                 # ASKER (we sent the query) or ANSWERER
    query: Formula
    loc: Spec
    seq_in: int = 0           # next expected frame number from the peer
    seq_out: int = 0          # next frame number we send
    closed: bool = False
    done_logged: bool = False


@dataclass
class QueryGame:
    """Everything attached to one answered query: the game plus its channels."""

    root_id: str
    state: GameState
    sessions: dict = field(default_factory=dict)
    step: int = 0
    dead: bool = False


Outbound = "tuple[AgentId, Message]"


class AgentCore:
    """Frame-in, frames-out agent logic for one knowledgebase."""

    def __init__(self, kb: KnowledgeBase, trace: Optional[Callable] = None,
                 session_ids: Optional[Callable] = None):
        self.kb = kb
        self.owner = kb.owner
        self._trace = trace
        self.games: dict = {}          # root session id -> QueryGame
        self.index: dict = {}          # any session id -> (QueryGame, Session)
        self.closed_ids: set = set()
        self.proof_cache: dict = {}
        counter = itertools.count(1)
        self._fresh_id = session_ids or (
            lambda: f"{self.owner}:s{next(counter)}")

    # -- plumbing -------------------------------------------------------------

    def trace(self, line: str):
        if self._trace:
            self._trace(line)

    def _error(self, session_id: str, code: str, text: str,
               seq: int = 0) -> Message:
        return proto.error(session_id, str(self.owner), seq, code, text)

    # -- frame entry point ------------------------------------------------------

    def handle(self, msg: Message) -> list:
        """Process one inbound frame; returns (destination, frame) pairs."""
        try:
            sender = AgentId(msg.sender)
        except FormulaError:
            return []              # unidentifiable sender, nothing to reply to
        if msg.type == proto.QUERY:
            return self._on_query_frame(msg, sender)
        if msg.type == proto.CLOSE:
            return self._on_close(msg)

        entry = self.index.get(msg.session)
        if entry is None:
            if msg.type == proto.ERROR:
                return []          # never answer errors with errors
            return [(sender, self._error(msg.session, proto.E_UNKNOWN_SESSION,
                                         "no such session"))]
        game, session = entry
        if sender != session.peer:
            return [(sender, self._error(msg.session, proto.E_PARSE,
                                         "sender does not match session peer",
                                         seq=session.seq_out))]
        if msg.type in (proto.MOVE, proto.REFUSE):
            if msg.seq != session.seq_in:
                return [(session.peer,
                         self._error(msg.session, proto.E_OUT_OF_ORDER,
                                     f"expected seq {session.seq_in}, got {msg.seq}",
                                     seq=session.seq_out))]
            # Every in-order frame consumes its slot, accepted or not.
            session.seq_in += 1
        if msg.type == proto.MOVE:
            return self.route_move(game, session, msg)
        if msg.type == proto.REFUSE:
            if session.role != ASKER:
                return [(session.peer,
                         self._error(msg.session, proto.E_PARSE,
                                     "REFUSE is only valid from an answerer",
                                     seq=session.seq_out))]
            self.trace(f"session {session.id} refused by {session.peer}")
            return self._abort_game(game, f"resource {session.peer} refused "
                                          f"{print_formula(session.query)}")
        if msg.type == proto.ERROR:
            code = msg.payload.get("code", "?")
            self.trace(f"session {session.id} peer error {code}: "
                       f"{msg.payload.get('text', '')}")
            if session.role == ASKER:
                return self._abort_game(game, f"resource {session.peer} failed: {code}")
            return []
        return []

    # -- query handling -----------------------------------------------------------

    def _on_query_frame(self, msg: Message, sender: AgentId) -> list:
        if msg.session in self.index or msg.session in self.closed_ids:
            return [(sender, self._error(msg.session, proto.E_OUT_OF_ORDER,
                                         "session token already used"))]
        if msg.seq != 0:
            return [(sender, self._error(msg.session, proto.E_OUT_OF_ORDER,
                                         f"QUERY must carry seq 0, got {msg.seq}"))]
        try:
            query = parse_formula(msg.payload["formula"])
            asker = AgentId(msg.payload["asker"])
        except FormulaError as exc:
            self.closed_ids.add(msg.session)
            return [(sender, self._error(msg.session, proto.E_PARSE, str(exc)))]
        return self.on_query(asker, query, msg.session)

    def on_query(self, asker: AgentId, query: Formula, session_id: str) -> list:
        """Prove KB -> query and either refuse or start playing.

        Activation is eager: every querying-knowledge session is opened
        before the first machine move goes out.
        """
        goal = self._build_goal(asker, query)
        self.trace(f"session {session_id} opened role=answerer peer={asker} "
                   f"query={print_formula(query)}")
        try:
            outcome = prove(goal, default_env=self.owner, cache=self.proof_cache)
        except CapacityError as exc:
            self.closed_ids.add(session_id)
            return [(asker, self._error(session_id, proto.E_CAPACITY, str(exc)))]
        if isinstance(outcome, Unprovable):
            blockers = "; ".join(print_formula(b) for b in outcome.blockers[:4])
            self.trace(f"session {session_id} refused query="
                       f"{print_formula(query)} blocked by {blockers}")
            self.closed_ids.add(session_id)
            return [(asker, proto.refuse(session_id, str(self.owner), 0,
                                         f"not provable from the knowledgebase; "
                                         f"blocking subgoals: {blockers}"))]
        state = new_game(outcome)
        game = QueryGame(session_id, state)
        locations = fm.leaf_locations(state.formula)
        root = Session(session_id, asker, ANSWERER, query,
                       loc=locations[-1][0], seq_in=1)
        game.sessions[session_id] = root
        self.games[session_id] = game
        self.index[session_id] = (game, root)

        out: list = []
        # Stage 1: activate every resource agent before any move is played.
        for loc, leaf in locations[:-1]:
            if leaf.env == self.owner:
                continue
            if fm.resolve(state.formula, loc).polarity is not Polarity.NEGATIVE:
                continue
            sid = self._fresh_id()
            sub = Session(sid, leaf.env, ASKER, leaf.payload, loc=loc, seq_out=1)
            game.sessions[sid] = sub
            self.index[sid] = (game, sub)
            self.trace(f"session {sid} opened role=asker peer={leaf.env} "
                       f"query={print_formula(leaf.payload)}")
            out.append((leaf.env,
                        proto.query(sid, str(self.owner), 0,
                                    print_formula(leaf.payload), str(self.owner))))
        # Stage 2: play.
        out.extend(self._play_out(game))
        return out

    def _build_goal(self, asker: AgentId, query: Formula):
        leaves = [Leaf(item.formula, self.kb.item_env(item))
                  for item in self.kb.items]
        consequent = Leaf(query, asker)
        if not leaves:
            return consequent
        return Implies(make_and(leaves), consequent)

    # -- move routing ----------------------------------------------------------------

    def route_move(self, game: QueryGame, session: Session, msg: Message) -> list:
        """Translate an inbound peer move into the game and keep playing."""
        if game.dead:
            return [(session.peer, self._error(session.id, proto.E_UNKNOWN_SESSION,
                                               "session aborted", seq=session.seq_out))]
        try:
            spec = session.loc + parse_spec(msg.payload["spec"])
            move = Move(spec, msg.payload["index"])
            game.state = apply_env_move(game.state, session.peer, move)
        except fm.PathError as exc:
            return [(session.peer, self._error(session.id, proto.E_STALE_MOVE,
                                               str(exc), seq=session.seq_out))]
        except GameError as exc:
            return [(session.peer, self._error(session.id, exc.code, str(exc),
                                               seq=session.seq_out))]
        game.step += 1
        self.trace(f"game {game.root_id} step {game.step}: applied move "
                   f"{msg.payload['spec']}#{move.index} from {session.peer} "
                   f"(session {session.id}); E = {print_formula(game.state.formula)}")
        return self._play_out(game)

    def emit_move(self, game: QueryGame, env: AgentId, move: Move) -> "Outbound":
        """Translate one machine move to the session owning its occurrence."""
        for session in game.sessions.values():
            if session.closed:
                continue
            if move.spec[:len(session.loc)] == session.loc and session.peer == env:
                rel = format_spec(move.spec[len(session.loc):])
                frame = proto.move(session.id, str(self.owner), session.seq_out,
                                   rel, move.index)
                session.seq_out += 1
                game.step += 1
                self.trace(f"game {game.root_id} step {game.step}: sent move "
                           f"{rel}#{move.index} to {env} (session {session.id}); "
                           f"E = {print_formula(game.state.formula)}")
                return (session.peer, frame)
        raise RuntimeError(f"no session covers move {move} for {env}")

    def _play_out(self, game: QueryGame) -> list:
        _, emitted = advance(game.state)
        out: list = []
        # Re-walk the machine's steps one premise at a time so every trace
        # line carries the game formula right after its move.
        cursor = game.state.cursor
        for env, move in emitted:
            cursor = cursor.premises[0]
            game.state = GameState(cursor.conclusion, cursor, game.state.bindings)
            out.append(self.emit_move(game, env, move))
        out.extend(self._sweep_resolved(game))
        return out

    def _sweep_resolved(self, game: QueryGame) -> list:
        """Close sessions whose formula is fully resolved.

        Resource sessions we asked are simply closed; when our own answer
        (the root session) resolves, the CLOSE doubles as the delivery ack
        and the whole game is torn down.
        """
        out: list = []
        # Resource sessions first: the root's teardown closes whatever is left.
        ordered = sorted(game.sessions.values(), key=lambda s: s.role == ANSWERER)
        for session in ordered:
            if session.closed or session.done_logged:
                continue
            answer = self.answer_of(game, session)
            if answer is None:
                continue
            session.done_logged = True
            self.trace(f"session {session.id} resolved "
                       f"answer={print_formula(answer)}")
            out.append((session.peer,
                        proto.close(session.id, str(self.owner),
                                    session.seq_out)))
            session.seq_out += 1
            self._close_session(session.id)
            if session.role == ANSWERER:
                out.extend(self._teardown(game))
        return out

    def answer_of(self, game: QueryGame, session: Session) -> Optional[Formula]:
        """The resolved formula at the session's occurrence, or None while
        choices remain to be played there."""
        node = fm.subformula_at(game.state.formula, session.loc)
        if fm.surface_choices(node):
            return None
        return fm.skeleton(node)

    # -- teardown ---------------------------------------------------------------------

    def _close_session(self, session_id: str):
        entry = self.index.pop(session_id, None)
        self.closed_ids.add(session_id)
        if entry:
            entry[1].closed = True

    def _on_close(self, msg: Message) -> list:
        entry = self.index.get(msg.session)
        if entry is None:
            self.closed_ids.add(msg.session)
            return []
        game, session = entry
        self.trace(f"session {session.id} closed by peer")
        unresolved = self.answer_of(game, session) is None
        self._close_session(msg.session)
        if session.id == game.root_id:
            return self._teardown(game)
        if session.role == ASKER and unresolved and not game.dead:
            # the resource walked away mid-game: nothing left to wait for
            return self._abort_game(game, f"resource {session.peer} closed "
                                          f"the session before resolving "
                                          f"{print_formula(session.query)}")
        return []

    def _teardown(self, game: QueryGame) -> list:
        """Root session is gone: close our outstanding resource sessions."""
        out = []
        for session in game.sessions.values():
            if session.role == ASKER and not session.closed:
                out.append((session.peer,
                            proto.close(session.id, str(self.owner),
                                        session.seq_out)))
                session.seq_out += 1
                self._close_session(session.id)
        game.dead = True
        self.games.pop(game.root_id, None)
        return out

    def _abort_game(self, game: QueryGame, reason: str) -> list:
        root = game.sessions[game.root_id]
        out = []
        if not root.closed:
            out.append((root.peer, self._error(game.root_id, proto.E_REFUSED,
                                               reason, seq=root.seq_out)))
            root.seq_out += 1
        out.extend(self._teardown(game))
        self._close_session(game.root_id)
        return out

    # -- introspection used by the operator surface ---------------------------------

    def pending_moves(self, session_id: str) -> list:
        """Legal peer moves on one session, session-relative."""
        entry = self.index.get(session_id)
        if entry is None:
            return []
        game, session = entry
        moves = []
        for mv in legal_env_moves(game.state, session.peer):
            if mv.spec[:len(session.loc)] == session.loc:
                moves.append(Move(mv.spec[len(session.loc):], mv.index))
        return moves
