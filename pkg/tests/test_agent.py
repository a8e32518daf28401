import random
from collections import deque
from pathlib import Path

import pytest

from choicelogic import protocol as proto
from choicelogic.agent import AgentCore, KBError, KnowledgeBase, load_kb
from choicelogic.formula import (AgentId, parse_formula, print_formula,
                                 skeleton, subformula_at)
from choicelogic.game import Move, legal_env_moves

KB_DIR = Path(__file__).resolve().parents[1] / "kb"

WEATHER = AgentId("weather.com")
DRESS = AgentId("dress.com")
USER = "user"

GOAL = "green + blue + yellow + red"


def weather_core(**kw):
    return AgentCore(load_kb((KB_DIR / "weather.kb").read_text()), **kw)


def dress_core(**kw):
    return AgentCore(load_kb((KB_DIR / "dress.kb").read_text()), **kw)


class MemoryNet:
    """Deliver frames between cores with per-session FIFO, but otherwise in
    any order the rng picks: the harness for interleaving tests."""

    def __init__(self, cores, rng=None):
        self.cores = {str(core.owner): core for core in cores}
        self.rng = rng
        self.queues: dict = {}
        self.external: dict = {}
        self.on_step = None

    def post(self, dest, msg):
        self.queues.setdefault((str(dest), msg.session), deque()).append(msg)

    def run(self):
        while True:
            keys = [k for k, q in self.queues.items() if q]
            if not keys:
                return
            key = self.rng.choice(keys) if self.rng else keys[0]
            dest, _session = key
            msg = self.queues[key].popleft()
            core = self.cores.get(dest)
            if core is None:
                self.external.setdefault(dest, []).append(msg)
                continue
            for out_dest, out in core.handle(msg):
                self.post(out_dest, out)
            if self.on_step:
                self.on_step()


# --- knowledgebase loading ---------------------------------------------------------

def test_load_weather_kb_verbatim():
    kb = load_kb((KB_DIR / "weather.kb").read_text())
    assert kb.owner == WEATHER
    assert [(print_formula(i.formula), i.env) for i in kb.items] == [
        ("cloudy", None), ("hot", None)]


def test_load_dress_kb_verbatim():
    kb = load_kb((KB_DIR / "dress.kb").read_text())
    assert kb.owner == DRESS
    assert len(kb.items) == 6
    assert [i.env for i in kb.items] == [None] * 4 + [WEATHER, WEATHER]
    assert print_formula(kb.items[4].formula) == "cloudy + sunny"
    assert print_formula(kb.items[5].formula) == "hot + cold"


def test_load_empty_body_kb():
    kb = load_kb("agent lone.example.\n")
    assert kb.owner == AgentId("lone.example")
    assert kb.items == ()


def test_load_kb_with_comments_only():
    kb = load_kb("agent a.b.\n% nothing to see\n")
    assert kb.items == ()


def test_load_kb_rejects_choices_in_local_items():
    with pytest.raises(KBError):
        load_kb("agent a.b.\ncloudy + sunny.\n")


def test_load_kb_rejects_duplicate_header():
    with pytest.raises(KBError):
        load_kb("agent a.b.\ncloudy.\nagent c.d.\n")


def test_load_kb_rejects_missing_header():
    with pytest.raises(KBError):
        load_kb("cloudy.\n")


def test_load_kb_rejects_self_annotated_choices():
    with pytest.raises(KBError):
        load_kb("agent a.b.\n(p + q) @ a.b.\n")


def test_load_kb_rejects_mixed_annotations():
    with pytest.raises(KBError):
        load_kb("agent a.b.\n(p @ c.d) /\\ q.\n")


def test_knowledgebase_is_immutable():
    kb = load_kb((KB_DIR / "weather.kb").read_text())
    with pytest.raises(Exception):
        kb.items = ()
    with pytest.raises(Exception):
        kb.items[0].formula = parse_formula("sunny")


# --- single-agent answering ------------------------------------------------------------

def test_weather_answers_immediately():
    core = weather_core()
    outs = core.on_query(AgentId(USER), parse_formula("cloudy + sunny"), "s1")
    kinds = [(str(d), m.type) for d, m in outs]
    assert kinds == [(USER, "MOVE"), (USER, "CLOSE")]
    move = outs[0][1]
    assert move.payload == {"spec": "", "index": 1}     # cloudy


def test_unprovable_query_is_refused():
    core = weather_core()
    outs = core.on_query(AgentId(USER), parse_formula("p + ~p"), "s1")
    assert [m.type for _d, m in outs] == ["REFUSE"]


def test_empty_kb_refuses_nontrivial_goals():
    core = AgentCore(KnowledgeBase(AgentId("lone.example"), ()))
    outs = core.on_query(AgentId(USER), parse_formula("p + ~p"), "s1")
    assert [m.type for _d, m in outs] == ["REFUSE"]
    outs = core.on_query(AgentId(USER), parse_formula("p -> p"), "s2")
    assert [m.type for _d, m in outs] == ["CLOSE"]


def test_activation_is_eager_and_precedes_moves():
    kb = load_kb("agent a.b.\nc.\n(x & y) @ res.example.\n")
    core = AgentCore(kb)
    outs = core.on_query(AgentId(USER), parse_formula("c + d"), "s1")
    types = [m.type for _d, m in outs]
    assert types.index("QUERY") < types.index("MOVE")
    query_dest = [str(d) for d, m in outs if m.type == "QUERY"]
    assert query_dest == ["res.example"]


def test_dress_opens_one_session_per_item_occurrence():
    core = dress_core()
    outs = core.on_query(AgentId(USER), parse_formula(GOAL), "s1")
    queries = [m for _d, m in outs if m.type == "QUERY"]
    assert len(queries) == 2
    assert {m.payload["formula"] for m in queries} == {"cloudy + sunny", "hot + cold"}
    assert len({m.session for m in queries}) == 2
    game = core.games["s1"]
    assert legal_env_moves(game.state, WEATHER) == [
        Move((1, 5), 1), Move((1, 5), 2), Move((1, 6), 1), Move((1, 6), 2)]


def test_answer_of_pending_then_resolved():
    core = weather_core()
    asker = AgentId("dress.com")
    core.on_query(asker, parse_formula("cloudy + sunny"), "s1")
    # the root resolved and closed in one stroke; replay with a slow goal
    core2 = dress_core()
    core2.on_query(AgentId(USER), parse_formula(GOAL), "q1")
    game = core2.games["q1"]
    root = game.sessions["q1"]
    assert core2.answer_of(game, root) is None           # pending
    sub = next(s for s in game.sessions.values() if s.role == "asker")
    assert core2.answer_of(game, sub) is None


# --- two agents end to end ----------------------------------------------------------------

def run_scenario(rng=None, trace=None):
    dress = dress_core(trace=trace)
    weather = weather_core(trace=trace)
    net = MemoryNet([dress, weather], rng=rng)
    net.post(DRESS, proto.query("u:1", USER, 0, GOAL, USER))
    net.run()
    return net, dress, weather


def test_dress_scenario_answers_green():
    net, dress, _weather = run_scenario()
    to_user = net.external[USER]
    moves = [m for m in to_user if m.type == "MOVE"]
    assert [(m.payload["spec"], m.payload["index"]) for m in moves] == [("", 1)]
    assert to_user[-1].type == "CLOSE"


def test_trace_shows_sessions_open_before_either_resolves():
    lines = []
    run_scenario(trace=lines.append)
    opened = [i for i, l in enumerate(lines)
              if "opened role=asker peer=weather.com" in l]
    resolved = [i for i, l in enumerate(lines)
                if "resolved" in l and "session dress.com:" in l]
    assert len(opened) == 2
    assert len(resolved) >= 2
    assert max(opened) < min(resolved)


def test_interleavings_do_not_change_answers():
    answers = set()
    for seed in range(12):
        net, _d, _w = run_scenario(rng=random.Random(seed))
        moves = [(m.payload["spec"], m.payload["index"])
                 for m in net.external[USER] if m.type == "MOVE"]
        answers.add(tuple(moves))
    assert answers == {(("", 1),)}


def test_bilateral_consistency_at_every_step():
    dress = dress_core()
    weather = weather_core()
    net = MemoryNet([dress, weather], rng=random.Random(9))

    def check():
        for game in dress.games.values():
            for session in game.sessions.values():
                if session.role != "asker" or session.closed:
                    continue
                peer_entry = weather.index.get(session.id)
                if peer_entry is None:
                    continue
                peer_game, peer_session = peer_entry
                ours = skeleton(subformula_at(game.state.formula, session.loc))
                theirs = skeleton(subformula_at(peer_game.state.formula,
                                                peer_session.loc))
                assert ours == theirs

    net.on_step = check
    net.post(DRESS, proto.query("u:1", USER, 0, GOAL, USER))
    net.run()


def test_session_isolation_two_queries_interleaved():
    for seed in range(8):
        dress = dress_core()
        weather = weather_core()
        net = MemoryNet([dress, weather], rng=random.Random(seed))
        net.post(DRESS, proto.query("u:1", "alice", 0, GOAL, "alice"))
        net.post(DRESS, proto.query("u:2", "bob", 0, GOAL, "bob"))
        net.run()
        for user in ("alice", "bob"):
            moves = [m for m in net.external[user] if m.type == "MOVE"]
            assert [(m.payload["spec"], m.payload["index"]) for m in moves] \
                == [("", 1)]


def test_peer_closing_mid_game_aborts_the_session():
    dress = dress_core()
    dress.on_query(AgentId(USER), parse_formula(GOAL), "u:1")
    game = dress.games["u:1"]
    sub = next(s for s in game.sessions.values() if s.role == "asker")
    outs = dress.handle(proto.close(sub.id, str(WEATHER), 0))
    errors = [m for _d, m in outs if m.type == "ERROR"]
    assert errors and errors[0].payload["code"] == "refused"
    assert "u:1" not in dress.games


def test_refusing_resource_aborts_the_session():
    # dress depends on a resource whose knowledgebase cannot prove the item
    kb = load_kb("agent a.b.\nc.\n(x + y) @ res.example.\n")
    asker_core = AgentCore(kb)
    res_core = AgentCore(KnowledgeBase(AgentId("res.example"), ()))
    net = MemoryNet([asker_core, res_core])
    net.post(AgentId("a.b"), proto.query("u:1", USER, 0, "c + d", USER))
    net.run()
    to_user = net.external[USER]
    assert any(m.type == "ERROR" and m.payload["code"] == "refused"
               for m in to_user)


# --- session bookkeeping over the wire ------------------------------------------------------

def test_unknown_session_move_errors():
    core = weather_core()
    outs = core.handle(proto.move("ghost", USER, 0, "", 1))
    (_d, msg), = outs
    assert msg.type == "ERROR"
    assert msg.payload["code"] == "unknown-session"


def test_out_of_order_frames_are_rejected():
    core = dress_core()
    core.on_query(AgentId(USER), parse_formula(GOAL), "s1")
    game = core.games["s1"]
    sub = next(s for s in game.sessions.values() if s.role == "asker")
    outs = core.handle(proto.move(sub.id, str(WEATHER), 5, "", 1))
    (_d, msg), = outs
    assert msg.payload["code"] == "out-of-order"
    # the in-order frame still goes through afterwards
    outs = core.handle(proto.move(sub.id, str(WEATHER), 0, "", 1))
    assert all(m.type != "ERROR" for _d, m in outs)


def test_rejected_moves_consume_their_slot():
    core = dress_core()
    core.on_query(AgentId(USER), parse_formula(GOAL), "s1")
    game = core.games["s1"]
    sub = next(s for s in game.sessions.values() if s.role == "asker")
    outs = core.handle(proto.move(sub.id, str(WEATHER), 0, "", 9))
    (_d, msg), = outs
    assert msg.payload["code"] == "illegal-move"
    outs = core.handle(proto.move(sub.id, str(WEATHER), 1, "", 1))
    assert all(m.type != "ERROR" for _d, m in outs)


def test_sender_must_match_session_peer():
    core = dress_core()
    core.on_query(AgentId(USER), parse_formula(GOAL), "s1")
    game = core.games["s1"]
    sub = next(s for s in game.sessions.values() if s.role == "asker")
    outs = core.handle(proto.move(sub.id, "intruder.example", 0, "", 1))
    (_d, msg), = outs
    assert msg.payload["code"] == "parse-error"


def test_close_is_idempotent_and_seals_the_session():
    core = weather_core()
    outs = core.on_query(AgentId(USER), parse_formula("cloudy + sunny"), "s1")
    assert outs[-1][1].type == "CLOSE"
    assert core.handle(proto.close("s1", USER, 9)) == []
    assert core.handle(proto.close("s1", USER, 9)) == []
    (_d, msg), = core.handle(proto.move("s1", USER, 1, "", 2))
    assert msg.payload["code"] == "unknown-session"


def test_duplicate_session_token_is_rejected():
    core = weather_core()
    core.on_query(AgentId(USER), parse_formula("cloudy + sunny"), "s1")
    (_d, msg), = core.handle(proto.query("s1", USER, 0, "cloudy + sunny", USER))
    assert msg.payload["code"] == "out-of-order"


def test_malformed_query_formula_errors():
    core = weather_core()
    (_d, msg), = core.handle(proto.query("s9", USER, 0, "p ->", USER))
    assert msg.payload["code"] == "parse-error"


def test_annotated_query_is_rejected_on_the_wire():
    core = weather_core()
    (_d, msg), = core.handle(
        proto.query("s9", USER, 0, "cloudy @ weather.com", USER))
    assert msg.payload["code"] == "parse-error"


def test_oversized_query_reports_capacity():
    core = weather_core()
    wide = " \\/ ".join(f"a{i}" for i in range(30))
    (_d, msg), = core.handle(proto.query("s9", USER, 0, f"({wide}) + x", USER))
    assert msg.type == "ERROR"
    assert msg.payload["code"] == "capacity"


def test_asker_resolves_choice_conjunction_of_queried_knowledge():
    # querying knowledge with a choice conjunction: the *asker* picks
    kb = load_kb("agent a.b.\n(x & y) @ res.example.\n")
    asker_core = AgentCore(kb)
    res_kb = load_kb("agent res.example.\nx.\ny.\n")
    net = MemoryNet([asker_core, AgentCore(res_kb)])
    net.post(AgentId("a.b"), proto.query("u:1", USER, 0, "x + d", USER))
    net.run()
    moves = [m for m in net.external[USER] if m.type == "MOVE"]
    assert [(m.payload["spec"], m.payload["index"]) for m in moves] == [("", 1)]
