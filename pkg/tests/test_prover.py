import random

import gen
import oracle
from choicelogic.formula import (AgentId, parse_annotated, parse_formula,
                                 print_formula, skeleton)
from choicelogic.prover import (DEFAULT_ENV, ChosenMove, ProofTree, Unprovable,
                                check_proof, format_proof, parse_proof,
                                premises_move, premises_wait, provable, prove,
                                stable)

W = AgentId("w.example")

EX_BOTH_WAYS = "((p & q) /\\ (p & q)) -> (p & q)"
EX_ONE_MOVE = "p -> (q + p)"


def proof_of(text, env=DEFAULT_ENV):
    outcome = prove(parse_annotated(text, env))
    assert isinstance(outcome, ProofTree), f"expected a proof for {text}"
    return outcome


# --- stability --------------------------------------------------------------------

def test_stable_examples():
    assert stable(parse_formula(EX_BOTH_WAYS))
    assert not stable(parse_formula(EX_ONE_MOVE))
    assert stable(parse_formula("top"))


def test_stable_on_annotated_formulas():
    assert stable(parse_annotated(EX_BOTH_WAYS, W))


# --- premise enumeration --------------------------------------------------------------

def test_wait_premises_absent_for_elementary():
    assert premises_wait(parse_annotated("(p /\\ p) -> p", W)) == []
    assert premises_wait(parse_annotated("p -> p", W)) == []


def test_wait_premises_of_worked_example():
    f = parse_annotated(EX_BOTH_WAYS, W)
    prems = [print_formula(h) for _mv, h in premises_wait(f)]
    assert prems == [
        "(p & q) /\\ (p & q) -> p @ w.example",
        "(p & q) /\\ (p & q) -> q @ w.example",
    ]


def test_move_premises_include_winning_step():
    f = parse_annotated(EX_ONE_MOVE, W)
    steps = [(mv.spec, mv.index, print_formula(h)) for mv, h in premises_move(f)]
    assert ((2,), 2, "p -> p @ w.example") in steps


def test_move_premises_empty_for_elementary():
    assert premises_move(parse_annotated("p -> p", W)) == []


def test_move_premises_on_antecedent_choice():
    f = parse_annotated("(p & q) -> p", W)
    steps = [(mv.spec, mv.index, print_formula(h)) for mv, h in premises_move(f)]
    assert steps == [
        ((1,), 1, "p -> p @ w.example"),
        ((1,), 2, "q -> p @ w.example"),
    ]


# --- the decision procedure ---------------------------------------------------------

def test_proves_worked_example_with_two_wait_premises():
    t = proof_of(EX_BOTH_WAYS)
    assert t.rule == "A"
    assert len(t.premises) == 2
    consequents = {print_formula(skeleton(p.conclusion)) for p in t.premises}
    assert consequents == {"(p & q) /\\ (p & q) -> p", "(p & q) /\\ (p & q) -> q"}
    assert check_proof(t).ok


def test_proves_one_move_example():
    t = proof_of(EX_ONE_MOVE)
    assert t.rule == "B"
    assert t.move == ChosenMove((2,), 2, DEFAULT_ENV)
    assert t.node_count() == 2
    assert t.premises[0].rule == "A"
    assert t.premises[0].premises == ()


def test_unprovable_controls():
    out = prove(parse_formula("p -> (p & q)"))
    assert isinstance(out, Unprovable)
    assert [print_formula(skeleton(b)) for b in out.blockers] == ["p -> q"]
    assert isinstance(prove(parse_formula("p + ~p")), Unprovable)


def test_choice_free_provability_is_stability():
    rng = random.Random(5)
    for _ in range(100):
        f = gen.random_formula(rng, max_choices=0)
        assert provable(f) == stable(f)


def test_annotation_is_irrelevant_to_provability():
    rng = random.Random(17)
    for _ in range(120):
        j = gen.random_annotated(rng)
        assert provable(j) == provable(skeleton(j))


def test_oracle_equivalence_on_random_family():
    rng = random.Random(41)
    for _ in range(250):
        f = gen.random_formula(rng)
        assert provable(f) == oracle.naive_provable(f), print_formula(f)


def test_search_output_always_checks():
    rng = random.Random(59)
    checked = 0
    while checked < 150:
        j = gen.random_annotated(rng)
        outcome = prove(j)
        if isinstance(outcome, ProofTree):
            checked += 1
            assert check_proof(outcome).ok


def test_recursion_depth_bounded_by_choice_count():
    rng = random.Random(71)

    def depth(t):
        return 1 + max((depth(p) for p in t.premises), default=0)

    for _ in range(80):
        j = gen.random_annotated(rng)
        outcome = prove(j)
        if isinstance(outcome, ProofTree):
            from choicelogic.formula import choice_count
            assert depth(outcome) <= 1 + choice_count(j)


def test_memoized_and_plain_search_agree():
    rng = random.Random(83)
    for _ in range(60):
        j = gen.random_annotated(rng)
        shared: dict = {}
        assert isinstance(prove(j, cache=shared), ProofTree) == \
            isinstance(prove(j), ProofTree)


# --- the independent checker rejects corrupted proofs -----------------------------------

def test_checker_rejects_instable_wait_node():
    bad = ProofTree(parse_annotated(EX_ONE_MOVE, W), "A", ())
    res = check_proof(bad)
    assert not res.ok
    assert "instable" in res.reason


def test_checker_accepts_single_axiom_node():
    t = ProofTree(parse_annotated("p -> p", W), "A", ())
    assert check_proof(t).ok


def test_checker_rejects_missing_wait_premises():
    t = proof_of(EX_BOTH_WAYS)
    pruned = ProofTree(t.conclusion, "A", t.premises[:1])
    res = check_proof(pruned)
    assert not res.ok
    assert res.path == ()


def test_checker_rejects_wrong_move_index():
    t = proof_of(EX_ONE_MOVE)
    bad_move = ChosenMove(t.move.spec, 1, t.move.env)
    res = check_proof(ProofTree(t.conclusion, "B", t.premises, bad_move))
    assert not res.ok


def test_checker_rejects_env_owned_move():
    f = parse_annotated(EX_BOTH_WAYS, W)
    # resolving the consequent (opponent-owned) by hand is not a machine step
    h = parse_annotated("((p & q) /\\ (p & q)) -> p", W)
    leaf = prove(h)
    bad = ProofTree(f, "B", (leaf,), ChosenMove((2,), 1, W))
    res = check_proof(bad)
    assert not res.ok
    assert "opponent" in res.reason


def test_checker_reports_path_to_deep_violation():
    t = proof_of(EX_BOTH_WAYS)
    # corrupt the first premise's subtree
    first = t.premises[0]
    bad_first = ProofTree(first.conclusion, "B", first.premises,
                          ChosenMove(first.move.spec, first.move.index,
                                     AgentId("intruder.example")))
    bad = ProofTree(t.conclusion, "A", (bad_first,) + t.premises[1:])
    res = check_proof(bad)
    assert not res.ok
    assert res.path == (1,)


# --- serialization ---------------------------------------------------------------------

def test_proof_round_trips_through_text():
    for text in (EX_BOTH_WAYS, EX_ONE_MOVE, "(p & q) -> (p + q)"):
        t = proof_of(text)
        listing = format_proof(t)
        back = parse_proof(listing)
        assert back == t
        assert format_proof(back) == listing


def test_proof_round_trips_with_multiple_environments():
    rng = random.Random(67)
    seen = 0
    while seen < 40:
        j = gen.random_annotated(rng)
        t = prove(j)
        if not isinstance(t, ProofTree):
            continue
        seen += 1
        listing = format_proof(t)
        back = parse_proof(listing)
        assert back == t
        assert check_proof(back).ok


def test_listing_numbers_premises_before_conclusions():
    listing = format_proof(proof_of(EX_ONE_MOVE)).strip().splitlines()
    assert listing[0].startswith("1. ")
    assert listing[-1].startswith("2. ")
    assert "rule B; premise 1" in listing[-1]


def test_identical_inputs_give_identical_listings():
    a = format_proof(proof_of(EX_BOTH_WAYS))
    b = format_proof(proof_of(EX_BOTH_WAYS))
    assert a == b


def test_shared_subgoals_are_printed_once():
    # Both components of both antecedent choices lead to the same two
    # subgoals, so the memoized proof is a DAG; the listing must print each
    # distinct node once and reference it by number.
    t = proof_of("((p + p) /\\ (p + p)) -> p")
    assert t.rule == "A"
    assert len(t.premises) == 4
    assert len(set(map(id, t.premises))) == 2
    listing = format_proof(t)
    lines = listing.strip().splitlines()
    texts = [line.split("  [", 1)[0].split(". ", 1)[1] for line in lines]
    assert len(texts) == len(set(texts))
    root_refs = lines[-1].split("premises ", 1)[1].rstrip("]").split()
    assert len(root_refs) == 4
    assert len(set(root_refs)) == 2
