"""Decision procedure and proof objects for the choice-connective logic.

Two rules build proofs.  The *wait* rule (tag ``A``) applies to a stable
formula and takes one premise per component of every opponent-resolved
surface choice; a stable formula with no such choices is an axiom.  The
*move* rule (tag ``B``) replaces one machine-resolved surface choice by a
single component and records which one.

``prove`` is a complete decision procedure: a formula is provable exactly
when the search below succeeds, and the search terminates because every
premise has strictly fewer choice occurrences than its conclusion.  Proof
trees double as play strategies, so rule-B nodes carry their move.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from . import formula as fm
from .formula import (AgentId, AnnotatedFormula, Polarity, Spec,
                      format_spec, print_formula, replace_at, surface_choices)
from .validity import classically_valid

DEFAULT_ENV = AgentId("local")

RULE_WAIT = "A"
RULE_MOVE = "B"


@dataclass(frozen=True)
class ChosenMove:
    """One choice resolution: which occurrence, which component, whose turn."""

    spec: Spec
    index: int
    env: AgentId

    def __str__(self) -> str:
        return f"{format_spec(self.spec)}#{self.index} @ {self.env}"


@dataclass(frozen=True)
class ProofTree:
    conclusion: AnnotatedFormula
    rule: str                        # RULE_WAIT or RULE_MOVE
    premises: tuple
    move: Optional[ChosenMove] = None  # rule B only

    def node_count(self) -> int:
        return 1 + sum(p.node_count() for p in self.premises)


@dataclass(frozen=True)
class Unprovable:
    """Failed search outcome.

    ``blockers`` are the instable subgoals with no move left to try: the
    concrete reasons the formula has no proof.
    """

    formula: AnnotatedFormula
    blockers: tuple


ProofOutcome = Union[ProofTree, Unprovable]


def ensure_annotated(f, default_env: AgentId = DEFAULT_ENV) -> AnnotatedFormula:
    return fm.to_annotated(f, default_env)


def stable(f) -> bool:
    """A formula is stable when replacing its surface choices by constants
    (disjunctions by ``bot``, conjunctions by ``top``) leaves a classical
    tautology."""
    return classically_valid(fm.elementarize(fm.skeleton(f))).valid


def _labelled(choices, machine_side: bool):
    for sc in choices:
        if sc.machine_chooses == machine_side:
            yield sc


def premises_wait(f, default_env: AgentId = DEFAULT_ENV) -> list:
    """Rule-A premises of ``f``: for every environment-resolved surface
    choice and every component index, the formula with that occurrence
    replaced by the component.  Returned as (move, premise) pairs in
    leftmost-occurrence, lowest-index order."""
    out = []
    for sc in _labelled(surface_choices(f, default_env), machine_side=False):
        for i, part in enumerate(sc.node.parts, start=1):
            out.append((ChosenMove(sc.spec, i, sc.env),
                        replace_at(f, sc.spec, part)))
    return out


def premises_move(f, default_env: AgentId = DEFAULT_ENV) -> list:
    """Rule-B premise candidates of ``f``: one per machine-resolved surface
    choice and component index, as (move, premise) pairs in search order."""
    out = []
    for sc in _labelled(surface_choices(f, default_env), machine_side=True):
        for i, part in enumerate(sc.node.parts, start=1):
            out.append((ChosenMove(sc.spec, i, sc.env),
                        replace_at(f, sc.spec, part)))
    return out


def prove(f, default_env: AgentId = DEFAULT_ENV,
          cache: Optional[dict] = None) -> ProofOutcome:
    """Decide provability and return either a proof tree or the blockers.

    Stable formulas take the wait rule and need every premise; instable ones
    take the move rule and need some premise, tried in leftmost-occurrence,
    lowest-index order so that proofs are reproducible.  Identical subgoals
    (same formula, same annotations) share one memoized result.
    """
    j = ensure_annotated(f, default_env)
    if cache is None:
        cache = {}

    def search(goal) -> ProofOutcome:
        hit = cache.get(goal)
        if hit is not None:
            return hit
        if stable(goal):
            premises = []
            blockers: list = []
            for _move, prem in premises_wait(goal, default_env):
                outcome = search(prem)
                if isinstance(outcome, Unprovable):
                    blockers.extend(outcome.blockers)
                else:
                    premises.append(outcome)
            if blockers:
                result: ProofOutcome = Unprovable(goal, _dedup(blockers))
            else:
                result = ProofTree(goal, RULE_WAIT, tuple(premises))
        else:
            candidates = premises_move(goal, default_env)
            blockers = []
            result = None
            for move, prem in candidates:
                outcome = search(prem)
                if isinstance(outcome, ProofTree):
                    result = ProofTree(goal, RULE_MOVE, (outcome,), move)
                    break
                blockers.extend(outcome.blockers)
            if result is None:
                result = Unprovable(goal, _dedup(blockers) if candidates else (goal,))
        cache[goal] = result
        return result

    return search(j)


def provable(f, default_env: AgentId = DEFAULT_ENV) -> bool:
    return isinstance(prove(f, default_env), ProofTree)


def _dedup(items: list) -> tuple:
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return tuple(out)


# --- independent proof checking -------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    ok: bool
    path: Optional[tuple] = None     # premise indices from the root to the bad node
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def check_proof(t: ProofTree, default_env: AgentId = DEFAULT_ENV) -> CheckResult:
    """Re-verify a proof tree against the rules, independently of the search.

    Rule-A nodes must be stable and carry exactly the premises the rule
    forces (as a multiset); rule-B nodes must carry one premise that is the
    recorded replacement.  Returns the path to the first violating node.
    """

    def fail(path, reason):
        return CheckResult(False, tuple(path), reason)

    def visit(node, path) -> CheckResult:
        goal = node.conclusion
        if node.rule == RULE_WAIT:
            if node.move is not None:
                return fail(path, "rule-A node carries a move")
            if not stable(goal):
                return fail(path, "rule-A conclusion is instable")
            expected = [prem for _mv, prem in premises_wait(goal, default_env)]
            actual = [p.conclusion for p in node.premises]
            if sorted(map(print_formula, expected)) != sorted(map(print_formula, actual)):
                return fail(path, "rule-A premises do not match the forced set")
        elif node.rule == RULE_MOVE:
            if len(node.premises) != 1:
                return fail(path, "rule-B node needs exactly one premise")
            mv = node.move
            if mv is None:
                return fail(path, "rule-B node is missing its move")
            try:
                occ = fm.resolve(goal, mv.spec, default_env)
            except fm.PathError as exc:
                return fail(path, f"rule-B move path invalid: {exc}")
            if not isinstance(occ.node, (fm.ChoiceAnd, fm.ChoiceOr)):
                return fail(path, "rule-B move does not address a choice connective")
            if not occ.surface:
                return fail(path, "rule-B move addresses a non-surface occurrence")
            sc_env = occ.env
            machine_side = (occ.polarity is Polarity.NEGATIVE
                            if isinstance(occ.node, fm.ChoiceAnd)
                            else occ.polarity is Polarity.POSITIVE)
            if not machine_side:
                return fail(path, "rule-B move on an opponent-resolved occurrence")
            if not 1 <= mv.index <= len(occ.node.parts):
                return fail(path, "rule-B move index out of range")
            if sc_env != mv.env:
                return fail(path, "rule-B move names the wrong environment")
            replaced = replace_at(goal, mv.spec, occ.node.parts[mv.index - 1])
            if replaced != node.premises[0].conclusion:
                return fail(path, "rule-B premise is not the recorded replacement")
        else:
            return fail(path, f"unknown rule {node.rule!r}")
        for i, prem in enumerate(node.premises, start=1):
            sub = visit(prem, path + [i])
            if not sub:
                return sub
        return CheckResult(True)

    return visit(t, [])


# --- numbered-list serialization -------------------------------------------------

def format_proof(t: ProofTree) -> str:
    """Render a proof as a numbered list, premises before conclusions.

    Repeated subgoals are printed once and referenced by line number.
    """
    lines: list = []
    numbers: dict = {}

    def visit(node) -> int:
        if node in numbers:
            return numbers[node]
        refs = [visit(p) for p in node.premises]
        n = len(lines) + 1
        numbers[node] = n
        if node.rule == RULE_WAIT:
            tail = "rule A"
            if refs:
                tail += "; premises " + " ".join(str(r) for r in refs)
        else:
            tail = f"rule B; premise {refs[0]}; move {node.move}"
        lines.append(f"{n}. {print_formula(node.conclusion)}  [{tail}]")
        return n

    visit(t)
    return "\n".join(lines) + "\n"


_LINE_RE = re.compile(
    r"(?P<n>\d+)\.\s+(?P<formula>.*?)\s+\[(?P<tail>[^\]]*)\]\s*$")
_MOVE_RE = re.compile(
    r"rule B; premise (?P<ref>\d+); move (?P<spec>[0-9.]*)#(?P<i>\d+) @ (?P<env>\S+)$")
_WAIT_RE = re.compile(r"rule A(?:; premises (?P<refs>[\d ]+))?$")


def parse_proof(text: str, default_env: AgentId = DEFAULT_ENV) -> ProofTree:
    """Parse the numbered-list format back into a proof tree."""
    nodes: dict = {}
    last = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise ValueError(f"unparseable proof line: {line!r}")
        n = int(m.group("n"))
        conclusion = fm.parse_annotated(m.group("formula"), default_env)
        tail = m.group("tail")
        wait = _WAIT_RE.match(tail)
        if wait:
            refs = [int(r) for r in (wait.group("refs") or "").split()]
            node = ProofTree(conclusion, RULE_WAIT,
                             tuple(nodes[r] for r in refs))
        else:
            mv = _MOVE_RE.match(tail)
            if not mv:
                raise ValueError(f"unparseable proof rule: {tail!r}")
            move = ChosenMove(fm.parse_spec(mv.group("spec")),
                              int(mv.group("i")), AgentId(mv.group("env")))
            node = ProofTree(conclusion, RULE_MOVE,
                             (nodes[int(mv.group("ref"))],), move)
        nodes[n] = node
        last = node
    if last is None:
        raise ValueError("empty proof")
    return last
