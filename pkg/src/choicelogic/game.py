"""Turn a proof into a live strategy.

A game tracks the current formula ``E`` and a cursor into the proof tree
whose conclusion is ``E``.  Rule-B nodes are the machine's own steps:
``advance`` runs them eagerly, emitting one move per step addressed to the
matching environment.  Rule-A nodes are wait states: the opponents own every
remaining surface choice, and ``apply_env_move`` consumes one of their moves
by descending into the corresponding premise.  Because every node of a proof
is itself provable, play can never leave the machine stranded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from . import formula as fm
from .formula import (AgentId, AnnotatedFormula, ChoiceAnd, ChoiceOr, Polarity,
                      Spec, format_spec)
from .prover import RULE_MOVE, RULE_WAIT, CheckResult, ProofTree, check_proof

PLAYING = "playing"
RESOLVED = "resolved"


@dataclass(frozen=True)
class Move:
    spec: Spec
    index: int

    def __str__(self) -> str:
        return f"{format_spec(self.spec)}#{self.index}"


class GameError(Exception):
    code = "illegal-move"


class IllegalMoveError(GameError):
    """Move addresses a choice it may not resolve (wrong side, owner,
    non-surface occurrence, or component index out of range)."""
    code = "illegal-move"


class StaleMoveError(GameError):
    """Move addresses something that is not a choice occurrence (typically
    consumed by an earlier replacement)."""
    code = "stale-move"


class WrongPhaseError(GameError):
    """Environment move received while the machine still has steps to play."""
    code = "wrong-phase"


@dataclass(frozen=True)
class GameState:
    formula: AnnotatedFormula                   # E, the current game
    cursor: ProofTree                           # node with conclusion == E
    bindings: Mapping[AgentId, frozenset]       # env -> leaf locations it owns

    @property
    def status(self) -> str:
        if self.cursor.rule == RULE_WAIT and not self.cursor.premises:
            return RESOLVED
        return PLAYING

    @property
    def resolved(self) -> bool:
        return self.status == RESOLVED


def new_game(t: ProofTree, validate: bool = True) -> GameState:
    """Start play at the root of a proof.

    ``validate`` runs the independent proof checker first; untrusted trees
    must not drive a game.
    """
    if validate:
        result: CheckResult = check_proof(t)
        if not result:
            raise ValueError(f"invalid proof tree at {result.path}: {result.reason}")
    bindings: dict = {}
    for loc, leaf in fm.leaf_locations(t.conclusion):
        bindings.setdefault(leaf.env, set()).add(loc)
    frozen = {env: frozenset(locs) for env, locs in bindings.items()}
    return GameState(t.conclusion, t, frozen)


def advance(state: GameState) -> "tuple[GameState, list]":
    """Run the machine's pending steps to quiescence.

    Returns the new state and the emitted moves as (environment, move)
    pairs, in play order.  Stops at a wait state or a resolved game.
    """
    emitted: list = []
    cursor = state.cursor
    while cursor.rule == RULE_MOVE:
        mv = cursor.move
        emitted.append((mv.env, Move(mv.spec, mv.index)))
        cursor = cursor.premises[0]
    if cursor is state.cursor:
        return state, []
    return GameState(cursor.conclusion, cursor, state.bindings), emitted


def legal_env_moves(state: GameState, mover: AgentId) -> list:
    """Exactly the moves ``apply_env_move`` would accept from ``mover``."""
    if state.cursor.rule != RULE_WAIT:
        return []
    out = []
    for sc in fm.surface_choices(state.formula):
        if sc.environment_chooses and sc.env == mover:
            out.extend(Move(sc.spec, i) for i in range(1, sc.arity + 1))
    return out


def apply_env_move(state: GameState, mover: AgentId, move: Move) -> GameState:
    """Apply one legal environment move and descend into its premise.

    Raises WrongPhaseError unless the machine is at a wait state, and
    IllegalMoveError / StaleMoveError (state untouched) for moves that are
    not currently available to ``mover``.
    """
    if state.cursor.rule == RULE_MOVE:
        raise WrongPhaseError("machine still has pending steps; advance first")
    try:
        occ = fm.resolve(state.formula, move.spec)
    except fm.PathError as exc:
        raise StaleMoveError(str(exc)) from None
    if not isinstance(occ.node, (ChoiceAnd, ChoiceOr)):
        raise StaleMoveError(
            f"{format_spec(move.spec)} no longer addresses a choice occurrence")
    if not occ.surface:
        raise IllegalMoveError(
            f"{format_spec(move.spec)} is inside another choice's scope")
    env_side = (occ.polarity is Polarity.POSITIVE if isinstance(occ.node, ChoiceAnd)
                else occ.polarity is Polarity.NEGATIVE)
    if not env_side:
        raise IllegalMoveError(
            f"{format_spec(move.spec)} is resolved by the machine, not its opponents")
    if occ.env != mover:
        raise IllegalMoveError(
            f"occurrence {format_spec(move.spec)} belongs to {occ.env}, not {mover}")
    if not 1 <= move.index <= len(occ.node.parts):
        raise IllegalMoveError(
            f"index {move.index} out of range 1..{len(occ.node.parts)}")
    replaced = fm.replace_at(state.formula, move.spec,
                             occ.node.parts[move.index - 1])
    for premise in state.cursor.premises:
        if premise.conclusion == replaced:
            return GameState(replaced, premise, state.bindings)
    # A checked proof carries every forced premise, so this is unreachable
    # unless the tree was tampered with after new_game.
    raise IllegalMoveError("proof tree has no premise for this move")
