"""choicelogic: a distributed logic-programming runtime.

Agents hold knowledgebases, prove queries against them, and then *play* the
proved formula: choice connectives are resolved interactively by exchanging
moves with peer agents over a line-oriented JSON protocol, so knowledge one
agent queries for is knowledge another agent answers with.
"""

from .formula import (AgentId, And, Atom, Bot, BOT, ChoiceAnd, ChoiceOr,
                      Formula, FormulaError, Implies, Leaf, Neg, Or, ParseError,
                      PathError, Polarity, Top, TOP, elementarize, format_spec,
                      make_and, make_choice_and, make_choice_or, make_or,
                      parse_annotated, parse_formula, parse_spec, polarity_at,
                      print_formula, replace_at, skeleton, subformula_at,
                      surface_choices, to_annotated)
from .validity import Assignment, CapacityError, EvalError, classically_valid, evaluate
from .prover import (DEFAULT_ENV, ChosenMove, ProofTree, Unprovable, check_proof,
                     format_proof, parse_proof, premises_move, premises_wait,
                     provable, prove, stable)
from .game import (GameState, IllegalMoveError, Move, StaleMoveError,
                   WrongPhaseError, advance, apply_env_move, legal_env_moves,
                   new_game)
from .agent import AgentCore, KBError, KBItem, KnowledgeBase, Session, load_kb
from . import protocol

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
