"""Classical propositional validity of elementary (choice-free) formulas.

This backs the stability test of the prover.  Truth-table enumeration is the
reference algorithm on purpose: knowledgebases at this scale are tiny and a
countermodel is worth more than speed.  The atom budget keeps the worst case
around 16M evaluations and turns anything bigger into an explicit error
instead of a silent stall.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .formula import (And, Atom, Bot, ChoiceAnd, ChoiceOr, Implies, Leaf, Neg,
                      Or, Top, atoms, is_elementary)

ATOM_BUDGET = 24

Assignment = dict  # atom name -> bool, total over the formula's atoms


class EvalError(ValueError):
    """Non-elementary input or an assignment that misses an atom."""


class CapacityError(ValueError):
    """The formula has more atoms than the enumeration budget allows."""


def evaluate(f, assignment: Assignment) -> bool:
    """Standard truth-functional evaluation; ``top`` is true, ``bot`` false."""
    if isinstance(f, Atom):
        try:
            return assignment[f.name]
        except KeyError:
            raise EvalError(f"assignment misses atom {f.name!r}") from None
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Neg):
        return not evaluate(f.body, assignment)
    if isinstance(f, Leaf):
        return evaluate(f.payload, assignment)
    if isinstance(f, And):
        return all(evaluate(p, assignment) for p in f.parts)
    if isinstance(f, Or):
        return any(evaluate(p, assignment) for p in f.parts)
    if isinstance(f, Implies):
        return (not evaluate(f.left, assignment)) or evaluate(f.right, assignment)
    if isinstance(f, (ChoiceAnd, ChoiceOr)):
        raise EvalError("formula is not elementary (contains choice connectives)")
    raise EvalError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class Validity:
    valid: bool
    countermodel: Optional[Assignment]

    def __bool__(self) -> bool:
        return self.valid


def classically_valid(f) -> Validity:
    """Decide validity by enumerating all assignments.

    Returns a falsifying assignment when the formula is not valid.
    """
    if not is_elementary(f):
        raise EvalError("formula is not elementary (contains choice connectives)")
    names = sorted(atoms(f))
    if len(names) > ATOM_BUDGET:
        raise CapacityError(
            f"{len(names)} atoms exceed the enumeration budget of {ATOM_BUDGET}")
    for values in itertools.product((False, True), repeat=len(names)):
        assignment = dict(zip(names, values))
        if not evaluate(f, assignment):
            return Validity(False, assignment)
    return Validity(True, None)
