#!/usr/bin/env python3
"""Regenerate fixtures/formula-cases.json from the agent runtime.

The console reimplements formula parsing, printing, surface-choice
enumeration and move application in TypeScript; these fixtures pin the two
implementations together. Requires the choicelogic package on the path
(pip install -e ..).
"""

import json
import random
import sys
from pathlib import Path

from choicelogic.formula import (ChoiceAnd, format_spec, parse_formula,
                                 print_formula, replace_at, surface_choices)

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
import gen  # noqa: E402

HAND_PICKED = (
    "(cloudy /\\ hot) -> green",
    "p + q + r",
    "((p & q) /\\ (p & q)) -> (p & q)",
    "p -> (q + p)",
    "~(p & q) \\/ (r + s)",
    "cloudy + sunny",
    "hot + cold",
    "green + blue + yellow + red",
)


def choice_record(f, sc):
    answerer_owns = (sc.polarity.value == "positive") ^ isinstance(sc.node, ChoiceAnd)
    return {
        "spec": format_spec(sc.spec),
        "kind": "cand" if isinstance(sc.node, ChoiceAnd) else "cor",
        "positive": sc.polarity.value == "positive",
        "answererResolves": answerer_owns,
        "parts": [print_formula(p) for p in sc.node.parts],
        "replacements": [print_formula(replace_at(f, sc.spec, p))
                         for p in sc.node.parts],
    }


def main():
    rng = random.Random(424242)
    texts = set(HAND_PICKED)
    while len(texts) < 88:
        texts.add(print_formula(gen.random_formula(rng)))

    records = []
    for text in sorted(texts):
        f = parse_formula(text)
        records.append({
            "text": text,
            "printed": print_formula(f),
            "choices": [choice_record(f, sc) for sc in surface_choices(f)],
        })

    out = Path(__file__).resolve().parents[1] / "fixtures" / "formula-cases.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(records, indent=1) + "\n")
    print(f"wrote {len(records)} cases to {out}")


if __name__ == "__main__":
    main()
