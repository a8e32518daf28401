// Just enough of the object language for the console: parse the queried
// formula, enumerate the surface choices each side may resolve, apply
// moves, and print the current state. Mirrors the agent runtime's grammar,
// canonical flattening, and occurrence-path semantics (negations are
// transparent to paths).

export type NaryKind = "and" | "or" | "cand" | "cor";

export type Formula =
  | { kind: "atom"; name: string }
  | { kind: "top" }
  | { kind: "bot" }
  | { kind: "neg"; body: Formula }
  | { kind: NaryKind; parts: Formula[] }
  | { kind: "implies"; left: Formula; right: Formula };

export type Spec = number[];

export class FormulaSyntaxError extends Error {}

const NARY_TEXT: Record<NaryKind, string> = {
  and: "/\\",
  or: "\\/",
  cand: "&",
  cor: "+",
};

export function nary(kind: NaryKind, parts: Formula[]): Formula {
  const flat: Formula[] = [];
  for (const p of parts) {
    if (p.kind === kind) flat.push(...(p as { parts: Formula[] }).parts);
    else flat.push(p);
  }
  if (flat.length === 0) throw new FormulaSyntaxError(`empty ${kind}`);
  if (flat.length === 1) return flat[0];
  return { kind, parts: flat };
}

// --- parsing -----------------------------------------------------------------

interface Token {
  kind: string; // symbol text, "ident", or "end"
  text: string;
  at: number;
}

const SYMBOLS = ["->", "/\\", "\\/", "~", "&", "+", "(", ")"];

function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  let i = 0;
  outer: while (i < text.length) {
    const c = text[i];
    if (c === " " || c === "\t" || c === "\n" || c === "\r") {
      i += 1;
      continue;
    }
    for (const sym of SYMBOLS) {
      if (text.startsWith(sym, i)) {
        tokens.push({ kind: sym, text: sym, at: i });
        i += sym.length;
        continue outer;
      }
    }
    if (/[a-zA-Z_]/.test(c)) {
      const start = i;
      while (i < text.length && /[a-zA-Z0-9_]/.test(text[i])) i += 1;
      tokens.push({ kind: "ident", text: text.slice(start, i), at: start });
      continue;
    }
    throw new FormulaSyntaxError(`unexpected character ${c} at ${i}`);
  }
  tokens.push({ kind: "end", text: "", at: text.length });
  return tokens;
}

class Parser {
  pos = 0;
  constructor(readonly tokens: Token[]) {}

  peek(): Token {
    return this.tokens[this.pos];
  }

  take(): Token {
    return this.tokens[this.pos++];
  }

  expect(kind: string): Token {
    const tok = this.peek();
    if (tok.kind !== kind) {
      throw new FormulaSyntaxError(
        `expected ${kind}, found ${tok.text || "end of input"} at ${tok.at}`,
      );
    }
    return this.take();
  }

  impl(): Formula {
    const left = this.chain("+", "cor", () => this.chain("&", "cand", () =>
      this.chain("\\/", "or", () => this.chain("/\\", "and", () => this.unary())),
    ));
    if (this.peek().kind === "->") {
      this.take();
      return { kind: "implies", left, right: this.impl() };
    }
    return left;
  }

  chain(op: string, kind: NaryKind, sub: () => Formula): Formula {
    const parts = [sub()];
    while (this.peek().kind === op) {
      this.take();
      parts.push(sub());
    }
    return parts.length === 1 ? parts[0] : nary(kind, parts);
  }

  unary(): Formula {
    const tok = this.peek();
    if (tok.kind === "~") {
      this.take();
      return { kind: "neg", body: this.unary() };
    }
    if (tok.kind === "(") {
      this.take();
      const inner = this.impl();
      this.expect(")");
      return inner;
    }
    if (tok.kind === "ident") {
      this.take();
      if (tok.text === "top") return { kind: "top" };
      if (tok.text === "bot") return { kind: "bot" };
      if (!/^[a-z][a-zA-Z0-9_]*$/.test(tok.text) || tok.text === "agent") {
        throw new FormulaSyntaxError(`bad atom ${tok.text} at ${tok.at}`);
      }
      return { kind: "atom", name: tok.text };
    }
    throw new FormulaSyntaxError(
      `expected a formula, found ${tok.text || "end of input"} at ${tok.at}`,
    );
  }
}

/** Parse an annotation-free formula into canonical (flattened) form. */
export function parseFormula(text: string): Formula {
  const parser = new Parser(tokenize(text));
  const tree = parser.impl();
  const tok = parser.peek();
  if (tok.kind !== "end") {
    throw new FormulaSyntaxError(`trailing input ${tok.text} at ${tok.at}`);
  }
  return tree;
}

// --- printing ---------------------------------------------------------------------

const PREC: Record<string, number> = {
  implies: 2, cor: 3, cand: 4, or: 5, and: 6, neg: 7,
  atom: 8, top: 8, bot: 8,
};

function fmt(f: Formula): { text: string; prec: number } {
  switch (f.kind) {
    case "atom":
      return { text: f.name, prec: 8 };
    case "top":
      return { text: "top", prec: 8 };
    case "bot":
      return { text: "bot", prec: 8 };
    case "neg": {
      const inner = fmt(f.body);
      const body = inner.prec < 7 ? `(${inner.text})` : inner.text;
      return { text: `~${body}`, prec: 7 };
    }
    case "implies": {
      const l = fmt(f.left);
      const r = fmt(f.right);
      const lt = l.prec <= 2 ? `(${l.text})` : l.text;
      const rt = r.prec < 2 ? `(${r.text})` : r.text;
      return { text: `${lt} -> ${rt}`, prec: 2 };
    }
    default: {
      const own = PREC[f.kind];
      const sep = ` ${NARY_TEXT[f.kind]} `;
      const rendered = f.parts.map((p) => {
        const sub = fmt(p);
        return sub.prec < own ? `(${sub.text})` : sub.text;
      });
      return { text: rendered.join(sep), prec: own };
    }
  }
}

export function printFormula(f: Formula): string {
  return fmt(f).text;
}

// --- occurrence paths ----------------------------------------------------------------

export function parseSpec(text: string): Spec {
  if (text === "") return [];
  return text.split(".").map((part) => {
    const n = Number(part);
    if (!Number.isInteger(n) || n < 1) {
      throw new FormulaSyntaxError(`bad occurrence path ${text}`);
    }
    return n;
  });
}

export function formatSpec(spec: Spec): string {
  return spec.join(".");
}

export interface SurfaceChoice {
  spec: Spec;
  kind: "cand" | "cor";
  positive: boolean;
  parts: Formula[];
}

/** All surface choice occurrences, leftmost first. */
export function surfaceChoices(f: Formula): SurfaceChoice[] {
  const out: SurfaceChoice[] = [];
  const walk = (node: Formula, spec: Spec, flips: number): void => {
    switch (node.kind) {
      case "atom":
      case "top":
      case "bot":
        return;
      case "neg":
        walk(node.body, spec, flips + 1);
        return;
      case "implies":
        walk(node.left, [...spec, 1], flips + 1);
        walk(node.right, [...spec, 2], flips);
        return;
      case "cand":
      case "cor":
        out.push({
          spec,
          kind: node.kind,
          positive: flips % 2 === 0,
          parts: node.parts,
        });
        return;
      default:
        node.parts.forEach((p, i) => walk(p, [...spec, i + 1], flips));
    }
  };
  walk(f, [], 0);
  return out;
}

/** Does the *answering* side (the console, when it was queried) resolve this
 * occurrence?  It owns positive choice disjunctions and negative choice
 * conjunctions; the asker owns the other two cases. */
export function answererResolves(sc: SurfaceChoice): boolean {
  return sc.kind === "cor" ? sc.positive : !sc.positive;
}

function peelsToChoice(node: Formula): boolean {
  while (node.kind === "neg") node = node.body;
  return node.kind === "cand" || node.kind === "cor";
}

/** Replace the occurrence at `spec` by `g`, re-flattening on the way up.
 * A choice connective reached through negations keeps those negations. */
export function replaceAt(f: Formula, spec: Spec, g: Formula): Formula {
  const rec = (node: Formula, rest: Spec): Formula => {
    if (rest.length === 0) {
      const rebuild = (n: Formula): Formula =>
        n.kind === "neg" && peelsToChoice(n)
          ? { kind: "neg", body: rebuild(n.body) }
          : g;
      return rebuild(node);
    }
    if (node.kind === "neg") return { kind: "neg", body: rec(node.body, rest) };
    const [i, ...tail] = rest;
    if (node.kind === "implies") {
      if (i === 1) return { kind: "implies", left: rec(node.left, tail), right: node.right };
      if (i === 2) return { kind: "implies", left: node.left, right: rec(node.right, tail) };
      throw new FormulaSyntaxError(`index ${i} out of range on an implication`);
    }
    if (node.kind === "atom" || node.kind === "top" || node.kind === "bot") {
      throw new FormulaSyntaxError("path descends into a leaf");
    }
    if (i < 1 || i > node.parts.length) {
      throw new FormulaSyntaxError(`index ${i} out of range 1..${node.parts.length}`);
    }
    const parts = node.parts.slice();
    parts[i - 1] = rec(parts[i - 1], tail);
    return nary(node.kind, parts);
  };
  return rec(f, spec);
}
