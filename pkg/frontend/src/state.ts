// Console state as a pure function of the frame log.
//
// Every frame that crosses the socket, inbound or outbound, is appended to
// a log; the state below is a fold over that log and nothing else. Replaying
// a recorded log therefore reproduces the exact session views and choice
// buttons the live run rendered.

import {
  Formula,
  SurfaceChoice,
  answererResolves,
  formatSpec,
  parseFormula,
  parseSpec,
  printFormula,
  replaceAt,
  surfaceChoices,
} from "./formula.js";
import { Frame, moveFrame } from "./protocol.js";

export interface LogEntry {
  dir: "in" | "out";
  frame: Frame;
}

export type SessionStatus = "live" | "resolved" | "closed" | "refused";

export interface SessionView {
  id: string;
  asker: string;
  formula: Formula | null;
  status: SessionStatus;
  error: string | null;
  seqIn: number; // next expected frame number from the peer
  seqOut: number; // next frame number we send
}

export interface ConsoleState {
  identity: string;
  connected: boolean;
  order: string[]; // session ids, arrival order
  sessions: Record<string, SessionView>;
  notice: string | null; // connection-level banner
}

export function initialState(identity: string): ConsoleState {
  return { identity, connected: false, order: [], sessions: {}, notice: null };
}

export interface ChoiceButton {
  sessionId: string;
  spec: string;
  index: number;
  label: string;
}

/** The clickable component buttons of one session: exactly the surface
 * choices the console, as the answering side, may resolve. */
export function buttonsOf(view: SessionView): ChoiceButton[] {
  if (view.status !== "live" || view.formula === null) return [];
  const out: ChoiceButton[] = [];
  for (const sc of surfaceChoices(view.formula)) {
    if (!answererResolves(sc)) continue;
    sc.parts.forEach((part, i) => {
      out.push({
        sessionId: view.id,
        spec: formatSpec(sc.spec),
        index: i + 1,
        label: printFormula(part),
      });
    });
  }
  return out;
}

export function formulaText(view: SessionView): string {
  return view.formula === null ? "(unparsed)" : printFormula(view.formula);
}

function cloneView(view: SessionView): SessionView {
  return { ...view };
}

function withSession(
  state: ConsoleState,
  view: SessionView,
  extra?: Partial<ConsoleState>,
): ConsoleState {
  const sessions = { ...state.sessions, [view.id]: view };
  const order = state.order.includes(view.id)
    ? state.order
    : [...state.order, view.id];
  return { ...state, ...extra, sessions, order };
}

function applyMoveTo(view: SessionView, spec: string, index: number,
                     mover: "asker" | "console"): string | null {
  if (view.formula === null) return "no formula to move on";
  let occ: SurfaceChoice | undefined;
  try {
    const path = parseSpec(spec);
    occ = surfaceChoices(view.formula).find(
      (sc) => formatSpec(sc.spec) === formatSpec(path),
    );
  } catch {
    return `malformed move path ${spec}`;
  }
  if (!occ) return `move ${spec} does not address a surface choice`;
  const consoleOwns = answererResolves(occ);
  if ((mover === "console") !== consoleOwns) {
    return `move ${spec} resolves an occurrence owned by the other side`;
  }
  if (index < 1 || index > occ.parts.length) {
    return `component ${index} out of range`;
  }
  view.formula = replaceAt(view.formula, occ.spec, occ.parts[index - 1]);
  if (surfaceChoices(view.formula).length === 0) view.status = "resolved";
  return null;
}

/** The reducer: fold one logged frame into the state. Pure. */
export function applyEntry(state: ConsoleState, entry: LogEntry): ConsoleState {
  const { dir, frame } = entry;
  const existing = state.sessions[frame.session];

  if (dir === "in") {
    switch (frame.type) {
      case "QUERY": {
        let formula: Formula | null = null;
        let error: string | null = null;
        try {
          formula = parseFormula(String(frame.payload.formula));
        } catch (exc) {
          error = `unparseable query: ${String(exc)}`;
        }
        const view: SessionView = {
          id: frame.session,
          asker: String(frame.payload.asker),
          formula,
          status: "live",
          error,
          seqIn: 1,
          seqOut: 0,
        };
        if (formula !== null && surfaceChoices(formula).length === 0) {
          view.status = "resolved";
        }
        return withSession(state, view);
      }
      case "MOVE": {
        if (!existing) return state;
        const view = cloneView(existing);
        if (frame.seq !== view.seqIn) {
          view.error = `out-of-order frame from ${frame.sender}`;
          return withSession(state, view);
        }
        view.seqIn += 1;
        const problem = applyMoveTo(
          view, String(frame.payload.spec), Number(frame.payload.index), "asker");
        if (problem) view.error = problem;
        return withSession(state, view);
      }
      case "ERROR": {
        if (!existing) return state;
        const view = cloneView(existing);
        view.error = `${frame.payload.code}: ${frame.payload.text}`;
        return withSession(state, view);
      }
      case "REFUSE": {
        if (!existing) return state;
        const view = cloneView(existing);
        view.status = "refused";
        return withSession(state, view);
      }
      case "CLOSE": {
        if (!existing) return state;
        const view = cloneView(existing);
        if (view.status === "live") view.status = "closed";
        return withSession(state, view);
      }
    }
  }

  // Outbound frames we emitted: our own moves update the view optimistically;
  // locally-illegal ones only surface an error so the view cannot desync.
  if (frame.type === "MOVE" && existing) {
    const view = cloneView(existing);
    view.seqOut += 1;
    const problem = applyMoveTo(
      view, String(frame.payload.spec), Number(frame.payload.index), "console");
    if (problem) view.error = problem;
    return withSession(state, view);
  }
  if (frame.type === "CLOSE" && existing) {
    const view = cloneView(existing);
    if (view.status === "live") view.status = "closed";
    return withSession(state, view);
  }
  return state;
}

export function replay(identity: string, log: LogEntry[]): ConsoleState {
  return log.reduce(applyEntry, initialState(identity));
}

/** Build the frame for clicking one choice button, numbered with the
 * session's next outbound counter. */
export function buildMove(state: ConsoleState, button: ChoiceButton): Frame {
  const view = state.sessions[button.sessionId];
  if (!view) throw new Error(`unknown session ${button.sessionId}`);
  return moveFrame(button.sessionId, state.identity, view.seqOut,
                   button.spec, button.index);
}
