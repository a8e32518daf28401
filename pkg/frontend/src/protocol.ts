// Frame schema of the agent wire protocol (see PROTOCOL.md at the repo
// root). The console speaks these exact frames over a WebSocket; there are
// no UI-only message types.

export type FrameType = "QUERY" | "MOVE" | "REFUSE" | "ERROR" | "CLOSE";

export interface Frame {
  type: FrameType;
  session: string;
  sender: string;
  seq: number;
  payload: Record<string, unknown>;
}

export const ERROR_CODES = [
  "unknown-session",
  "illegal-move",
  "stale-move",
  "refused",
  "parse-error",
  "capacity",
  "out-of-order",
] as const;

const TYPES: FrameType[] = ["QUERY", "MOVE", "REFUSE", "ERROR", "CLOSE"];
const SPEC_RE = /^(\d+(\.\d+)*)?$/;

export class FrameError extends Error {}

function fail(reason: string): never {
  throw new FrameError(reason);
}

/** Validate one decoded object against the frame schema. */
export function validateFrame(obj: unknown): Frame {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    fail("frame must be a JSON object");
  }
  const record = obj as Record<string, unknown>;
  const extras = Object.keys(record).filter(
    (k) => !["type", "session", "sender", "seq", "payload"].includes(k),
  );
  if (extras.length > 0) fail(`unexpected frame fields: ${extras.join(", ")}`);
  const { type, session, sender, seq, payload } = record;
  if (typeof type !== "string" || !TYPES.includes(type as FrameType)) {
    fail(`unknown frame type ${String(type)}`);
  }
  if (typeof session !== "string" || session === "") fail("bad session token");
  if (typeof sender !== "string" || sender === "") fail("bad sender");
  if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0) {
    fail("seq must be a nonnegative integer");
  }
  if (typeof payload !== "object" || payload === null) fail("bad payload");
  const p = payload as Record<string, unknown>;
  switch (type) {
    case "QUERY":
      if (typeof p.formula !== "string" || typeof p.asker !== "string") {
        fail("QUERY payload needs formula and asker");
      }
      break;
    case "MOVE":
      if (typeof p.spec !== "string" || !SPEC_RE.test(p.spec)) {
        fail("MOVE payload needs a dot-separated spec");
      }
      if (typeof p.index !== "number" || !Number.isInteger(p.index) || p.index < 1) {
        fail("MOVE index must be a positive integer");
      }
      break;
    case "ERROR":
      if (typeof p.code !== "string" ||
          !(ERROR_CODES as readonly string[]).includes(p.code)) {
        fail(`unknown error code ${String(p.code)}`);
      }
      if (typeof p.text !== "string") fail("ERROR payload needs text");
      break;
    case "REFUSE":
      if (typeof p.reason !== "string") fail("REFUSE payload needs a reason");
      break;
  }
  return record as unknown as Frame;
}

export function decodeFrame(text: string): Frame {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    fail("frame is not valid JSON");
  }
  return validateFrame(obj);
}

export function encodeFrame(frame: Frame): string {
  validateFrame(frame);
  return JSON.stringify(frame);
}

export function moveFrame(
  session: string,
  sender: string,
  seq: number,
  spec: string,
  index: number,
): Frame {
  return { type: "MOVE", session, sender, seq, payload: { spec, index } };
}

export function closeFrame(session: string, sender: string, seq: number): Frame {
  return { type: "CLOSE", session, sender, seq, payload: {} };
}
