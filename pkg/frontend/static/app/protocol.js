// Frame schema of the agent wire protocol (see PROTOCOL.md at the repo
// root). The console speaks these exact frames over a WebSocket; there are
// no UI-only message types.
export const ERROR_CODES = [
    "unknown-session",
    "illegal-move",
    "stale-move",
    "refused",
    "parse-error",
    "capacity",
    "out-of-order",
];
const TYPES = ["QUERY", "MOVE", "REFUSE", "ERROR", "CLOSE"];
const SPEC_RE = /^(\d+(\.\d+)*)?$/;
export class FrameError extends Error {
}
function fail(reason) {
    throw new FrameError(reason);
}
/** Validate one decoded object against the frame schema. */
export function validateFrame(obj) {
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
        fail("frame must be a JSON object");
    }
    const record = obj;
    const extras = Object.keys(record).filter((k) => !["type", "session", "sender", "seq", "payload"].includes(k));
    if (extras.length > 0)
        fail(`unexpected frame fields: ${extras.join(", ")}`);
    const { type, session, sender, seq, payload } = record;
    if (typeof type !== "string" || !TYPES.includes(type)) {
        fail(`unknown frame type ${String(type)}`);
    }
    if (typeof session !== "string" || session === "")
        fail("bad session token");
    if (typeof sender !== "string" || sender === "")
        fail("bad sender");
    if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0) {
        fail("seq must be a nonnegative integer");
    }
    if (typeof payload !== "object" || payload === null)
        fail("bad payload");
    const p = payload;
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
                !ERROR_CODES.includes(p.code)) {
                fail(`unknown error code ${String(p.code)}`);
            }
            if (typeof p.text !== "string")
                fail("ERROR payload needs text");
            break;
        case "REFUSE":
            if (typeof p.reason !== "string")
                fail("REFUSE payload needs a reason");
            break;
    }
    return record;
}
export function decodeFrame(text) {
    let obj;
    try {
        obj = JSON.parse(text);
    }
    catch {
        fail("frame is not valid JSON");
    }
    return validateFrame(obj);
}
export function encodeFrame(frame) {
    validateFrame(frame);
    return JSON.stringify(frame);
}
export function moveFrame(session, sender, seq, spec, index) {
    return { type: "MOVE", session, sender, seq, payload: { spec, index } };
}
export function closeFrame(session, sender, seq) {
    return { type: "CLOSE", session, sender, seq, payload: {} };
}
