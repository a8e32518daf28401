import { ChoiceButton, ConsoleState, LogEntry, applyEntry, buildMove,
         initialState } from "./state.js";
import { ConsoleSocket, consoleUrl } from "./ws.js";
import { render } from "./ui.js";

const identity =
  new URLSearchParams(location.search).get("as") ?? "human.console";

const root = document.getElementById("app") as HTMLElement;
const log: LogEntry[] = [];
let state: ConsoleState = initialState(identity);
let socket: ConsoleSocket | null = null;

function dispatch(entry: LogEntry): void {
  log.push(entry);
  state = applyEntry(state, entry);
  paint();
}

function paint(): void {
  render(root, state, {
    onChoice(button: ChoiceButton) {
      if (!socket) return;
      const frame = buildMove(state, button);
      socket.send(frame);
      dispatch({ dir: "out", frame });
    },
    onRetry: connect,
  });
}

function connect(): void {
  socket = new ConsoleSocket(consoleUrl(identity), {
    onOpen() {
      state = { ...state, connected: true, notice: null };
      paint();
    },
    onClose() {
      state = { ...state, connected: false,
                notice: "connection lost; the agent may be down" };
      paint();
    },
    onFrame(frame) {
      dispatch({ dir: "in", frame });
    },
    onBadFrame(reason) {
      state = { ...state, notice: `dropped malformed frame: ${reason}` };
      paint();
    },
  });
}

// The frame log is the whole truth: expose it so a session can be saved and
// replayed (the test suite replays recorded logs through the same reducer).
(window as unknown as Record<string, unknown>).consoleFrameLog = log;

connect();
paint();
