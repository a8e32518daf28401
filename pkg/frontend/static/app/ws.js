// Thin browser-socket wrapper: one JSON frame per WebSocket text message.
import { FrameError, decodeFrame, encodeFrame } from "./protocol.js";
export class ConsoleSocket {
    constructor(url, handlers) {
        this.ws = new WebSocket(url);
        this.ws.onopen = () => handlers.onOpen();
        this.ws.onclose = () => handlers.onClose();
        this.ws.onerror = () => handlers.onClose();
        this.ws.onmessage = (event) => {
            try {
                handlers.onFrame(decodeFrame(String(event.data)));
            }
            catch (exc) {
                if (exc instanceof FrameError && handlers.onBadFrame) {
                    handlers.onBadFrame(exc.message);
                }
            }
        };
    }
    send(frame) {
        this.ws.send(encodeFrame(frame));
    }
    close() {
        this.ws.close();
    }
}
export function consoleUrl(identity) {
    const proto = location.protocol === "https:" ? "wss" : "ws";
    return `${proto}://${location.host}/ws?as=${encodeURIComponent(identity)}`;
}
