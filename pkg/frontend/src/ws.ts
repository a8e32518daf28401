// Thin browser-socket wrapper: one JSON frame per WebSocket text message.

import { Frame, FrameError, decodeFrame, encodeFrame } from "./protocol.js";

export interface SocketHandlers {
  onFrame: (frame: Frame) => void;
  onOpen: () => void;
  onClose: () => void;
  onBadFrame?: (reason: string) => void;
}

export class ConsoleSocket {
  private ws: WebSocket;

  constructor(url: string, handlers: SocketHandlers) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => handlers.onOpen();
    this.ws.onclose = () => handlers.onClose();
    this.ws.onerror = () => handlers.onClose();
    this.ws.onmessage = (event) => {
      try {
        handlers.onFrame(decodeFrame(String(event.data)));
      } catch (exc) {
        if (exc instanceof FrameError && handlers.onBadFrame) {
          handlers.onBadFrame(exc.message);
        }
      }
    };
  }

  send(frame: Frame): void {
    this.ws.send(encodeFrame(frame));
  }

  close(): void {
    this.ws.close();
  }
}

export function consoleUrl(identity: string): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws?as=${encodeURIComponent(identity)}`;
}
