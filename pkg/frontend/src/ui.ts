// DOM rendering: the whole view is rebuilt from the state on every change.

import { ChoiceButton, ConsoleState, buttonsOf, formulaText } from "./state.js";

export interface UiHandlers {
  onChoice: (button: ChoiceButton) => void;
  onRetry: () => void;
}

const STATUS_LABEL: Record<string, string> = {
  live: "awaiting choices",
  resolved: "resolved",
  closed: "closed",
  refused: "refused",
};

export function render(root: HTMLElement, state: ConsoleState,
                       handlers: UiHandlers): void {
  root.textContent = "";

  const head = document.createElement("header");
  head.innerHTML = `<h1>agent console</h1>
    <p>registered as <strong>${escapeHtml(state.identity)}</strong></p>`;
  root.appendChild(head);

  if (!state.connected) {
    const banner = document.createElement("div");
    banner.className = "banner disconnected";
    banner.textContent = state.notice ?? "disconnected from the agent";
    const retry = document.createElement("button");
    retry.textContent = "reconnect";
    retry.onclick = () => handlers.onRetry();
    banner.appendChild(retry);
    root.appendChild(banner);
  }

  if (state.order.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent = "no sessions yet; queries addressed to this identity will appear here";
    root.appendChild(empty);
    return;
  }

  for (const id of state.order) {
    const view = state.sessions[id];
    const card = document.createElement("section");
    card.className = `session ${view.status}`;
    card.dataset.session = id;

    const title = document.createElement("h2");
    title.textContent = `${view.asker} asks`;
    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = STATUS_LABEL[view.status] ?? view.status;
    title.appendChild(badge);
    card.appendChild(title);

    const formula = document.createElement("pre");
    formula.className = "formula";
    formula.textContent = formulaText(view);
    card.appendChild(formula);

    if (view.error) {
      const err = document.createElement("div");
      err.className = "banner error";
      err.textContent = view.error;
      card.appendChild(err);
    }

    const buttons = buttonsOf(view);
    if (buttons.length > 0) {
      const row = document.createElement("div");
      row.className = "choices";
      for (const button of buttons) {
        const el = document.createElement("button");
        el.textContent = button.label;
        el.title = `occurrence ${button.spec || "(root)"} component ${button.index}`;
        el.onclick = () => handlers.onChoice(button);
        row.appendChild(el);
      }
      card.appendChild(row);
    }
    root.appendChild(card);
  }
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}
