/** Pure DOM builders. The belief panel is a straight projection of the
 * last server payload: no client-side inference, no hardcoded slots. */

import type { BeliefJson, SlotSchema } from "./api.js";

export interface TurnView {
  userText: string;
  agentText: string;
  belief: BeliefJson;
  matchBin: number;
  delexResponse: string;
  responseSlots: string[];
}

export const MATCH_LABELS = ["0", "1", "2", "3", "4+"];

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function turnRow(view: TurnView): HTMLElement {
  const row = el("div", "turn-row");
  row.appendChild(el("div", "user-text", view.userText));
  row.appendChild(el("div", "agent-text", view.agentText));
  row.appendChild(el("div", "delex-text", view.delexResponse));
  return row;
}

export function errorRow(message: string, onRetry: () => void): HTMLElement {
  const row = el("div", "error-row");
  row.appendChild(el("span", "error-text", message));
  const retry = el("button", "retry-btn", "retry") as HTMLButtonElement;
  retry.addEventListener("click", onRetry);
  row.appendChild(retry);
  return row;
}

export function renderBeliefPanel(
  panel: HTMLElement,
  schema: SlotSchema,
  belief: BeliefJson | null,
  responseSlots: string[],
  matchBin: number | null,
): void {
  panel.textContent = "";

  const informable = el("div", "panel-section informable");
  informable.appendChild(el("h3", undefined, "constraints"));
  for (const slot of schema.informable_slots) {
    const row = el("div", "inf-slot");
    row.dataset.slot = slot;
    const tokens = belief?.informable[slot] ?? [];
    row.appendChild(el("span", "slot-name", slot));
    row.appendChild(el("span", "slot-value", tokens.length ? tokens.join(" ") : "—"));
    informable.appendChild(row);
  }
  panel.appendChild(informable);

  const requestable = el("div", "panel-section requestable");
  requestable.appendChild(el("h3", undefined, "requested"));
  for (const slot of schema.requestable_slots) {
    const flag = el("span", "req-flag", slot);
    flag.dataset.slot = slot;
    if (belief?.requestable.includes(slot)) flag.classList.add("on");
    requestable.appendChild(flag);
  }
  panel.appendChild(requestable);

  const response = el("div", "panel-section response-slots");
  response.appendChild(el("h3", undefined, "response slots"));
  for (const slot of schema.response_slots) {
    const flag = el("span", "resp-slot", slot);
    flag.dataset.slot = slot;
    if (responseSlots.includes(slot)) flag.classList.add("on");
    response.appendChild(flag);
  }
  panel.appendChild(response);

  const match = el("div", "panel-section match");
  match.id = "match-indicator";
  match.appendChild(el("h3", undefined, "kb matches"));
  MATCH_LABELS.forEach((label, i) => {
    const bin = el("span", "match-bin", label);
    bin.dataset.bin = String(i);
    if (matchBin === i) bin.classList.add("on");
    match.appendChild(bin);
  });
  panel.appendChild(match);
}
