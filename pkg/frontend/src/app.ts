/** Chat controller: transcript, belief panel, one in-flight request. */

import { ApiClient, type SlotSchema } from "./api.js";
import { errorRow, renderBeliefPanel, turnRow, type TurnView } from "./views.js";

function newSessionId(): string {
  return `web-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

export class ChatApp {
  readonly transcript: TurnView[] = [];
  sessionId = newSessionId();
  private schema!: SlotSchema;
  private inFlight = false;

  private transcriptEl!: HTMLElement;
  private panelEl!: HTMLElement;
  private inputEl!: HTMLInputElement;
  private sendBtn!: HTMLButtonElement;
  private resetBtn!: HTMLButtonElement;
  private bannerEl!: HTMLElement;

  constructor(private root: HTMLElement, private client: ApiClient) {}

  async init(): Promise<void> {
    this.root.innerHTML = `
      <div id="stale-banner" hidden>session may be stale: reset failed, still using the old session</div>
      <div id="transcript"></div>
      <form id="composer">
        <input id="utterance-input" type="text" autocomplete="off" />
        <button id="send-btn" type="submit">send</button>
        <button id="reset-btn" type="button">reset</button>
      </form>
      <aside id="belief-panel"></aside>
    `;
    this.transcriptEl = this.root.querySelector("#transcript")!;
    this.panelEl = this.root.querySelector("#belief-panel")!;
    this.inputEl = this.root.querySelector("#utterance-input")!;
    this.sendBtn = this.root.querySelector("#send-btn")!;
    this.resetBtn = this.root.querySelector("#reset-btn")!;
    this.bannerEl = this.root.querySelector("#stale-banner")!;

    this.root.querySelector("#composer")!.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.sendUtterance(this.inputEl.value);
    });
    this.resetBtn.addEventListener("click", () => void this.resetSession());

    this.schema = await this.client.schema();
    this.renderPanel(null);
  }

  private renderPanel(last: TurnView | null): void {
    renderBeliefPanel(this.panelEl, this.schema, last?.belief ?? null,
      last?.responseSlots ?? [], last?.matchBin ?? null);
  }

  private setBusy(busy: boolean): void {
    this.inFlight = busy;
    this.inputEl.disabled = busy;
    this.sendBtn.disabled = busy;
  }

  async sendUtterance(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || this.inFlight) return;
    this.setBusy(true);
    try {
      const payload = await this.client.turn(this.sessionId, trimmed);
      const view: TurnView = {
        userText: trimmed,
        agentText: payload.response_text,
        belief: payload.belief,
        matchBin: payload.match_bin,
        delexResponse: payload.delex_response,
        responseSlots: payload.response_slots,
      };
      this.transcript.push(view);
      this.transcriptEl.appendChild(turnRow(view));
      this.renderPanel(view);
      this.inputEl.value = "";
    } catch (err) {
      const row = errorRow(`could not reach the agent: ${String(err)}`, () => {
        row.remove();
        void this.sendUtterance(trimmed);
      });
      this.transcriptEl.appendChild(row);
    } finally {
      this.setBusy(false);
    }
  }

  async resetSession(): Promise<void> {
    try {
      const result = await this.client.reset(this.sessionId);
      this.sessionId = result.session_id || newSessionId();
      this.transcript.length = 0;
      this.transcriptEl.textContent = "";
      this.renderPanel(null);
      this.bannerEl.hidden = true;
    } catch {
      this.bannerEl.hidden = false;
    }
  }
}

export async function mountChat(root: HTMLElement, baseUrl: string): Promise<ChatApp> {
  const app = new ChatApp(root, new ApiClient(baseUrl));
  await app.init();
  return app;
}
