// @vitest-environment jsdom
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { mountChat, type ChatApp } from "../src/app.js";
import { CALENDAR_UTTERANCE, startMockServer, type MockServer } from "./mock_server.js";

let server: MockServer;
let app: ChatApp;
let root: HTMLElement;

async function freshApp(base?: string): Promise<ChatApp> {
  document.body.innerHTML = ""; // one app per page; ids are document-unique
  root = document.createElement("div");
  document.body.appendChild(root);
  return mountChat(root, base ?? server.baseUrl);
}

beforeEach(async () => {
  server = await startMockServer();
  app = await freshApp();
});

afterEach(async () => {
  document.body.innerHTML = "";
  await server.close();
});

function panelText(selector: string): string[] {
  return [...root.querySelectorAll(selector)].map((n) => n.textContent ?? "");
}

function onSlots(selector: string): string[] {
  return [...root.querySelectorAll(`${selector}.on`)].map(
    (n) => (n as HTMLElement).dataset.slot ?? "");
}

describe("schema-driven belief panel", () => {
  it("renders exactly the slots the server declares", () => {
    expect(panelText(".inf-slot .slot-name")).toEqual(["event", "poi_type"]);
    expect(panelText(".req-flag")).toEqual(["date", "time", "party"]);
    expect(panelText(".resp-slot")).toEqual(["date_SLOT", "time_SLOT", "party_SLOT"]);
    expect(root.querySelectorAll(".match-bin")).toHaveLength(5);
  });

  it("starts with an empty belief and no highlighted match bin", () => {
    expect(panelText(".inf-slot .slot-value")).toEqual(["—", "—"]);
    expect(onSlots(".req-flag")).toEqual([]);
    expect(root.querySelectorAll(".match-bin.on")).toHaveLength(0);
  });
});

describe("send_utterance", () => {
  it("renders the calendar example: belief, flags, filled response", async () => {
    await app.sendUtterance(CALENDAR_UTTERANCE);

    const rows = root.querySelectorAll(".turn-row");
    expect(rows).toHaveLength(1);
    expect(rows[0].querySelector(".user-text")!.textContent).toBe(CALENDAR_UTTERANCE);
    expect(rows[0].querySelector(".agent-text")!.textContent).toBe(
      "your next meeting is on the 13th at 11 am with the vice president");
    expect(rows[0].querySelector(".delex-text")!.textContent).toBe(
      "your next meeting is on date_SLOT at time_SLOT with party_SLOT");

    const eventRow = root.querySelector('.inf-slot[data-slot="event"] .slot-value');
    expect(eventRow!.textContent).toBe("meeting");
    expect(onSlots(".req-flag")).toEqual(["date", "time", "party"]);
    expect(onSlots(".resp-slot")).toEqual(["date_SLOT", "time_SLOT", "party_SLOT"]);
    const onBin = root.querySelector(".match-bin.on") as HTMLElement;
    expect(onBin.dataset.bin).toBe("1");
  });

  it("panel content equals the payload verbatim (no client inference)", async () => {
    await app.sendUtterance(CALENDAR_UTTERANCE);
    const view = app.transcript[0];
    expect(view.belief).toEqual({
      informable: { event: ["meeting"] },
      requestable: ["date", "time", "party"],
    });
    expect(view.responseSlots).toEqual(["date_SLOT", "time_SLOT", "party_SLOT"]);
  });

  it("ignores empty input without issuing a request", async () => {
    await app.sendUtterance("   ");
    expect(server.stats.turns).toBe(0);
    expect(root.querySelectorAll(".turn-row, .error-row")).toHaveLength(0);
  });

  it("disables the input while a request is in flight", async () => {
    await server.close();
    server = await startMockServer({ delayMs: 120 });
    app = await freshApp();
    const input = root.querySelector("#utterance-input") as HTMLInputElement;

    const pending = app.sendUtterance("when is it");
    expect(input.disabled).toBe(true);
    await pending;
    expect(input.disabled).toBe(false);
  });

  it("renders an error row with retry on a 500 and keeps the transcript", async () => {
    await app.sendUtterance("when is it");
    server.failNextTurns(1);
    await app.sendUtterance(CALENDAR_UTTERANCE);

    expect(root.querySelectorAll(".turn-row")).toHaveLength(1);
    const error = root.querySelector(".error-row");
    expect(error).not.toBeNull();
    expect(app.transcript).toHaveLength(1);

    // retry after the server recovers replaces the failure with a turn
    (error!.querySelector(".retry-btn") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 50));
    expect(root.querySelectorAll(".error-row")).toHaveLength(0);
    expect(root.querySelectorAll(".turn-row")).toHaveLength(2);
  });
});

describe("reset_session", () => {
  it("clears the transcript and belief panel and adopts a new session id", async () => {
    await app.sendUtterance(CALENDAR_UTTERANCE);
    await app.sendUtterance("when is it");
    await app.sendUtterance("when is it");
    const before = app.sessionId;

    await app.resetSession();
    expect(app.sessionId).not.toBe(before);
    expect(app.transcript).toHaveLength(0);
    expect(root.querySelectorAll(".turn-row")).toHaveLength(0);
    expect(panelText(".inf-slot .slot-value")).toEqual(["—", "—"]);
    expect(onSlots(".req-flag")).toEqual([]);
  });

  it("is a visual no-op on a fresh session", async () => {
    const html = root.querySelector("#belief-panel")!.innerHTML;
    await app.resetSession();
    expect(root.querySelectorAll(".turn-row")).toHaveLength(0);
    expect(root.querySelector("#belief-panel")!.innerHTML).toBe(html);
  });

  it("replaying the same utterances yields identical turn views", async () => {
    const script = [CALENDAR_UTTERANCE, "when is it"];
    for (const u of script) await app.sendUtterance(u);
    const first = JSON.stringify(app.transcript);

    await app.resetSession();
    for (const u of script) await app.sendUtterance(u);
    const second = JSON.stringify(app.transcript);
    expect(second).toBe(first);
  });

  it("shows the stale-session banner when reset cannot reach the server", async () => {
    const banner = root.querySelector("#stale-banner") as HTMLElement;
    expect(banner.hidden).toBe(true);
    await server.close();
    await app.resetSession();
    expect(banner.hidden).toBe(false);
    server = await startMockServer(); // for afterEach cleanup
  });
});
