/** Typed client for the dialogue turn API (/v1). */

export interface SlotSchema {
  informable_slots: string[];
  requestable_slots: string[];
  response_slots: string[];
}

export interface BeliefJson {
  informable: Record<string, string[]>;
  requestable: string[];
}

export interface TurnPayload {
  session_id?: string;
  belief: BeliefJson;
  match_bin: number;
  response_text: string;
  delex_response: string;
  response_slots: string[];
  kb_records_shown: Record<string, string>[];
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    throw new ApiError(resp.status, `request failed with ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  async schema(): Promise<SlotSchema> {
    return asJson(await fetch(`${this.baseUrl}/v1/schema`));
  }

  async turn(sessionId: string, utterance: string): Promise<TurnPayload> {
    const resp = await fetch(`${this.baseUrl}/v1/turn`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session_id: sessionId, user_utterance: utterance }),
    });
    return asJson(resp);
  }

  async reset(sessionId?: string): Promise<{ session_id: string }> {
    const resp = await fetch(`${this.baseUrl}/v1/session/reset`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session_id: sessionId ?? null }),
    });
    return asJson(resp);
  }
}
