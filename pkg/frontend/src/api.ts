import type {
  AnswerPayload,
  DiscussionPost,
  EiCard,
  ParticipantStats,
  RegisterResponse,
  SooView,
  StatsView,
  SubmitResult,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      detail = body.error ?? body.detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new Error(`request failed: ${detail}`);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly base: string = "",
  ) {}

  private url(path: string): string {
    return this.base + path;
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.fetchFn(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async register(
    name: string,
    stakeholderGroup: string,
    selfEstimation: string,
  ): Promise<RegisterResponse> {
    return asJson(
      await this.post("/api/participants", { name, stakeholderGroup, selfEstimation }),
    );
  }

  async submitIntroTest(
    participantId: string,
    choices: number[],
  ): Promise<{ competency: number }> {
    return asJson(
      await this.post(`/api/participants/${participantId}/intro-test`, { choices }),
    );
  }

  async fetchStream(participantId: string, count: number, seed: number): Promise<EiCard[]> {
    const response = await this.fetchFn(
      this.url(`/api/participants/${participantId}/stream?count=${count}&seed=${seed}`),
    );
    const body = await asJson<{ instances: EiCard[] }>(response);
    return body.instances;
  }

  /** Submit one answer; 409 (repeat) and 400 (invalid) come back as statuses. */
  async submitAnswer(
    participantId: string,
    eiId: string,
    payload: AnswerPayload,
  ): Promise<SubmitResult> {
    const response = await this.post("/api/answers", { eiId, participantId, payload });
    if (response.status === 202) {
      const body = (await response.json()) as { seq: number };
      return { ok: true, status: 202, seq: body.seq };
    }
    let error = `${response.status}`;
    try {
      const body = await response.json();
      error = body.error ?? body.detail ?? error;
    } catch {
      // keep the numeric fallback
    }
    return { ok: false, status: response.status, error };
  }

  async fetchSoo(): Promise<SooView> {
    return asJson(await this.fetchFn(this.url("/api/soo")));
  }

  async fetchStats(): Promise<StatsView> {
    return asJson(await this.fetchFn(this.url("/api/stats")));
  }

  async fetchParticipantStats(participantId: string): Promise<ParticipantStats> {
    return asJson(
      await this.fetchFn(this.url(`/api/participants/${participantId}/stats`)),
    );
  }

  async fetchDiscussion(elementId: string): Promise<DiscussionPost[]> {
    const body = await asJson<{ posts: DiscussionPost[] }>(
      await this.fetchFn(this.url(`/api/elements/${elementId}/discussion`)),
    );
    return body.posts;
  }

  async postDiscussion(
    elementId: string,
    participantId: string,
    text: string,
  ): Promise<{ postId: string }> {
    return asJson(
      await this.post(`/api/elements/${elementId}/discussion`, { participantId, text }),
    );
  }
}
