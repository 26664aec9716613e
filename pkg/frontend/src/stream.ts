import type { ApiClient } from "./api.js";
import type { AnswerPayload, EiCard, SubmitResult } from "./types.js";

// Pull-based card queue: one card at a time, hard no-repeat bookkeeping,
// optimistic advance on submit. A repeated delivery is counted but never
// shown twice; a 409 marks the card stale and moves on.

export class StreamFlow {
  readonly delivered = new Set<string>();
  duplicateDeliveries = 0;
  answeredCount = 0;
  staleCount = 0;
  exhausted = false;
  private queue: EiCard[] = [];
  private seed: number;

  constructor(
    private readonly api: ApiClient,
    readonly participantId: string,
    private readonly pageSize = 10,
    seed = 1,
  ) {
    this.seed = seed;
  }

  get current(): EiCard | null {
    return this.queue[0] ?? null;
  }

  get pending(): number {
    return this.queue.length;
  }

  async refill(): Promise<number> {
    const page = await this.api.fetchStream(
      this.participantId,
      this.pageSize,
      this.seed,
    );
    this.seed += 1;
    let added = 0;
    for (const card of page) {
      if (this.delivered.has(card.eiId)) {
        this.duplicateDeliveries += 1;
        continue;
      }
      this.delivered.add(card.eiId);
      this.queue.push(card);
      added += 1;
    }
    if (page.length === 0) this.exhausted = true;
    return added;
  }

  /** Current card after refilling if needed; null when nothing is left. */
  async next(): Promise<EiCard | null> {
    if (this.queue.length === 0 && !this.exhausted) {
      await this.refill();
    }
    return this.current;
  }

  async submitCurrent(payload: AnswerPayload): Promise<SubmitResult> {
    const card = this.current;
    if (card === null) {
      return { ok: false, status: 0, error: "no card to answer" };
    }
    const result = await this.api.submitAnswer(this.participantId, card.eiId, payload);
    if (result.ok) {
      this.answeredCount += 1;
      this.queue.shift();
    } else if (result.status === 409) {
      // already answered elsewhere: stale card, show the next one
      this.staleCount += 1;
      this.queue.shift();
    }
    // 400 keeps the card in place so the participant can fix the input
    return result;
  }
}
