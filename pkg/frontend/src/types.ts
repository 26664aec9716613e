// Wire types mirroring the platform's JSON API. The client renders these
// verbatim and never derives validity, weights or stream contents itself.

export interface Option {
  id: string;
  label: string;
}

export interface EiCard {
  eiId: string;
  type: string;
  slot: string;
  targets: string[];
  parentId: string | null;
  childKind: string | null;
  k: number | null;
  allowFreeText: boolean;
  options: Option[];
  questionText: string;
  groupTags: string[];
}

export type AnswerPayload =
  | { kind: "name"; text: string }
  | { kind: "confirm"; choice: "yes" | "no" | "dont_know" }
  | { kind: "pairwise"; intensity: number }
  | { kind: "set"; chosen: string[] }
  | { kind: "duplicate"; choice: "yes" | "no" | "dont_know" }
  | { kind: "parent"; parentId?: string | null; alternativeName?: string | null };

export interface IntroQuestion {
  text: string;
  options: string[];
}

export interface RegisterResponse {
  participantId: string;
  introTest: IntroQuestion[];
}

export interface SooElement {
  id: string;
  kind: string;
  name: string;
  parentId: string | null;
  state: string;
  definition: string | null;
  validity: number;
  validityStructure: number;
  validityChildren: number | null;
}

export interface SooView {
  goal: string | null;
  goalMeta: { title?: string; description?: string; systemBoundaries?: string };
  phase: string;
  elements: SooElement[];
}

export interface StatsView {
  perParticipantAnswerCount: Record<string, number>;
  platformAnswersLast24h: number;
  activeElementCounts: Record<string, Record<string, number>>;
  phase: string;
  milestoneCount: number;
}

export interface ParticipantStats {
  participantId: string;
  displayName: string;
  stakeholderGroup: string;
  answeredCount: number;
  competency: number;
  reputation: number;
}

export interface DiscussionPost {
  id: string;
  participantId: string;
  text: string;
  atSeq: number;
}

export interface SubmitResult {
  ok: boolean;
  status: number;
  seq?: number;
  error?: string;
}
