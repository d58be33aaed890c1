export const VERDICTS = ["Toxic", "NotToxic", "CannotSay"] as const;
export type Verdict = (typeof VERDICTS)[number];

export const EFFECTS = ["RaisedVoice", "AggressiveTone", "VeiledThreat"] as const;
export type Effect = (typeof EFFECTS)[number];

export const CATEGORIES = [
  "Profanity",
  "HateSpeech",
  "Pornographic",
  "ViolenceBullying",
] as const;
export type Category = (typeof CATEGORIES)[number];

export interface Task {
  task_id: string;
  utterance_id: string;
  lang: string;
  audio_path: string | null;
  transcript: string | null;
  status: string;
}

export interface LabelPayload {
  task_id: string;
  annotator_id: string;
  verdict: Verdict;
  categories: Category[];
  toxic_spans: string[];
  effects: Effect[];
}

export interface Progress {
  total: number;
  status: { pending: number; assigned: number; done: number };
  verdicts: Record<Verdict, number>;
}

export interface ApiError {
  rule: string;
  detail: string;
}
