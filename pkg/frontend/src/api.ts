import { ApiError, LabelPayload, Progress, Task } from "./types.js";

export class ApiValidationError extends Error {
  rule: string;

  constructor(err: ApiError) {
    super(err.detail);
    this.rule = err.rule;
  }
}

/** Thin client over the annotation HTTP API. */
export class AnnotationClient {
  constructor(
    private baseUrl: string,
    private campaignId: string,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/api/campaigns/${this.campaignId}${path}`;
  }

  /** Next task for the annotator, or null when the queue is exhausted (204). */
  async nextTask(annotatorId: string): Promise<Task | null> {
    const res = await fetch(
      this.url(`/next?annotator=${encodeURIComponent(annotatorId)}`),
    );
    if (res.status === 204) return null;
    if (!res.ok) throw new Error(`next failed: ${res.status}`);
    return (await res.json()) as Task;
  }

  /** Submit a label; resolves to the log sequence number on 201. */
  async submitLabel(payload: LabelPayload): Promise<number> {
    const res = await fetch(this.url("/labels"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (res.status === 422) {
      throw new ApiValidationError((await res.json()) as ApiError);
    }
    if (res.status !== 201) throw new Error(`submit failed: ${res.status}`);
    const body = (await res.json()) as { ok: boolean; seq: number };
    return body.seq;
  }

  async progress(): Promise<Progress> {
    const res = await fetch(this.url("/progress"));
    if (!res.ok) throw new Error(`progress failed: ${res.status}`);
    return (await res.json()) as Progress;
  }

  /** Export rows (NDJSON minus the trailing summary line) and the summary. */
  async export(): Promise<{ rows: Record<string, unknown>[]; summary: Record<string, unknown> }> {
    const res = await fetch(this.url("/export"));
    if (!res.ok) throw new Error(`export failed: ${res.status}`);
    const lines = (await res.text()).trim().split("\n").map((l) => JSON.parse(l));
    const last = lines[lines.length - 1];
    return { rows: lines.slice(0, -1), summary: last.summary };
  }
}
