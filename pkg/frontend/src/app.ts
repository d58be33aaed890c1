import { AnnotationClient, ApiValidationError } from "./api.js";
import { CATEGORIES, EFFECTS, LabelPayload, Task, Verdict, VERDICTS } from "./types.js";
import { validateLabel } from "./validation.js";

const VERDICT_KEYS: Record<string, Verdict> = {
  "1": "Toxic",
  "2": "NotToxic",
  "3": "CannotSay",
};

export class QuestionnaireApp {
  private task: Task | null = null;
  private verdict: Verdict | null = null;

  constructor(
    private root: HTMLElement,
    private client: AnnotationClient,
    private annotatorId: string,
  ) {}

  async start(): Promise<void> {
    this.task = await this.client.nextTask(this.annotatorId);
    this.render();
    this.root.ownerDocument.addEventListener("keydown", (ev) => {
      const verdict = VERDICT_KEYS[ev.key];
      if (verdict && this.task) this.setVerdict(verdict);
    });
  }

  /** Current questionnaire state as a submission payload. */
  payload(): LabelPayload {
    const spansInput = this.root.querySelector<HTMLInputElement>("#spans");
    const spans = (spansInput?.value ?? "")
      .split(";")
      .map((s) => s.trim())
      .filter((s) => s.length > 0);
    const checked = (name: string) =>
      Array.from(
        this.root.querySelectorAll<HTMLInputElement>(`input[name=${name}]:checked`),
      ).map((el) => el.value);
    return {
      task_id: this.task?.task_id ?? "",
      annotator_id: this.annotatorId,
      verdict: this.verdict ?? ("" as Verdict),
      categories: checked("category") as LabelPayload["categories"],
      toxic_spans: this.verdict === "Toxic" ? spans : [],
      effects: (this.verdict === "Toxic"
        ? checked("effect")
        : []) as LabelPayload["effects"],
    };
  }

  setVerdict(verdict: Verdict): void {
    this.verdict = verdict;
    this.render();
  }

  private setError(message: string): void {
    const box = this.root.querySelector("#error");
    if (box) box.textContent = message;
  }

  async submit(): Promise<void> {
    const payload = this.payload();
    const problem = validateLabel(payload);
    if (problem) {
      // never send a payload the server would 422; render the rule inline
      this.setError(problem);
      return;
    }
    try {
      await this.client.submitLabel(payload);
    } catch (err) {
      if (err instanceof ApiValidationError) {
        this.setError(`${err.rule}: ${err.message}`);
        return;
      }
      throw err;
    }
    this.verdict = null;
    this.task = await this.client.nextTask(this.annotatorId);
    this.render();
  }

  private render(): void {
    if (!this.task) {
      this.root.innerHTML = "<p id='done'>No tasks left. Thank you!</p>";
      return;
    }
    const t = this.task;
    const audio = t.audio_path
      ? `<audio controls src="/media/${t.audio_path}"></audio>`
      : "";
    const q2 =
      this.verdict === "Toxic"
        ? `<fieldset id="q2">
             <legend>Q2: why is it toxic? (spans and/or effects)</legend>
             <label>Toxic spans (separate with ;):
               <input id="spans" type="text"></label>
             ${EFFECTS.map(
               (e) =>
                 `<label><input type="checkbox" name="effect" value="${e}">${e}</label>`,
             ).join("")}
             ${CATEGORIES.map(
               (c) =>
                 `<label><input type="checkbox" name="category" value="${c}">${c}</label>`,
             ).join("")}
           </fieldset>`
        : "";
    this.root.innerHTML = `
      <section id="task" data-task-id="${t.task_id}">
        <h2>${t.utterance_id} (${t.lang})</h2>
        ${audio}
        <blockquote id="transcript">${t.transcript ?? ""}</blockquote>
        <fieldset id="q1">
          <legend>Q1: verdict (keys 1/2/3)</legend>
          ${VERDICTS.map(
            (v, i) =>
              `<label><input type="radio" name="verdict" value="${v}"
                 ${this.verdict === v ? "checked" : ""}>${i + 1}. ${v}</label>`,
          ).join("")}
        </fieldset>
        ${q2}
        <button id="submit">Submit</button>
        <p id="error" role="alert"></p>
      </section>`;
    this.root
      .querySelectorAll<HTMLInputElement>("input[name=verdict]")
      .forEach((el) =>
        el.addEventListener("change", () => this.setVerdict(el.value as Verdict)),
      );
    this.root
      .querySelector("#submit")
      ?.addEventListener("click", () => void this.submit());
  }
}

export function mount(
  root: HTMLElement,
  baseUrl: string,
  campaignId: string,
  annotatorId: string,
): QuestionnaireApp {
  const app = new QuestionnaireApp(
    root,
    new AnnotationClient(baseUrl, campaignId),
    annotatorId,
  );
  void app.start();
  return app;
}
