import { CATEGORIES, EFFECTS, LabelPayload, VERDICTS } from "./types.js";

/**
 * Client-side mirror of the server's questionnaire rules. Returns null
 * for a payload the server will accept (201), or a human-readable
 * message matching the rule the server would reject with (422).
 *
 * Q1 is the verdict; Q2 (spans/effects) only exists for Toxic verdicts:
 *  - Toxic requires at least one toxic span OR one perlocutionary effect
 *  - NotToxic / CannotSay must leave categories, spans and effects empty
 */
export function validateLabel(payload: LabelPayload): string | null {
  if (!(VERDICTS as readonly string[]).includes(payload.verdict)) {
    return `unknown verdict ${JSON.stringify(payload.verdict)}`;
  }
  const badEffect = payload.effects.find(
    (e) => !(EFFECTS as readonly string[]).includes(e),
  );
  if (badEffect) {
    return `effects outside the allowed options: ${badEffect}`;
  }
  const badCategory = payload.categories.find(
    (c) => !(CATEGORIES as readonly string[]).includes(c),
  );
  if (badCategory) {
    return `unknown categories: ${badCategory}`;
  }
  if (payload.verdict === "Toxic") {
    if (payload.toxic_spans.length === 0 && payload.effects.length === 0) {
      return "Q2 unanswered: a Toxic verdict needs at least one toxic span or one perlocutionary effect";
    }
  } else if (
    payload.categories.length > 0 ||
    payload.toxic_spans.length > 0 ||
    payload.effects.length > 0
  ) {
    return "categories, spans and effects must be empty unless the verdict is Toxic";
  }
  return null;
}
