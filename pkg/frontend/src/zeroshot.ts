/**
 * Zero-shot topic form controller.
 *
 * Submissions are queued server-side and become active on the next processed
 * slice; a 409 (duplicate name) surfaces as an inline error instead of an
 * exception so the form can render it next to the field.
 */
import { ApiError, TrendwatchApi, ZeroShotDraft } from "./api.js";

export interface SubmitResult {
  ok: boolean;
  message: string;
}

export function validateDraft(draft: ZeroShotDraft): string | null {
  if (!draft.name.trim()) {
    return "name is required";
  }
  if (!draft.description.trim()) {
    return "description is required";
  }
  if (!(draft.beta > 0 && draft.beta < 1)) {
    return "beta must be between 0 and 1 (exclusive)";
  }
  return null;
}

export async function submitZeroShot(
  api: TrendwatchApi,
  draft: ZeroShotDraft,
): Promise<SubmitResult> {
  const invalid = validateDraft(draft);
  if (invalid) {
    return { ok: false, message: invalid };
  }
  try {
    await api.addZeroShot(draft);
    return {
      ok: true,
      message: `queued "${draft.name}" — appears from the next processed slice`,
    };
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      return { ok: false, message: `a topic named "${draft.name}" already exists` };
    }
    if (err instanceof ApiError) {
      return { ok: false, message: `server rejected the topic (${err.status})` };
    }
    return { ok: false, message: "network error; try again" };
  }
}
