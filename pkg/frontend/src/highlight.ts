/** Split section text so the suspected truncation tail can be highlighted.
 *
 * Mirrors the validator's evidence window: rule flags are computed over the
 * final 200 characters, so that window is what the reviewer should look at.
 */

import type { RuleFlags } from "./types";

export const TAIL_WINDOW = 200;

export interface HighlightedText {
  head: string;
  tail: string; // highlighted when any rule flag fired
  flagged: boolean;
}

export function splitTruncationTail(text: string, flags: RuleFlags | null | undefined): HighlightedText {
  const flagged = Boolean(
    flags &&
      (flags.ends_mid_sentence || flags.unfinished_crossref || flags.continuation_marker || flags.too_short),
  );
  if (!flagged || text.length === 0) {
    return { head: text, tail: "", flagged: false };
  }
  const cut = Math.max(0, text.length - TAIL_WINDOW);
  return { head: text.slice(0, cut), tail: text.slice(cut), flagged: true };
}

export function flagNames(flags: RuleFlags | null | undefined): string[] {
  if (!flags) return [];
  return (Object.keys(flags) as (keyof RuleFlags)[]).filter((name) => flags[name]);
}
