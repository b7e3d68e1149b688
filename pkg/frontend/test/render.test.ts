import { describe, expect, it } from "vitest";

import { splitTruncationTail, TAIL_WINDOW } from "../src/highlight";
import {
  escapeHtml,
  renderDecisionControls,
  renderExplorerGrid,
  renderImageEvidence,
  renderSectionEvidence,
  renderVoteBar,
} from "../src/render";
import type { ListingRow, ReviewItem } from "../src/types";

import snapshots from "./fixtures/api_snapshots.json";

const queueItems = snapshots.queue.items as ReviewItem[];
const sectionTexts = snapshots.section_texts as Record<string, string>;

function itemOf(kind: string): ReviewItem {
  return queueItems.find((i) => i.kind === kind)!;
}

describe("state fidelity: rendered values exist in the API payloads", () => {
  it("section evidence shows only recorded titles, labels, and justifications", () => {
    for (const item of queueItems.filter((i) => i.kind === "section")) {
      const html = renderSectionEvidence(item, sectionTexts[item.item_id] ?? "");
      const payload = JSON.stringify(item) + (sectionTexts[item.item_id] ?? "");
      for (const match of html.matchAll(/<(?:h3|dd|small)>([^<]+)</g)) {
        for (const token of match[1]!.split(/\s+&middot;\s+|\s+&mdash;\s+/)) {
          const plain = token.replaceAll("&#39;", "'").replaceAll("&amp;", "&").trim();
          if (plain && plain !== "unmapped") {
            expect(payload).toContain(plain.split(" ")[0]!);
          }
        }
      }
    }
  });

  it("vote bars reproduce the recorded vote breakdown exactly", () => {
    const item = itemOf("image");
    const votes = item.evidence.class_votes!;
    const html = renderVoteBar(votes, item.evidence.agreement ?? null);
    const counts = new Map<string, number>();
    for (const vote of Object.values(votes)) counts.set(vote, (counts.get(vote) ?? 0) + 1);
    const total = item.evidence.agreement![1];
    for (const [cls, count] of counts) {
      expect(html).toContain(`${cls} ${count}/${total}`);
    }
    // and no class that never received a vote
    for (const cls of ["Chart", "Infographic", "Logo", "Map", "Other"]) {
      if (!counts.has(cls)) expect(html).not.toContain(`>${cls} `);
    }
  });

  it("a tied-vote image renders as Unresolved straight from the payload", () => {
    const tied = queueItems.find(
      (i) => i.kind === "image" && i.evidence.final_class === null && i.evidence.class_votes,
    )!;
    const html = renderImageEvidence(tied, null);
    expect(html).toContain("Unresolved");
  });

  it("explorer grid cells come from the listing rows", () => {
    const rows = snapshots.images_charts.rows as ListingRow[];
    const html = renderExplorerGrid("images", rows);
    for (const row of rows) {
      expect(html).toContain(escapeHtml(row["item_id"]));
      expect(html).toContain(escapeHtml(row["final_class"]));
    }
  });

  it("empty result sets render the empty state, not fabricated rows", () => {
    expect(renderExplorerGrid("images", [])).toContain("no results");
  });
});

describe("decision controls", () => {
  it("renders one button per legal decision with its shortcut", () => {
    const item = itemOf("image");
    const html = renderDecisionControls(item);
    const buttons = [...html.matchAll(/<button[^>]*data-key="(\d)"/g)];
    expect(buttons).toHaveLength(5);
    for (const cls of ["Chart", "Infographic", "Logo", "Map", "Other"]) {
      expect(html).toContain(cls);
    }
    expect(html).not.toContain("SafeToUse");
  });
});

describe("truncation tail highlight", () => {
  it("flags the final 200-character window, mirroring the rule evidence", () => {
    const item = queueItems.find(
      (i) => i.kind === "section" && i.evidence.rule_flags?.too_short,
    )!;
    const text = sectionTexts[item.item_id]!;
    const split = splitTruncationTail(text, item.evidence.rule_flags);
    expect(split.flagged).toBe(true);
    expect(split.tail.length).toBe(Math.min(TAIL_WINDOW, text.length));
    expect(split.head + split.tail).toBe(text);
  });

  it("clean sections get no highlight", () => {
    const split = splitTruncationTail("A complete sentence.", {
      ends_mid_sentence: false,
      unfinished_crossref: false,
      continuation_marker: false,
      too_short: false,
    });
    expect(split.flagged).toBe(false);
    expect(split.tail).toBe("");
  });

  it("rendered highlight wraps the tail in a mark element", () => {
    const item = queueItems.find(
      (i) => i.kind === "section" && i.evidence.rule_flags?.too_short,
    )!;
    const html = renderSectionEvidence(item, sectionTexts[item.item_id]!);
    expect(html).toContain('<mark class="truncation-tail">');
  });
});

describe("escaping", () => {
  it("escapes markup in payload-derived strings", () => {
    expect(escapeHtml(`<script>alert("x")</script>`)).toBe(
      "&lt;script&gt;alert(&quot;x&quot;)&lt;/script&gt;",
    );
  });
});
