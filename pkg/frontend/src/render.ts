/** Pure HTML renderers. Every label, score, and vote shown here comes straight
 * from an API payload; nothing is synthesized client-side.
 */

import { decisionOptionsFor } from "./decisions";
import { flagNames, splitTruncationTail } from "./highlight";
import type { ListingRow, ReviewItem } from "./types";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function renderVoteBar(votes: Record<string, string>, agreement: [number, number] | null): string {
  const counts = new Map<string, number>();
  for (const vote of Object.values(votes)) counts.set(vote, (counts.get(vote) ?? 0) + 1);
  const total = agreement?.[1] ?? Object.keys(votes).length;
  const segments = [...counts.entries()]
    .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]))
    .map(
      ([cls, count]) =>
        `<div class="vote-segment" style="flex:${count}" title="${escapeHtml(cls)}">` +
        `${escapeHtml(cls)} ${count}/${total}</div>`,
    );
  return `<div class="vote-bar" role="img" aria-label="vote breakdown">${segments.join("")}</div>`;
}

export function renderRuleFlags(item: ReviewItem): string {
  const names = flagNames(item.evidence.rule_flags);
  if (names.length === 0) return `<p class="flags none">no rule flags</p>`;
  return `<p class="flags">${names.map((n) => `<span class="flag">${escapeHtml(n)}</span>`).join(" ")}</p>`;
}

export function renderSectionEvidence(item: ReviewItem, sectionText: string): string {
  const judge = item.evidence.judge;
  const split = splitTruncationTail(sectionText, item.evidence.rule_flags);
  const judgeBlock = judge
    ? `<dl class="judge">
         <dt>binary</dt><dd>${escapeHtml(judge.binary_answer)} &mdash; ${escapeHtml(judge.binary_justification)}</dd>
         <dt>likert</dt><dd>${escapeHtml(judge.likert)} &mdash; ${escapeHtml(judge.likert_justification)}</dd>
       </dl>`
    : `<p class="judge none">no judge signals (dry run)</p>`;
  const body = split.flagged
    ? `${escapeHtml(split.head)}<mark class="truncation-tail">${escapeHtml(split.tail)}</mark>`
    : escapeHtml(split.head);
  return `
    <section class="evidence">
      <h3>${escapeHtml(item.evidence.raw_title ?? "")}
        <small>${escapeHtml(item.evidence.canonical_label ?? "unmapped")} &middot; ${escapeHtml(item.evidence.filing_ref ?? "")}</small>
      </h3>
      ${renderRuleFlags(item)}
      ${judgeBlock}
      <pre class="section-text">${body}</pre>
    </section>`;
}

export function renderImageEvidence(item: ReviewItem, assetUrl: string | null): string {
  const votes = item.evidence.class_votes ?? {};
  const img = assetUrl
    ? `<img class="asset" src="${escapeHtml(assetUrl)}" alt="${escapeHtml(item.evidence.file_name ?? "image")}">`
    : "";
  return `
    <section class="evidence">
      <h3>${escapeHtml(item.evidence.file_name ?? "")}
        <small>${escapeHtml(item.evidence.filing_ref ?? "")}</small></h3>
      ${img}
      ${renderVoteBar(votes, item.evidence.agreement ?? null)}
      <p class="final">final class: ${escapeHtml(item.evidence.final_class ?? "Unresolved")}</p>
    </section>`;
}

export function renderFeatureEvidence(item: ReviewItem, assetUrl: string | null): string {
  const features = item.evidence.features;
  if (!features) return `<p class="error">missing features payload</p>`;
  const tied = new Set(features.tied_fields);
  const rows = Object.entries(features)
    .filter(([name]) => name !== "tied_fields")
    .map(
      ([name, value]) =>
        `<tr class="${tied.has(name) ? "tied" : ""}"><th>${escapeHtml(name)}</th><td>${escapeHtml(value)}</td></tr>`,
    )
    .join("");
  const img = assetUrl ? `<img class="asset" src="${escapeHtml(assetUrl)}" alt="chart">` : "";
  return `
    <section class="evidence">
      <h3>${escapeHtml(item.evidence.file_name ?? "")}
        <small>tied fields need correction</small></h3>
      ${img}
      <table class="features">${rows}</table>
    </section>`;
}

export function renderDecisionControls(item: ReviewItem): string {
  const options = decisionOptionsFor(item);
  const buttons = options
    .map(
      (option, index) =>
        `<button class="decision" data-index="${index}" data-key="${escapeHtml(option.key)}">` +
        `<kbd>${escapeHtml(option.key)}</kbd> ${escapeHtml(option.label)}</button>`,
    )
    .join("");
  return `<div class="decisions" role="group" aria-label="decisions">${buttons}</div>`;
}

export function renderExplorerGrid(kind: string, rows: ListingRow[]): string {
  if (rows.length === 0) return `<p class="empty">no results for these filters</p>`;
  const columns = gridColumns(kind);
  const header = columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = rows
    .map((row, index) => {
      const cells = columns
        .map((column) => `<td>${escapeHtml(row[column] ?? "")}</td>`)
        .join("");
      return `<tr class="result-row" data-index="${index}" tabindex="0">${cells}</tr>`;
    })
    .join("");
  return `<table class="grid"><thead><tr>${header}</tr></thead><tbody>${body}</tbody></table>`;
}

function gridColumns(kind: string): string[] {
  if (kind === "filings") return ["accession_number", "cik", "form_type", "filing_date", "sic_code", "division"];
  if (kind === "images") return ["item_id", "file_name", "final_class", "agreement", "verified"];
  return ["item_id", "raw_title", "canonical_label", "label", "token_count_filtered"];
}

export function renderDetail(kind: string, row: ListingRow, assetUrl: string | null): string {
  const provenance = `<p class="provenance">accession ${escapeHtml(row["filing_ref"] ?? row["accession_number"] ?? "")}
    &middot; ${escapeHtml(row["filing_date"] ?? "")} ${escapeHtml(row["sic_code"] ? `SIC ${String(row["sic_code"])}` : "")}</p>`;
  const img = kind === "images" && assetUrl ? `<img class="asset full" src="${escapeHtml(assetUrl)}">` : "";
  const fields = Object.entries(row)
    .filter(([name]) => !["ts", "schema_version"].includes(name))
    .map(([name, value]) => {
      const rendered = typeof value === "object" && value !== null ? JSON.stringify(value) : value;
      return `<tr><th>${escapeHtml(name)}</th><td>${escapeHtml(rendered ?? "")}</td></tr>`;
    })
    .join("");
  return `<aside class="detail">${provenance}${img}<table>${fields}</table></aside>`;
}
