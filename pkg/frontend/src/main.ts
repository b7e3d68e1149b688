/** App shell: hash routing, keyboard-driven queue, filter form wiring. */

import { ReviewApiClient } from "./api";
import { ExplorerController } from "./explorerController";
import { QueueController } from "./queueController";
import {
  renderDecisionControls,
  renderDetail,
  renderExplorerGrid,
  renderFeatureEvidence,
  renderImageEvidence,
  renderSectionEvidence,
  escapeHtml,
} from "./render";
import type { ReviewKind } from "./types";
import { decodeFilters, encodeFilters } from "./urlstate";

const apiBase =
  new URLSearchParams(window.location.search).get("api") ??
  localStorage.getItem("ipocorpus.apiBase") ??
  "";
const client = new ReviewApiClient(apiBase);

const app = document.getElementById("app")!;
const queue = new QueueController(client, () => renderCurrentRoute());
const explorer = new ExplorerController(client, () => renderCurrentRoute());

let sectionTextCache = new Map<string, string>();

function reviewerId(): string {
  let id = localStorage.getItem("ipocorpus.reviewer");
  if (!id) {
    id = `reviewer-${Math.random().toString(36).slice(2, 8)}`;
    localStorage.setItem("ipocorpus.reviewer", id);
  }
  return id;
}

// ---------------------------------------------------------------------------
// routing
// ---------------------------------------------------------------------------

function route(): { view: "queue" | "explore"; query: string } {
  const hash = window.location.hash.replace(/^#\/?/, "");
  const [view, query = ""] = hash.split("?", 2);
  return { view: view === "explore" ? "explore" : "queue", query };
}

async function renderCurrentRoute(): Promise<void> {
  const { view } = route();
  document.querySelectorAll("nav a").forEach((a) => {
    a.classList.toggle("active", a.getAttribute("data-view") === view);
  });
  if (view === "queue") {
    await renderQueueView();
  } else {
    renderExplorerView();
  }
}

// ---------------------------------------------------------------------------
// queue view
// ---------------------------------------------------------------------------

async function renderQueueView(): Promise<void> {
  const state = queue.state;
  const item = queue.current();
  let evidence = `<p class="empty">queue is empty - nothing pending for review</p>`;
  if (item) {
    if (item.kind === "section") {
      let text = sectionTextCache.get(item.item_id);
      if (text === undefined && item.payload_ref) {
        try {
          text = await client.assetText(item.payload_ref);
        } catch {
          text = "(section text unavailable)";
        }
        sectionTextCache.set(item.item_id, text);
      }
      evidence = renderSectionEvidence(item, text ?? "");
    } else if (item.kind === "image") {
      evidence = renderImageEvidence(item, item.payload_ref ? client.assetUrl(item.payload_ref) : null);
    } else {
      evidence = renderFeatureEvidence(item, item.payload_ref ? client.assetUrl(item.payload_ref) : null);
    }
  }
  const banner = state.banner
    ? `<div class="banner ${state.banner.tone}">${escapeHtml(state.banner.text)}</div>`
    : "";
  app.innerHTML = `
    <div class="queue-view">
      ${banner}
      <header class="queue-header">
        <label>kind:
          <select id="kind-select">
            <option value="">all</option>
            <option value="section">section</option>
            <option value="image">image</option>
            <option value="chart_feature">chart_feature</option>
          </select>
        </label>
        <span class="pending">${state.pendingTotal} pending</span>
        <span class="position">${state.items.length ? state.index + 1 : 0}/${state.items.length}</span>
        <span class="hint">keys: 1-9 decide &middot; n/p move &middot; r reload</span>
      </header>
      ${evidence}
      ${item ? renderDecisionControls(item) : ""}
    </div>`;
  const select = document.getElementById("kind-select") as HTMLSelectElement | null;
  if (select) {
    select.value = state.kind ?? "";
    select.onchange = () => {
      void queue.load((select.value || undefined) as ReviewKind | undefined, reviewerId());
    };
  }
  app.querySelectorAll<HTMLButtonElement>("button.decision").forEach((button) => {
    button.onclick = () => {
      void queue.submitByIndex(Number(button.dataset.index));
    };
  });
}

function queueKeyHandler(event: KeyboardEvent): void {
  if (route().view !== "queue") return;
  const target = event.target as HTMLElement | null;
  if (target && ["INPUT", "SELECT", "TEXTAREA"].includes(target.tagName)) return;
  if (event.key >= "1" && event.key <= "9") {
    void queue.submitByIndex(Number(event.key) - 1);
  } else if (event.key === "n" || event.key === "ArrowRight") {
    void queue.next();
  } else if (event.key === "p" || event.key === "ArrowLeft") {
    queue.previous();
  } else if (event.key === "r") {
    void queue.load(queue.state.kind, reviewerId());
  }
}

// ---------------------------------------------------------------------------
// explorer view
// ---------------------------------------------------------------------------

function renderExplorerView(): void {
  const state = explorer.state;
  const f = state.filters;
  const error = state.error ? `<div class="banner error">${escapeHtml(state.error)}</div>` : "";
  app.innerHTML = `
    <div class="explore-view">
      ${error}
      <form id="filter-form" class="filters">
        <label>kind:
          <select name="kind">
            ${["filings", "sections", "images"]
              .map((k) => `<option value="${k}" ${k === f.kind ? "selected" : ""}>${k}</option>`)
              .join("")}
          </select>
        </label>
        <label>division: <input name="division" value="${escapeHtml(f.division ?? "")}" size="5"></label>
        <label>year from: <input name="year_from" value="${escapeHtml(f.year_from ?? "")}" size="4"></label>
        <label>year to: <input name="year_to" value="${escapeHtml(f.year_to ?? "")}" size="4"></label>
        <label>form: <input name="form_type" value="${escapeHtml(f.form_type ?? "")}" size="5"></label>
        <label>label: <input name="label" value="${escapeHtml(f.label ?? "")}" size="12"></label>
        <label>canonical: <input name="canonical_label" value="${escapeHtml(f.canonical_label ?? "")}" size="14"></label>
        <label>class: <input name="final_class" value="${escapeHtml(f.final_class ?? "")}" size="10"></label>
        <label>agreement &ge; <input name="agreement_min" value="${escapeHtml(f.agreement_min ?? "")}" size="5" placeholder="7/8"></label>
        <button type="submit">search</button>
        <span class="total">${state.total} results</span>
      </form>
      ${renderExplorerGrid(f.kind, state.rows)}
      ${state.nextCursor ? `<button id="load-more">load more</button>` : ""}
      ${state.detail ? renderDetail(f.kind, state.detail, detailAssetUrl()) : ""}
    </div>`;

  const form = document.getElementById("filter-form") as HTMLFormElement;
  form.onsubmit = (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const query = encodeFilters(
      decodeFilters(
        new URLSearchParams(
          [...data.entries()].filter(([, v]) => v !== "").map(([k, v]) => [k, String(v)]),
        ).toString(),
      ),
    );
    window.location.hash = `#/explore?${query}`;
  };
  app.querySelectorAll<HTMLTableRowElement>("tr.result-row").forEach((row) => {
    const open = () => explorer.openDetail(Number(row.dataset.index));
    row.onclick = open;
    row.onkeydown = (event) => {
      if (event.key === "Enter") open();
    };
  });
  const more = document.getElementById("load-more");
  if (more) more.onclick = () => void explorer.loadMore();
}

function detailAssetUrl(): string | null {
  const detail = explorer.state.detail;
  const path = detail?.["image_path"];
  return typeof path === "string" ? client.assetUrl(path) : null;
}

// ---------------------------------------------------------------------------
// bootstrap
// ---------------------------------------------------------------------------

async function onHashChange(): Promise<void> {
  const { view, query } = route();
  if (view === "explore") {
    await explorer.search(decodeFilters(query));
  }
  await renderCurrentRoute();
}

window.addEventListener("hashchange", () => void onHashChange());
window.addEventListener("keydown", queueKeyHandler);

void (async () => {
  await queue.load(undefined, reviewerId());
  await onHashChange();
})();
