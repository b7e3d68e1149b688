/** Review-queue session: load, advance, submit with optimistic advance and rollback. */

import { ApiError, ReviewApiClient } from "./api";
import { decisionOptionsFor } from "./decisions";
import type { ReviewItem, ReviewKind } from "./types";

export interface QueueState {
  items: ReviewItem[];
  index: number;
  nextCursor: string | null;
  pendingTotal: number;
  kind: ReviewKind | undefined;
  reviewer: string;
  banner: { tone: "info" | "error" | "conflict"; text: string } | null;
  busy: boolean;
}

export class QueueController {
  state: QueueState = {
    items: [],
    index: 0,
    nextCursor: null,
    pendingTotal: 0,
    kind: undefined,
    reviewer: "reviewer",
    banner: null,
    busy: false,
  };

  constructor(
    private client: ReviewApiClient,
    private onChange: (state: QueueState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  current(): ReviewItem | null {
    return this.state.items[this.state.index] ?? null;
  }

  async load(kind?: ReviewKind, reviewer?: string): Promise<void> {
    if (reviewer) this.state.reviewer = reviewer;
    this.state.kind = kind;
    this.state.busy = true;
    this.emit();
    try {
      const page = await this.client.queue({ kind, limit: 20 });
      this.state.items = page.items;
      this.state.nextCursor = page.next_cursor;
      this.state.pendingTotal = page.pending_total;
      this.state.index = 0;
      this.state.banner = null;
    } catch (error) {
      this.state.banner = { tone: "error", text: messageOf(error) };
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  async next(): Promise<void> {
    if (this.state.index + 1 < this.state.items.length) {
      this.state.index += 1;
    } else if (this.state.nextCursor) {
      const page = await this.client.queue({
        kind: this.state.kind,
        limit: 20,
        cursor: this.state.nextCursor,
      });
      this.state.items = this.state.items.concat(page.items);
      this.state.nextCursor = page.next_cursor;
      if (this.state.index + 1 < this.state.items.length) this.state.index += 1;
    }
    this.emit();
  }

  previous(): void {
    if (this.state.index > 0) {
      this.state.index -= 1;
      this.emit();
    }
  }

  /** Submit by decision index (keyboard path): options are the legal domain only. */
  async submitByIndex(optionIndex: number, note = ""): Promise<boolean> {
    const item = this.current();
    if (!item) return false;
    const option = decisionOptionsFor(item)[optionIndex];
    if (!option) return false;
    return this.submit(option.decision, note);
  }

  /** Optimistically advance past the current item; roll back if the POST fails. */
  async submit(decision: string | Record<string, unknown>, note = ""): Promise<boolean> {
    const item = this.current();
    if (!item || this.state.busy) return false;
    const itemIndex = this.state.index;
    // optimistic: drop the item from the visible queue and move on immediately
    this.state.items = this.state.items.filter((_, i) => i !== itemIndex);
    this.state.index = Math.min(itemIndex, Math.max(0, this.state.items.length - 1));
    this.state.pendingTotal -= 1;
    this.state.banner = null;
    this.state.busy = true;
    this.emit();
    try {
      await this.client.adjudicate({
        item_id: item.item_id,
        kind: item.kind,
        reviewer: this.state.reviewer,
        decision,
        note,
      });
      this.state.busy = false;
      this.emit();
      return true;
    } catch (error) {
      this.state.busy = false;
      if (error instanceof ApiError && error.status === 409) {
        // someone else decided: refresh the queue so the stale item disappears
        this.state.banner = { tone: "conflict", text: `conflict: ${error.detail}` };
        await this.load(this.state.kind, this.state.reviewer);
        this.state.banner = { tone: "conflict", text: `conflict: ${error.detail}` };
        this.emit();
        return false;
      }
      // rollback: restore the item where it was
      this.state.items = [
        ...this.state.items.slice(0, itemIndex),
        item,
        ...this.state.items.slice(itemIndex),
      ];
      this.state.index = itemIndex;
      this.state.pendingTotal += 1;
      this.state.banner = { tone: "error", text: messageOf(error) };
      this.emit();
      return false;
    }
  }
}

function messageOf(error: unknown): string {
  if (error instanceof ApiError) return error.detail;
  return error instanceof Error ? error.message : String(error);
}
