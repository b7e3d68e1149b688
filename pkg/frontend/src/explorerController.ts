/** Corpus explorer: filters to listing queries, deep-linkable through the URL hash. */

import { ApiError, ReviewApiClient } from "./api";
import type { ListingRow } from "./types";
import { ExplorerFilters, filtersToParams } from "./urlstate";

export interface ExplorerState {
  filters: ExplorerFilters;
  rows: ListingRow[];
  total: number;
  nextCursor: string | null;
  exportToken: string | null;
  detail: ListingRow | null;
  error: string | null;
  busy: boolean;
}

export class ExplorerController {
  state: ExplorerState = {
    filters: { kind: "sections" },
    rows: [],
    total: 0,
    nextCursor: null,
    exportToken: null,
    detail: null,
    error: null,
    busy: false,
  };

  constructor(
    private client: ReviewApiClient,
    private onChange: (state: ExplorerState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  async search(filters?: ExplorerFilters): Promise<void> {
    if (filters) this.state.filters = filters;
    this.state.busy = true;
    this.state.detail = null;
    this.emit();
    try {
      const page = await this.client.list(this.state.filters.kind, filtersToParams(this.state.filters));
      this.state.rows = page.rows;
      this.state.total = page.total;
      this.state.nextCursor = page.next_cursor;
      this.state.exportToken = page.export_token;
      this.state.error = null;
    } catch (error) {
      this.state.rows = [];
      this.state.total = 0;
      this.state.exportToken = null;
      this.state.error = error instanceof ApiError ? error.detail : String(error);
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  async loadMore(): Promise<void> {
    if (!this.state.nextCursor) return;
    const params = { ...filtersToParams(this.state.filters), cursor: this.state.nextCursor };
    const page = await this.client.list(this.state.filters.kind, params);
    this.state.rows = this.state.rows.concat(page.rows);
    this.state.nextCursor = page.next_cursor;
    this.emit();
  }

  openDetail(index: number): void {
    this.state.detail = this.state.rows[index] ?? null;
    this.emit();
  }

  closeDetail(): void {
    this.state.detail = null;
    this.emit();
  }
}
