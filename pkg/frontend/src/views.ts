/**
 * View-list pane state: names, badges, and refresh. All facts shown
 * come from GET /views; a refresh posts and then re-lists.
 */

import { ViewWire } from "./api.js";

export interface ViewsSource {
  listViews(): Promise<ViewWire[]>;
  refreshView(name: string): Promise<ViewWire>;
}

/** Badge strings for one view row, in display order. */
export function badgesFor(view: ViewWire): string[] {
  const badges = [view.materialized ? "materialized" : "virtual"];
  if (view.stale) {
    badges.push("stale");
  }
  return badges;
}

export function canRefresh(view: ViewWire): boolean {
  return view.materialized;
}

export class ViewsPane {
  views: ViewWire[] = [];
  error: string | null = null;

  constructor(private readonly source: ViewsSource) {}

  async load(): Promise<void> {
    try {
      this.views = await this.source.listViews();
      this.error = null;
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
    }
  }

  async refresh(name: string): Promise<void> {
    let failure: string | null = null;
    try {
      await this.source.refreshView(name);
    } catch (err) {
      failure = err instanceof Error ? err.message : String(err);
    }
    // re-list either way, but keep the refresh failure visible
    await this.load();
    if (failure !== null) {
      this.error = failure;
    }
  }
}
