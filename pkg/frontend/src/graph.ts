/**
 * Coparticipation graph explorer. The displayed node and edge sets are
 * exactly what GET /graph returned for the current settings; moving the
 * min-weight slider re-queries the service rather than filtering
 * locally. Only layout (positions, colors, stroke widths) is computed
 * here.
 */

import { GraphEdgeWire, GraphWire, RequestGate } from "./api.js";

export interface GraphSettings {
  collection: string;
  minWeight: number;
  weighting: "threads" | "pairs";
}

export interface GraphSource {
  getGraph(options: {
    collection?: string;
    minWeight?: number;
    weighting?: "threads" | "pairs";
  }): Promise<GraphWire>;
}

export class GraphExplorer {
  readonly settings: GraphSettings;
  graph: GraphWire | null = null;
  error: string | null = null;
  private readonly gate = new RequestGate();

  constructor(
    private readonly source: GraphSource,
    settings?: Partial<GraphSettings>,
  ) {
    this.settings = {
      collection: "messages",
      minWeight: 1,
      weighting: "threads",
      ...settings,
    };
  }

  async reload(): Promise<void> {
    const ticket = this.gate.issue();
    try {
      const graph = await this.source.getGraph({
        collection: this.settings.collection,
        minWeight: this.settings.minWeight,
        weighting: this.settings.weighting,
      });
      if (this.gate.current(ticket)) {
        this.graph = graph;
        this.error = null;
      }
    } catch (err) {
      if (this.gate.current(ticket)) {
        this.error = err instanceof Error ? err.message : String(err);
      }
    }
  }

  async setMinWeight(value: number): Promise<void> {
    this.settings.minWeight = value;
    await this.reload();
  }

  async setWeighting(value: "threads" | "pairs"): Promise<void> {
    this.settings.weighting = value;
    await this.reload();
  }

  /** Exactly the edges the service sent; never filtered client-side. */
  displayedEdges(): GraphEdgeWire[] {
    return this.graph ? this.graph.edges : [];
  }
}

const UNAFFILIATED = "#9aa0a6";

/**
 * Stable color per institution name: a small hash picks the hue, so the
 * same institution is the same color on every render and across views.
 */
export function institutionColor(institution: string | null): string {
  if (institution === null || institution === "") {
    return UNAFFILIATED;
  }
  let hash = 0;
  for (let i = 0; i < institution.length; i += 1) {
    hash = (hash * 31 + institution.charCodeAt(i)) >>> 0;
  }
  const hue = hash % 360;
  return `hsl(${hue}, 62%, 46%)`;
}

export interface LayoutPoint {
  x: number;
  y: number;
}

/**
 * Deterministic circle layout: nodes in entity-id order, evenly spaced.
 * Good enough for the corpus sizes at hand and trivially stable.
 */
export function layoutGraph(graph: GraphWire, width: number, height: number): Map<number, LayoutPoint> {
  const positions = new Map<number, LayoutPoint>();
  const ordered = [...graph.nodes].sort((a, b) => a.entity_id - b.entity_id);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.max(10, Math.min(width, height) / 2 - 30);
  const count = ordered.length;
  ordered.forEach((node, index) => {
    const angle = (2 * Math.PI * index) / Math.max(1, count) - Math.PI / 2;
    positions.set(node.entity_id, {
      x: cx + radius * Math.cos(angle),
      y: cy + radius * Math.sin(angle),
    });
  });
  return positions;
}

/** Edge stroke width scaled into [1, 6] px against the heaviest edge. */
export function edgeWidth(weight: number, heaviest: number): number {
  if (heaviest <= 0) {
    return 1;
  }
  return 1 + 5 * (weight / heaviest);
}
