/**
 * Typed client for the liststand HTTP API.
 *
 * Every number and edge the UI shows comes through here; nothing is
 * recomputed client-side. Errors arrive in one envelope
 * ({"error": {"code", "message"}}) and are surfaced verbatim.
 */

export interface SchemaElementWire {
  attrs: [string, string][];
  children: [string, string][];
  content: string | null;
}

export interface SchemaWire {
  root: string;
  elements: Record<string, SchemaElementWire>;
}

export interface SchemaOutWire {
  source: string;
  version: number;
  schema: SchemaWire | null;
}

export interface CollectionWire {
  name: string;
  version: number;
  documents: number;
}

export interface QueryResponseWire {
  documents: string[];
  result_schema: SchemaWire | null;
  schema_error: string | null;
}

export interface ViewWire {
  name: string;
  source: string;
  materialized: boolean;
  stale: boolean;
  built_at_version: number | null;
}

export interface ViewDetailWire extends ViewWire {
  spec: unknown;
  result_schema: SchemaWire | null;
}

export interface GraphNodeWire {
  entity_id: number;
  label: string;
  institution: string | null;
}

export interface GraphEdgeWire {
  a: number;
  b: number;
  weight: number;
}

export interface GraphWire {
  nodes: GraphNodeWire[];
  edges: GraphEdgeWire[];
}

export interface StatsRowWire {
  key: string;
  values: number[];
  tag: string | null;
}

export interface StatsWire {
  kind: string;
  value_names: string[];
  rows: StatsRowWire[];
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function withParams(path: string, params: Record<string, string | number | boolean | undefined>): string {
  const pairs: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined) {
      pairs.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
    }
  }
  return pairs.length ? `${path}?${pairs.join("&")}` : path;
}

export class Client {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let code = `http_${response.status}`;
      let message = response.statusText || `request failed with ${response.status}`;
      try {
        const body = (await response.json()) as { error?: { code?: string; message?: string } };
        if (body.error) {
          code = body.error.code ?? code;
          message = body.error.message ?? message;
        }
      } catch {
        // not an envelope; keep the fallback
      }
      throw new ApiError(code, response.status, message);
    }
    return (await response.json()) as T;
  }

  listCollections(): Promise<CollectionWire[]> {
    return this.request("/collections");
  }

  getSchema(source: string): Promise<SchemaOutWire> {
    return this.request(`/schema/${encodeURIComponent(source)}`);
  }

  query(spec: unknown, limit?: number): Promise<QueryResponseWire> {
    return this.request("/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(limit === undefined ? { spec } : { spec, limit }),
    });
  }

  listViews(): Promise<ViewWire[]> {
    return this.request("/views");
  }

  createView(name: string, spec: unknown, materialized: boolean): Promise<ViewWire> {
    return this.request("/views", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ name, spec, materialized }),
    });
  }

  getView(name: string): Promise<ViewDetailWire> {
    return this.request(`/views/${encodeURIComponent(name)}`);
  }

  refreshView(name: string): Promise<ViewWire> {
    return this.request(`/views/${encodeURIComponent(name)}/refresh`, { method: "POST" });
  }

  getGraph(options: {
    collection?: string;
    minWeight?: number;
    weighting?: "threads" | "pairs";
  } = {}): Promise<GraphWire> {
    return this.request(
      withParams("/graph", {
        kind: "coparticipation",
        collection: options.collection,
        min_weight: options.minWeight,
        weighting: options.weighting,
        format: "json",
      }),
    );
  }

  getStats(kind: string, options: { collection?: string; top?: number; anonymize?: boolean } = {}): Promise<StatsWire> {
    return this.request(
      withParams("/stats", {
        kind,
        collection: options.collection,
        top: options.top,
        anonymize: options.anonymize,
      }),
    );
  }
}

/**
 * Sequence numbers for in-flight requests: a response is applied only if
 * no newer request was issued meanwhile, so stale answers are discarded.
 */
export class RequestGate {
  private seq = 0;

  issue(): number {
    this.seq += 1;
    return this.seq;
  }

  current(ticket: number): boolean {
    return ticket === this.seq;
  }
}
