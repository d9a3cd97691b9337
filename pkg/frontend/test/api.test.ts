import { describe, expect, it } from "vitest";

import { ApiError, Client, RequestGate } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function clientFor(handler: (url: string, init?: RequestInit) => Response): {
  client: Client;
  calls: Array<{ url: string; init?: RequestInit }>;
} {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const client = new Client("http://svc", (url, init) => {
    calls.push({ url, init });
    return Promise.resolve(handler(url, init));
  });
  return { client, calls };
}

describe("Client", () => {
  it("surfaces the error envelope verbatim", async () => {
    const { client } = clientFor(() =>
      jsonResponse(404, { error: { code: "unknown_view", message: "no view named x" } }),
    );
    const err = await client.getView("x").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe("unknown_view");
    expect((err as ApiError).message).toBe("no view named x");
    expect((err as ApiError).status).toBe(404);
  });

  it("falls back to an http_<status> code for non-envelope errors", async () => {
    const { client } = clientFor(
      () => new Response("gateway exploded", { status: 502, statusText: "Bad Gateway" }),
    );
    const err = await client.listViews().catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("http_502");
    expect((err as ApiError).message).toBe("Bad Gateway");
  });

  it("posts the query spec, with limit only when given", async () => {
    const { client, calls } = clientFor(() =>
      jsonResponse(200, { documents: [], result_schema: null, schema_error: null }),
    );
    await client.query({ source: "messages" });
    await client.query({ source: "messages" }, 5);
    expect(calls[0].url).toBe("http://svc/query");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ spec: { source: "messages" } });
    expect(JSON.parse(String(calls[1].init?.body))).toEqual({
      spec: { source: "messages" },
      limit: 5,
    });
  });

  it("asks for the coparticipation graph as json with the chosen knobs", async () => {
    const { client, calls } = clientFor(() => jsonResponse(200, { nodes: [], edges: [] }));
    await client.getGraph({ collection: "ws-xml", minWeight: 3, weighting: "pairs" });
    expect(calls[0].url).toBe(
      "http://svc/graph?kind=coparticipation&collection=ws-xml&min_weight=3&weighting=pairs&format=json",
    );
  });

  it("escapes names in view paths", async () => {
    const { client, calls } = clientFor(() =>
      jsonResponse(200, { name: "a b", source: "m", materialized: true, stale: false, built_at_version: 1 }),
    );
    await client.refreshView("a b");
    expect(calls[0].url).toBe("http://svc/views/a%20b/refresh");
    expect(calls[0].init?.method).toBe("POST");
  });
});

describe("RequestGate", () => {
  it("treats only the newest ticket as current", () => {
    const gate = new RequestGate();
    const first = gate.issue();
    const second = gate.issue();
    expect(gate.current(first)).toBe(false);
    expect(gate.current(second)).toBe(true);
  });
});
