import { describe, expect, it } from "vitest";
import {
  ProtocolError,
  SessionClient,
  TreeStore,
  bindSocket,
  type PushMessage,
  type TreeSnapshot,
} from "../src/protocol";

function jsonResponse(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function recordingClient(result: unknown = { ok: true }) {
  const log: { url: string; method: string; body: unknown }[] = [];
  const client = new SessionClient("http://svc", async (url, init) => {
    log.push({
      url: url.toString(),
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    return jsonResponse(result);
  });
  return { client, log };
}

describe("SessionClient request formation", () => {
  it("hits each endpoint with the documented method, path, and body", async () => {
    const { client, log } = recordingClient();
    await client.createSession({ format_version: 1 });
    await client.scene("s1");
    await client.group("s1", "a", "b");
    await client.addObject("s1", "g1", "o1");
    await client.nest("s1", "g1", "g2");
    await client.wrap("s1", "g1", "g2");
    await client.deleteGroup("s1", "g1");
    await client.toggleMode("s1", "g1");
    await client.setPose("s1", "o1", { translation: [1, 2, 3], rotation: [1, 0, 0, 0] });
    await client.exportGroup("s1", "g1");
    await client.plan("s1", { seed: 7 });
    await client.hulls("s1", [1, 2, 3]);
    await client.hulls("s1");

    expect(log).toEqual([
      { url: "http://svc/session", method: "POST", body: { format_version: 1 } },
      { url: "http://svc/session/s1/scene", method: "GET", body: undefined },
      { url: "http://svc/session/s1/group", method: "POST", body: { a: "a", b: "b" } },
      { url: "http://svc/session/s1/group/g1/object", method: "POST", body: { o: "o1" } },
      { url: "http://svc/session/s1/nest", method: "POST", body: { first: "g1", second: "g2" } },
      { url: "http://svc/session/s1/wrap", method: "POST", body: { a: "g1", b: "g2" } },
      { url: "http://svc/session/s1/group/g1", method: "DELETE", body: undefined },
      { url: "http://svc/session/s1/group/g1/toggle", method: "POST", body: undefined },
      {
        url: "http://svc/session/s1/pose/o1",
        method: "PUT",
        body: { translation: [1, 2, 3], rotation: [1, 0, 0, 0] },
      },
      { url: "http://svc/session/s1/export/g1", method: "POST", body: undefined },
      { url: "http://svc/session/s1/plan", method: "POST", body: { seed: 7 } },
      { url: "http://svc/session/s1/hulls?cursor=1,2,3", method: "GET", body: undefined },
      { url: "http://svc/session/s1/hulls", method: "GET", body: undefined },
    ]);
  });

  it("raises ProtocolError carrying the server's error code", async () => {
    const client = new SessionClient("http://svc", async () =>
      jsonResponse({ error: { code: "ALREADY_GROUPED", message: "a is grouped" } }, 409),
    );
    const err = await client.group("s1", "a", "b").catch((e) => e);
    expect(err).toBeInstanceOf(ProtocolError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("ALREADY_GROUPED");
    expect(err.message).toBe("a is grouped");
  });
});

const EMPTY_TREE: TreeSnapshot = {
  groups: {},
  objects: {},
  roots: [],
  ungrouped: [],
  exported: [],
};

function msg(seq: number, op: string, hulls: Partial<PushMessage["hulls"]> = {}): PushMessage {
  return {
    seq,
    op,
    tree: EMPTY_TREE,
    hulls: { changed: {}, removed: [], ...hulls },
  };
}

describe("TreeStore push ordering", () => {
  it("buffers out-of-order deltas and applies strictly by sequence", () => {
    const store = new TreeStore();
    const applied: number[] = [];
    store.onApply((m) => applied.push(m.seq));

    expect(store.ingest(msg(6, "group"))).toEqual([]);
    expect(store.ingest(msg(7, "toggle"))).toEqual([]);
    expect(store.ingest(msg(4, "sync")).map((m) => m.seq)).toEqual([4]);
    expect(store.ingest(msg(5, "pose")).map((m) => m.seq)).toEqual([5, 6, 7]);
    expect(applied).toEqual([4, 5, 6, 7]);
    expect(store.seq).toBe(7);
  });

  it("drops stale and duplicate messages", () => {
    const store = new TreeStore();
    store.ingest(msg(2, "sync"));
    expect(store.ingest(msg(2, "sync"))).toEqual([]);
    expect(store.ingest(msg(1, "group"))).toEqual([]);
    expect(store.seq).toBe(2);
  });

  it("waits for the sync baseline before applying anything", () => {
    const store = new TreeStore();
    expect(store.ingest(msg(0, "group"))).toEqual([]);
    expect(store.tree).toBeNull();
    // the sync with the same seq supersedes the buffered delta and applies
    const applied = store.ingest(msg(0, "sync"));
    expect(applied.map((m) => m.op)).toEqual(["sync"]);
    expect(store.seq).toBe(0);
    expect(store.tree).not.toBeNull();
  });

  it("accumulates hull payload deltas", () => {
    const h1 = { vertices: [[0, 0, 0]], faces: [[0, 0, 0]] };
    const h2 = { vertices: [[1, 1, 1]], faces: [[0, 0, 0]] };
    const h2b = { vertices: [[2, 2, 2]], faces: [[0, 0, 0]] };
    const store = new TreeStore();
    store.ingest(msg(0, "sync", { changed: { g1: h1 } }));
    store.ingest(msg(1, "group", { changed: { g2: h2 } }));
    store.ingest(msg(2, "delete", { removed: ["g1"] }));
    store.ingest(msg(3, "pose", { changed: { g2: h2b } }));
    expect(store.hulls).toEqual({ g2: h2b });
  });

  it("feeds socket frames through ingest", () => {
    const store = new TreeStore();
    let handler: ((ev: { data: string }) => void) | null = null;
    bindSocket(store, {
      set onmessage(fn: ((ev: { data: string }) => void) | null) {
        handler = fn;
      },
      get onmessage() {
        return handler;
      },
      close() {},
    });
    handler!({ data: JSON.stringify(msg(0, "sync")) });
    handler!({ data: "not json" });
    handler!({ data: JSON.stringify(msg(1, "group")) });
    expect(store.seq).toBe(1);
  });
});
