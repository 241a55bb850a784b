// Wire types and a typed client for the authoring session service.
// The server is the single source of truth: the client never mutates its
// own copy of the tree, it re-renders from push deltas.

export interface PoseDoc {
  translation: [number, number, number];
  rotation: [number, number, number, number];
}

export interface GroupNode {
  mode: "relative" | "absolute";
  parent: string | null;
  children: string[];
  pose: PoseDoc;
  world: PoseDoc;
}

export interface ObjectNode {
  group: string | null;
  padding: number;
  pose: PoseDoc;
  world: PoseDoc;
}

export interface TreeSnapshot {
  groups: Record<string, GroupNode>;
  objects: Record<string, ObjectNode>;
  roots: string[];
  ungrouped: string[];
  exported: string[];
}

export interface HullPayload {
  vertices: number[][];
  faces: number[][];
}

export interface HullDelta {
  changed: Record<string, HullPayload>;
  removed: string[];
}

export interface PushMessage {
  seq: number;
  op: string;
  tree: TreeSnapshot;
  hulls: HullDelta;
}

export interface SessionInfo {
  session: string;
  seq: number;
  tree: TreeSnapshot;
}

export interface VisibleHulls {
  seq: number;
  visible: string[];
  hulls: Record<string, HullPayload>;
}

export interface PlanStepDoc {
  object: string;
  group: string;
  pick: number[];
  place: number[];
  trajectory: number[][];
}

export interface PlanFile {
  format_version: number;
  seed: number;
  placements: Record<string, PoseDoc>;
  diagnostics: Record<string, unknown>;
  tour: { order: string[]; length: number };
  sequences: {
    group: string;
    order: string[];
    cost: number;
    configs: Record<string, number[]>;
  }[];
  steps: PlanStepDoc[];
  staging: Record<string, PoseDoc>;
  hulls: Record<string, HullPayload>;
}

export class ProtocolError extends Error {
  status: number;
  code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class SessionClient {
  private base: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const res = await this.fetchImpl(this.base + path, init);
    if (!res.ok) {
      let code = "UNKNOWN";
      let message = res.statusText;
      try {
        const doc = await res.json();
        if (doc && doc.error) {
          code = doc.error.code ?? code;
          message = doc.error.message ?? message;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ProtocolError(res.status, code, message);
    }
    return (await res.json()) as T;
  }

  createSession(scene: unknown): Promise<SessionInfo> {
    return this.request("POST", "/session", scene);
  }

  scene(s: string): Promise<{ seq: number; tree: TreeSnapshot }> {
    return this.request("GET", `/session/${s}/scene`);
  }

  group(s: string, a: string, b: string): Promise<{ group: string } & PushMessage> {
    return this.request("POST", `/session/${s}/group`, { a, b });
  }

  addObject(s: string, g: string, o: string): Promise<PushMessage> {
    return this.request("POST", `/session/${s}/group/${g}/object`, { o });
  }

  nest(s: string, first: string, second: string): Promise<PushMessage> {
    return this.request("POST", `/session/${s}/nest`, { first, second });
  }

  wrap(s: string, a: string, b: string): Promise<{ group: string } & PushMessage> {
    return this.request("POST", `/session/${s}/wrap`, { a, b });
  }

  deleteGroup(s: string, g: string): Promise<PushMessage> {
    return this.request("DELETE", `/session/${s}/group/${g}`);
  }

  toggleMode(s: string, g: string): Promise<PushMessage> {
    return this.request("POST", `/session/${s}/group/${g}/toggle`);
  }

  setPose(s: string, id: string, pose: PoseDoc): Promise<PushMessage> {
    return this.request("PUT", `/session/${s}/pose/${id}`, pose);
  }

  exportGroup(s: string, g: string): Promise<{ spec: unknown } & PushMessage> {
    return this.request("POST", `/session/${s}/export/${g}`);
  }

  plan(s: string, opts?: { group?: string; seed?: number }): Promise<PlanFile> {
    return this.request("POST", `/session/${s}/plan`, opts ?? {});
  }

  hulls(s: string, cursor?: [number, number, number]): Promise<VisibleHulls> {
    const q = cursor ? `?cursor=${cursor.join(",")}` : "";
    return this.request("GET", `/session/${s}/hulls${q}`);
  }
}

// Push-channel state. Deltas may arrive out of order; they are applied
// strictly by sequence number, buffering gaps.
export class TreeStore {
  seq = -1;
  tree: TreeSnapshot | null = null;
  hulls: Record<string, HullPayload> = {};
  private pending = new Map<number, PushMessage>();
  private listeners: ((msg: PushMessage) => void)[] = [];

  onApply(fn: (msg: PushMessage) => void): void {
    this.listeners.push(fn);
  }

  // Feed one message; returns the messages actually applied, in order.
  ingest(msg: PushMessage): PushMessage[] {
    if (this.tree !== null && msg.seq <= this.seq) return [];
    this.pending.set(msg.seq, msg);
    const applied: PushMessage[] = [];
    for (;;) {
      const next = this.tree === null
        ? this.pending.get([...this.pending.keys()].sort((a, b) => a - b)[0] ?? -1)
        : this.pending.get(this.seq + 1);
      if (!next) break;
      if (this.tree === null && next.op !== "sync") break;
      this.pending.delete(next.seq);
      this.apply(next);
      applied.push(next);
    }
    for (const k of [...this.pending.keys()]) {
      if (k <= this.seq) this.pending.delete(k);
    }
    return applied;
  }

  private apply(msg: PushMessage): void {
    this.seq = msg.seq;
    this.tree = msg.tree;
    for (const gid of msg.hulls.removed) delete this.hulls[gid];
    for (const [gid, payload] of Object.entries(msg.hulls.changed)) {
      this.hulls[gid] = payload;
    }
    for (const fn of this.listeners) fn(msg);
  }
}

export interface SocketLike {
  onmessage: ((ev: { data: string }) => void) | null;
  close(): void;
}

export function bindSocket(store: TreeStore, sock: SocketLike): void {
  sock.onmessage = (ev) => {
    try {
      store.ingest(JSON.parse(ev.data) as PushMessage);
    } catch {
      // malformed frame; the next sync will restore consistency
    }
  };
}
