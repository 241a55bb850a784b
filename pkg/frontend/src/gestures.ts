// Bimanual gesture recognition. Every structural gesture maps to exactly
// one endpoint call; the client never mutates the tree itself.
//
// "Simultaneous" means the two holds overlap in time for at least 150 ms.
// A pair of holds fires at most once; releasing and re-pressing starts a
// new gesture. Which call fires:
//   object + object  -> group (first-held target is the first argument)
//   hull + hull      -> nest (first-gripped hull becomes the parent)
//   hull + object    -> add_object when the object is loose, else wrap
//                       with the object's root group
// Single-cursor gestures:
//   delete key while hull-gripped -> delete that group
//   mode key while hull-gripped   -> toggle that group
//   drag while holding            -> pose update, throttled

import type { PoseDoc, TreeSnapshot } from "./protocol.js";
import type { CursorEvent, CursorSide, PickTarget, SelectionMode } from "./cursors.js";

export interface ProtocolPort {
  group(a: string, b: string): void;
  addObject(g: string, o: string): void;
  nest(first: string, second: string): void;
  wrap(a: string, b: string): void;
  deleteGroup(g: string): void;
  toggleMode(g: string): void;
  setPose(id: string, pose: PoseDoc): void;
}

export type InputEvent = CursorEvent | { type: "key"; t: number; key: "delete" | "mode" };

interface Hold {
  side: CursorSide;
  mode: SelectionMode;
  target: PickTarget;
  since: number;
  serial: number;
  consumedWith: number | null;
  lastPoseSent: number;
  pendingPose: PoseDoc | null;
}

export interface RecognizerOptions {
  overlapMs?: number;
  poseThrottleMs?: number;
}

export class GestureRecognizer {
  private port: ProtocolPort;
  private overlapMs: number;
  private poseThrottleMs: number;
  private tree: TreeSnapshot | null = null;
  private holds: Record<CursorSide, Hold | null> = { left: null, right: null };
  private serial = 0;

  constructor(port: ProtocolPort, opts: RecognizerOptions = {}) {
    this.port = port;
    this.overlapMs = opts.overlapMs ?? 150;
    this.poseThrottleMs = opts.poseThrottleMs ?? 50;
  }

  // Called with every push delta; gestures resolve grouping against the
  // latest server state.
  updateTree(tree: TreeSnapshot): void {
    this.tree = tree;
  }

  feed(ev: InputEvent): void {
    // a threshold crossing strictly precedes this event
    this.maybeFireBimanual(ev.t);
    switch (ev.type) {
      case "press": {
        if (this.holds[ev.side]) this.release(ev.side, ev.t);
        this.holds[ev.side] = {
          side: ev.side,
          mode: ev.mode,
          target: ev.target,
          since: ev.t,
          serial: this.serial++,
          consumedWith: null,
          lastPoseSent: -Infinity,
          pendingPose: null,
        };
        break;
      }
      case "move": {
        const hold = this.holds[ev.side];
        if (!hold || !ev.pose) break;
        if (ev.t - hold.lastPoseSent >= this.poseThrottleMs) {
          this.port.setPose(hold.target.id, ev.pose);
          hold.lastPoseSent = ev.t;
          hold.pendingPose = null;
        } else {
          hold.pendingPose = ev.pose;
        }
        break;
      }
      case "release": {
        this.release(ev.side, ev.t);
        break;
      }
      case "key": {
        const hold = this.hullHold();
        if (!hold) break;
        if (ev.key === "delete") {
          this.port.deleteGroup(hold.target.id);
          this.holds[hold.side] = null; // the grip target is gone
        } else {
          this.port.toggleMode(hold.target.id);
        }
        break;
      }
    }
  }

  private release(side: CursorSide, t: number): void {
    const hold = this.holds[side];
    if (!hold) return;
    if (hold.pendingPose) {
      this.port.setPose(hold.target.id, hold.pendingPose); // trailing flush
    }
    this.holds[side] = null;
  }

  private hullHold(): Hold | null {
    const l = this.holds.left;
    const r = this.holds.right;
    const gripped = [l, r].filter((h): h is Hold => !!h && h.mode === "hull");
    if (gripped.length === 0) return null;
    gripped.sort((a, b) => b.since - a.since || b.serial - a.serial);
    return gripped[0];
  }

  private maybeFireBimanual(now: number): void {
    const l = this.holds.left;
    const r = this.holds.right;
    if (!l || !r) return;
    if (l.consumedWith === r.serial && r.consumedWith === l.serial) return;
    const overlapStart = Math.max(l.since, r.since);
    if (now - overlapStart < this.overlapMs) return;

    const [first, second] = l.since < r.since || (l.since === r.since && l.serial < r.serial)
      ? [l, r]
      : [r, l];
    this.fire(first, second);
    l.consumedWith = r.serial;
    r.consumedWith = l.serial;
  }

  private fire(first: Hold, second: Hold): void {
    const a = first.target;
    const b = second.target;
    if (a.kind === "object" && b.kind === "object") {
      this.port.group(a.id, b.id);
      return;
    }
    if (a.kind === "hull" && b.kind === "hull") {
      this.port.nest(a.id, b.id);
      return;
    }
    const hull = a.kind === "hull" ? a : b;
    const obj = a.kind === "object" ? a : b;
    const owner = this.tree?.objects[obj.id]?.group ?? null;
    if (owner === null) {
      this.port.addObject(hull.id, obj.id);
    } else {
      this.port.wrap(hull.id, this.rootOf(owner));
    }
  }

  private rootOf(gid: string): string {
    let cur = gid;
    const groups = this.tree?.groups ?? {};
    while (groups[cur]?.parent) cur = groups[cur].parent as string;
    return cur;
  }
}
