// The bimanual cursor pair and its desktop stand-in.
//
// Each cursor carries a selection mode: object-select (trigger) picks the
// nearest object along the ray, hull-select (grip) treats hull surfaces as
// penetrable so nested hulls and the objects behind them stay reachable.
// On desktop the left cursor is the pointer with modifier A held, the
// right cursor is the plain pointer.

import type { PoseDoc } from "./protocol.js";
import type { Vec3 } from "./geometry.js";

export type CursorSide = "left" | "right";
export type SelectionMode = "object" | "hull";

export interface PickTarget {
  kind: "object" | "hull";
  id: string;
}

export interface RayHit {
  kind: "object" | "hull";
  id: string;
  dist: number;
}

// Resolve what a cursor ray lands on, given every surface it crosses.
// object-select: nearest object, hull surfaces never occlude.
// hull-select: the innermost hull surface crossed before the first object
// (gripping "into" nesting), falling back to the object itself when the
// ray crosses no hull at all.
export function resolvePick(mode: SelectionMode, hits: RayHit[]): PickTarget | null {
  const sorted = [...hits].sort((a, b) => a.dist - b.dist);
  const firstObject = sorted.find((h) => h.kind === "object");
  if (mode === "object") {
    return firstObject ? { kind: "object", id: firstObject.id } : null;
  }
  const limit = firstObject ? firstObject.dist : Infinity;
  const before = sorted.filter((h) => h.kind === "hull" && h.dist < limit);
  if (before.length > 0) {
    const innermost = before[before.length - 1];
    return { kind: "hull", id: innermost.id };
  }
  return firstObject ? { kind: "object", id: firstObject.id } : null;
}

// Raw desktop input, already raycast by the renderer.
export interface DesktopEvent {
  type: "down" | "move" | "up";
  t: number;
  modifierA: boolean; // held -> this is the left cursor
  grip: boolean; // held -> hull-select, else object-select
  hits?: RayHit[];
  pose?: PoseDoc;
  point?: Vec3;
}

export type CursorEvent =
  | { type: "press"; t: number; side: CursorSide; mode: SelectionMode; target: PickTarget }
  | { type: "move"; t: number; side: CursorSide; pose?: PoseDoc; point?: Vec3 }
  | { type: "release"; t: number; side: CursorSide };

export function toCursorEvent(ev: DesktopEvent): CursorEvent | null {
  const side: CursorSide = ev.modifierA ? "left" : "right";
  if (ev.type === "down") {
    const mode: SelectionMode = ev.grip ? "hull" : "object";
    const target = resolvePick(mode, ev.hits ?? []);
    if (!target) return null;
    return { type: "press", t: ev.t, side, mode, target };
  }
  if (ev.type === "move") {
    return { type: "move", t: ev.t, side, pose: ev.pose, point: ev.point };
  }
  return { type: "release", t: ev.t, side };
}

// Last known world position per cursor; the dominant cursor (most recent
// mover) drives the visibility query.
export class CursorPairTracker {
  private points: Record<CursorSide, Vec3 | null> = { left: null, right: null };
  private lastMoved: CursorSide = "right";

  update(side: CursorSide, point: Vec3): void {
    this.points[side] = point;
    this.lastMoved = side;
  }

  dominant(): Vec3 | null {
    return this.points[this.lastMoved] ?? this.points[this.lastMoved === "left" ? "right" : "left"];
  }
}
