// Client-side mirror of the server's hull visibility rule, so the render
// set can update every frame without a round trip. The server remains
// authoritative; GET /hulls with the dominant cursor returns the same set.
//
// Rule: all root hulls are visible; when the cursor is inside a visible
// group's hull, that group's child hulls become visible too, recursively.

import { hullPlanes, planesContain, type Plane, type Vec3 } from "./geometry.js";
import type { HullPayload, TreeSnapshot } from "./protocol.js";

export function visibleHulls(
  tree: TreeSnapshot,
  hulls: Record<string, HullPayload>,
  cursor: Vec3,
): string[] {
  const planes = new Map<string, Plane[]>();
  const planesOf = (gid: string) => {
    let p = planes.get(gid);
    if (!p) {
      p = hullPlanes(hulls[gid]);
      planes.set(gid, p);
    }
    return p;
  };

  const visible = new Set<string>(tree.roots);
  let frontier = [...tree.roots].sort();
  while (frontier.length > 0) {
    const next: string[] = [];
    for (const gid of frontier) {
      if (!(gid in hulls) || !planesContain(planesOf(gid), cursor)) continue;
      for (const child of tree.groups[gid].children) {
        if (child in tree.groups) {
          visible.add(child);
          next.push(child);
        }
      }
    }
    frontier = next;
  }
  return [...visible].sort();
}

// Relative groups render as translucent shaded hulls, absolute groups as
// wireframes.
export type HullStyle = "translucent" | "wireframe";

export function hullStyle(tree: TreeSnapshot, gid: string): HullStyle {
  return tree.groups[gid].mode === "absolute" ? "wireframe" : "translucent";
}

export interface RenderEntry {
  id: string;
  style: HullStyle;
}

export function renderSet(
  tree: TreeSnapshot,
  hulls: Record<string, HullPayload>,
  cursor: Vec3,
): RenderEntry[] {
  return visibleHulls(tree, hulls, cursor).map((id) => ({
    id,
    style: hullStyle(tree, id),
  }));
}
