// Minimal vector math plus point-in-hull tests over the wire payloads.
// Plane construction mirrors the server: face normals are oriented away
// from the vertex centroid, and containment allows a 1e-9 slack.

import type { HullPayload } from "./protocol.js";

export type Vec3 = [number, number, number];

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export interface Plane {
  n: Vec3;
  d: number;
}

export function hullPlanes(hull: HullPayload): Plane[] {
  const verts = hull.vertices as Vec3[];
  const c: Vec3 = [0, 0, 0];
  for (const v of verts) {
    c[0] += v[0];
    c[1] += v[1];
    c[2] += v[2];
  }
  c[0] /= verts.length;
  c[1] /= verts.length;
  c[2] /= verts.length;

  return hull.faces.map((face) => {
    const [a, b, cc] = face;
    const va = verts[a];
    const raw = cross(sub(verts[b], va), sub(verts[cc], va));
    const len = norm(raw);
    let n: Vec3 = [raw[0] / len, raw[1] / len, raw[2] / len];
    let d = dot(n, va);
    if (dot(n, c) > d) {
      n = [-n[0], -n[1], -n[2]];
      d = -d;
    }
    return { n, d };
  });
}

export function planesContain(planes: Plane[], p: Vec3, tol = 1e-9): boolean {
  for (const { n, d } of planes) {
    if (dot(n, p) - d > tol) return false;
  }
  return true;
}

export function hullContains(hull: HullPayload, p: Vec3, tol = 1e-9): boolean {
  return planesContain(hullPlanes(hull), p, tol);
}
