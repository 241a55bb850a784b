// Plan playback: a pure viewer over a PlanFile. Nothing here talks to the
// server or mutates state; scrubbing just reindexes the document.
//
// Frame model: objects start at their staging poses; completing step k
// snaps step k's object to its final placement. Within a step the arm
// animates through the recorded trajectory waypoints.

import type { PlanFile, PoseDoc } from "./protocol.js";

export interface PlaybackFrame {
  poses: Record<string, PoseDoc>;
  armConfig: number[] | null;
  activeObject: string | null;
}

export class PlanPlayback {
  private plan: PlanFile;

  constructor(plan: PlanFile) {
    this.plan = plan;
  }

  get stepCount(): number {
    return this.plan.steps.length;
  }

  // Waypoints of one step's trajectory, for sub-step scrubbing.
  waypointCount(step: number): number {
    return this.plan.steps[step].trajectory.length;
  }

  // step in [0, stepCount]: 0 is the untouched staging scene, stepCount is
  // the finished assembly. waypoint indexes into the running step.
  frame(step: number, waypoint = 0): PlaybackFrame {
    const n = Math.max(0, Math.min(step, this.stepCount));
    const poses: Record<string, PoseDoc> = {};
    for (const [oid, pose] of Object.entries(this.plan.staging)) {
      poses[oid] = pose;
    }
    for (let i = 0; i < n; i++) {
      const oid = this.plan.steps[i].object;
      poses[oid] = this.plan.placements[oid];
    }
    if (n === this.stepCount) {
      return { poses, armConfig: this.finalConfig(), activeObject: null };
    }
    const active = this.plan.steps[n];
    const w = Math.max(0, Math.min(waypoint, active.trajectory.length - 1));
    return {
      poses,
      armConfig: active.trajectory[w] ?? null,
      activeObject: active.object,
    };
  }

  private finalConfig(): number[] | null {
    const last = this.plan.steps[this.stepCount - 1];
    if (!last) return null;
    const traj = last.trajectory;
    return traj[traj.length - 1] ?? null;
  }

  // Scrubber position in [0, 1] mapped onto (step, waypoint).
  scrub(fraction: number): PlaybackFrame {
    const f = Math.max(0, Math.min(fraction, 1));
    if (this.stepCount === 0 || f >= 1) return this.frame(this.stepCount);
    const pos = f * this.stepCount;
    const step = Math.floor(pos);
    const within = pos - step;
    const waypoints = this.waypointCount(step);
    return this.frame(step, Math.floor(within * waypoints));
  }
}
