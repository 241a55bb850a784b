"""Assembly ordering: group tours over centroids and in-group sequences.

Group visitation is an open path from the arm base that always finishes
subassemblies before their parents. Within a group, objects are ordered
by joint-space travel between their place configurations, subject to
rests-on precedence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .arm import ArmModel, at_home, ik, plan_path
from .collision import drop_distance
from .errors import CyclicPrecedence, EmptyInput, IKFailure, NoSolution, UnknownId
from .placement import Placement, Workspace, _xy_disjoint
from .transforms import Pose

HK_LIMIT = 12            # exact tour search up to this many groups
EXACT_SEQ_LIMIT = 8      # exact in-group search up to this many objects
SUPPORT_SLACK = 1e-6
APPROACH = 0.02          # m, hover height above an object's top face


@dataclass
class GroupTour:
    order: list
    length: float


@dataclass
class ObjectSequence:
    group_id: str
    order: list
    cost: float
    configs: dict = field(default_factory=dict)   # object id -> joint vector


@dataclass
class PlanStep:
    object_id: str
    group_id: str
    pick_config: np.ndarray
    place_config: np.ndarray
    trajectory: list


@dataclass
class AssemblyPlan:
    tour: GroupTour
    sequences: list
    steps: list
    staging: dict = field(default_factory=dict)   # object id -> staged Pose


# -- group ordering -----------------------------------------------------------

def _descendant_sets(ids, parents):
    desc = {g: set() for g in ids}
    for g in ids:
        p = parents.get(g)
        while p is not None:
            if p in desc:
                desc[p].add(g)
            p = parents.get(p)
    return desc


def _tour_length(order, pts, base) -> float:
    total = float(np.linalg.norm(pts[order[0]] - base))
    for a, b in zip(order, order[1:]):
        total += float(np.linalg.norm(pts[a] - pts[b]))
    return total


def _held_karp(ids, pts, base, desc_masks):
    """Exact open-path search under descendant-first precedence."""
    n = len(ids)
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    start = np.linalg.norm(pts - base, axis=1)
    full = (1 << n) - 1
    best = {}
    back = {}
    for k in range(n):
        if desc_masks[k] == 0:
            best[(1 << k, k)] = float(start[k])
            back[(1 << k, k)] = None
    for mask in range(1, full + 1):
        for j in range(n):
            cur = best.get((mask, j))
            if cur is None:
                continue
            for k in range(n):
                bit = 1 << k
                if mask & bit:
                    continue
                if desc_masks[k] & ~mask:
                    continue    # some descendant of k still unvisited
                cand = cur + float(dist[j, k])
                key = (mask | bit, k)
                if key not in best or cand < best[key]:
                    best[key] = cand
                    back[key] = (mask, j)
    end = min((j for j in range(n) if (full, j) in best),
              key=lambda j: (best[(full, j)], j))
    order = []
    key = (full, end)
    while key is not None:
        order.append(key[1])
        key = back[key]
    return order[::-1], best[(full, end)]


def _nn_two_opt(ids, pts, base, desc_sets):
    n = len(ids)
    # nearest neighbor over eligible groups (descendants done first)
    done = set()
    order = []
    cur = np.asarray(base, dtype=np.float64)
    while len(order) < n:
        cand = [k for k in range(n)
                if k not in done and all(ids.index(d) in done
                                         for d in desc_sets[ids[k]])]
        k = min(cand, key=lambda k: (float(np.linalg.norm(pts[k] - cur)), k))
        order.append(k)
        done.add(k)
        cur = pts[k]

    # 2-opt on pure length
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                trial = order[:i] + order[i:j + 1][::-1] + order[j + 1:]
                if _tour_length(trial, pts, base) < _tour_length(order, pts, base) - 1e-12:
                    order = trial
                    improved = True

    # stable repair, deepest groups first: move each violator to just
    # after its last descendant. Depth = number of ancestors in the map.
    depth = {k: sum(1 for m in range(n) if ids[k] in desc_sets[ids[m]])
             for k in range(n)}
    for d in sorted(set(depth.values()), reverse=True):
        for k in sorted(range(n), key=lambda k: order.index(k)):
            if depth[k] != d:
                continue
            mine = {ids.index(x) for x in desc_sets[ids[k]]}
            if not mine:
                continue
            pos = order.index(k)
            last = max(order.index(m) for m in mine)
            if last > pos:
                order.pop(pos)
                order.insert(last, k)
    return order, _tour_length(order, pts, base)


def order_groups(centroids: dict, base, parents: dict) -> GroupTour:
    """Visit order over group centroids: open path from the arm base."""
    if not centroids:
        raise EmptyInput("no groups to order")
    ids = sorted(centroids)
    pts = np.array([centroids[g] for g in ids], dtype=np.float64)
    base = np.asarray(base, dtype=np.float64)
    desc_sets = {g: {d for d in s if d in centroids}
                 for g, s in _descendant_sets(ids, parents).items()}
    if len(ids) <= HK_LIMIT:
        masks = [sum(1 << ids.index(d) for d in desc_sets[g]) for g in ids]
        order, length = _held_karp(ids, pts, base, masks)
    else:
        order, length = _nn_two_opt(ids, pts, base, desc_sets)
    return GroupTour([ids[k] for k in order], float(length))


# -- in-group ordering --------------------------------------------------------

def _place_target(placement: Placement, oid: str) -> Pose:
    """Hover pose over the placed object: tool z points straight down."""
    pts = placement.world_hull(oid)
    c = pts.mean(axis=0)
    top = float(pts[:, 2].max())
    return Pose(np.array([c[0], c[1], top + APPROACH]),
                np.array([0.0, 1.0, 0.0, 0.0]))


def _precedence_order(members, pairs):
    """Layered topological order; raises CyclicPrecedence when none exists."""
    needs = {m: set() for m in members}
    for s, t in pairs:
        if s in needs and t in needs:
            needs[t].add(s)
    out = []
    done = set()
    while len(out) < len(members):
        batch = [m for m in members if m not in done and needs[m] <= done]
        if not batch:
            raise CyclicPrecedence(
                f"support precedence has a cycle among {sorted(set(members) - done)}")
        for m in batch:
            out.append(m)
            done.add(m)
    return out


def order_within_group(g: str, placement: Placement, arm: ArmModel,
                       supports) -> ObjectSequence:
    """Minimal joint-travel order of g's direct objects, supporters first."""
    group = next((node for node, _ in placement.spec.preorder()
                  if node.id == g), None)
    if group is None:
        raise UnknownId(f"group {g!r} not in the placement's document")
    members = list(group.object_children)
    pairs = [(s, t) for s, t in supports if s in members and t in members]
    _precedence_order(members, pairs)   # cycle check up front
    configs = {}
    for oid in members:
        try:
            configs[oid] = ik(arm, _place_target(placement, oid), at_home(arm))
        except NoSolution as exc:
            raise IKFailure(oid) from exc
    if not members:
        return ObjectSequence(g, [], 0.0, {})
    if len(members) == 1:
        return ObjectSequence(g, list(members), 0.0, configs)

    labels = sorted(members)
    qmat = np.stack([configs[m] for m in labels])
    dmat = np.linalg.norm(qmat[:, None, :] - qmat[None, :, :], axis=2)
    idx_pairs = [(labels.index(s), labels.index(t)) for s, t in pairs]
    n = len(labels)

    if n <= EXACT_SEQ_LIMIT:
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        pos = np.argsort(perms, axis=1)
        feasible = np.ones(len(perms), dtype=bool)
        for s, t in idx_pairs:
            feasible &= pos[:, s] < pos[:, t]
        costs = dmat[perms[:, :-1], perms[:, 1:]].sum(axis=1)
        costs[~feasible] = np.inf
        k = int(np.argmin(costs))
        order = [labels[i] for i in perms[k]]
        return ObjectSequence(g, order, float(costs[k]), configs)

    # greedy nearest-neighbor over precedence-eligible objects, then
    # cost-improving pairwise swaps that keep feasibility
    def feasible_order(order):
        pos = {m: i for i, m in enumerate(order)}
        return all(pos[s] < pos[t] for s, t in pairs)

    def cost_of(order):
        ix = [labels.index(m) for m in order]
        return float(sum(dmat[a, b] for a, b in zip(ix, ix[1:])))

    best = None
    first_candidates = [m for m in labels if not any(t == m for _, t in pairs)]
    for first in first_candidates:
        order = [first]
        placed = {first}
        while len(order) < n:
            ok = [m for m in labels if m not in placed
                  and all(s in placed for s, t in pairs if t == m)]
            nxt = min(ok, key=lambda m: (dmat[labels.index(order[-1]),
                                              labels.index(m)], m))
            order.append(nxt)
            placed.add(nxt)
        if best is None or cost_of(order) < cost_of(best):
            best = order
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                trial = list(best)
                trial[i], trial[j] = trial[j], trial[i]
                if feasible_order(trial) and cost_of(trial) < cost_of(best) - 1e-12:
                    best = trial
                    improved = True
    return ObjectSequence(g, best, cost_of(best), configs)


# -- support detection and the full plan --------------------------------------

def support_pairs(placement: Placement, ws: Workspace) -> list:
    """(supporter, supported) for every object resting on another."""
    out = []
    oids = sorted(placement.spec.object_ids())
    hulls = {o: placement.world_hull(o) for o in oids}
    for top in oids:
        for bottom in oids:
            if top == bottom or _xy_disjoint(hulls[top], hulls[bottom]):
                continue
            d = drop_distance(hulls[top], hulls[bottom])
            if d is None:
                continue
            lowest = float(hulls[top][:, 2].min())
            base_fall = lowest - ws.table_z
            if d <= SUPPORT_SLACK and d < base_fall - SUPPORT_SLACK:
                out.append((bottom, top))
    return out


def _group_centroids(placement: Placement):
    cents = {}
    for g, _ in placement.spec.preorder():
        oids = placement.spec.descendant_objects(g)
        if oids:
            cents[g.id] = np.mean(
                [placement.world_hull(o).mean(axis=0) for o in oids], axis=0)
    return cents


def _staging_poses(placement: Placement, ws: Workspace, plan_order):
    """Staged pose per object: a packed line of slots off the -y table edge."""
    out = {}
    margin = 0.04
    x = float(ws.table_min[0]) + 0.02
    row_y = float(ws.table_min[1]) - 0.15
    for oid in plan_order:
        pts = placement.world_hull(oid)
        half = (pts.max(axis=0) - pts.min(axis=0)) / 2.0
        if x + 2 * half[0] > float(ws.table_max[0]):
            x = float(ws.table_min[0]) + 0.02
            row_y -= 0.2
        center = pts.mean(axis=0)
        stage_t = np.array([x + half[0], row_y,
                            ws.table_z + (center[2] - float(pts[:, 2].min()))])
        pose = placement.poses[oid]
        out[oid] = Pose(pose.translation + (stage_t - center), pose.rotation)
        x += 2 * half[0] + margin
    return out


def plan_sequences(spec, placement: Placement, ws: Workspace,
                   arm: ArmModel) -> tuple[GroupTour, list]:
    """Group tour plus per-group placement orders with their IK configs."""
    arm_w = arm.at_base(Pose(np.asarray(ws.arm_base, dtype=np.float64)))
    cents = _group_centroids(placement)
    if not cents:
        return GroupTour([], 0.0), []
    parents = {g.id: (p.id if p is not None else None)
               for g, p in spec.preorder()}
    tour = order_groups(cents, ws.arm_base, parents)
    supports = support_pairs(placement, ws)
    sequences = [order_within_group(gid, placement, arm_w, supports)
                 for gid in tour.order]
    return tour, sequences


def assemble_plan(spec, placement: Placement, ws: Workspace, arm: ArmModel,
                  seed: int = 0) -> AssemblyPlan:
    """Full pick-and-place program: tour, sequences, configs, trajectories."""
    arm_w = arm.at_base(Pose(np.asarray(ws.arm_base, dtype=np.float64)))
    tour, sequences = plan_sequences(spec, placement, ws, arm)
    if not tour.order:
        return AssemblyPlan(GroupTour([], 0.0), [], [], {})
    plan_order = [oid for seq in sequences for oid in seq.order]

    staging = _staging_poses(placement, ws, plan_order)
    staged_world = {oid: staging[oid].apply(placement.local_hull(oid))
                    for oid in plan_order}

    def hover(pts):
        c = pts.mean(axis=0)
        return Pose(np.array([c[0], c[1], float(pts[:, 2].max()) + APPROACH]),
                    np.array([0.0, 1.0, 0.0, 0.0]))

    steps = []
    placed_hulls = []
    seq_by_gid = {s.group_id: s for s in sequences}
    for gid in tour.order:
        seq = seq_by_gid[gid]
        for oid in seq.order:
            try:
                pick = ik(arm_w, hover(staged_world[oid]), at_home(arm_w))
            except NoSolution as exc:
                raise IKFailure(oid) from exc
            place = seq.configs[oid]
            traj = plan_path(arm_w, pick, place, placed_hulls, seed=seed)
            steps.append(PlanStep(oid, gid, pick, place, traj))
            placed_hulls.append(placement.world_hull(oid))
    return AssemblyPlan(tour, sequences, steps, staging)
