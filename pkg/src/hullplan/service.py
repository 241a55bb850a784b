"""Authoring session service: a thin HTTP adapter over the constraint tree.

One session owns one tree built from an uploaded scene file. Every
mutation endpoint maps 1:1 onto a tree operation, so replaying a request
log against the core reproduces the service state exactly. Requests
within a session are serialized by a lock; a WebSocket channel pushes
``{seq, op, tree, hulls}`` deltas after each committed mutation.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Query, WebSocket, WebSocketDisconnect
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import fileformats as ff
from .errors import (
    AlreadyExported,
    AlreadyGrouped,
    CycleError,
    GroupFrozen,
    HullplanError,
    NotRoot,
    SchemaError,
    UnknownId,
)
from .hull import forest_hulls, visible_hulls
from .scene import ConstraintTree

_STATUS = {
    UnknownId: 404,
    AlreadyGrouped: 409,
    CycleError: 409,
    GroupFrozen: 409,
    NotRoot: 409,
    AlreadyExported: 409,
    SchemaError: 400,
}


def _status_of(exc: HullplanError) -> int:
    for cls, status in _STATUS.items():
        if isinstance(exc, cls):
            return status
    return 422


def tree_snapshot(tree: ConstraintTree) -> dict:
    """JSON view of the forest: local and world poses, membership, modes."""
    groups = {}
    for gid in sorted(tree.groups):
        node = tree.groups[gid]
        groups[gid] = {
            "mode": node.mode,
            "parent": node.parent,
            "children": list(node.children),
            "pose": node.pose.to_dict(),
            "world": tree.world_pose(gid).to_dict(),
        }
    objects = {}
    for oid in sorted(tree.objects):
        obj = tree.objects[oid]
        objects[oid] = {
            "group": tree.parent_of(oid),
            "padding": obj.padding,
            "pose": obj.pose.to_dict(),
            "world": tree.world_pose(oid).to_dict(),
        }
    return {
        "groups": groups,
        "objects": objects,
        "roots": sorted(tree.roots),
        "ungrouped": sorted(tree.ungrouped),
        "exported": sorted(tree.exported),
    }


def _hull_payloads(tree: ConstraintTree) -> dict:
    return {gid: {"vertices": h.vertices.tolist(), "faces": h.faces.tolist()}
            for gid, h in forest_hulls(tree).items()}


@dataclass
class Session:
    id: str
    tree: ConstraintTree
    scene: ff.Scene
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    seq: int = 0
    hulls: dict = field(default_factory=dict)      # last broadcast payloads
    exports: dict = field(default_factory=dict)    # root gid -> SpecDocument
    sockets: list = field(default_factory=list)

    def hull_delta(self) -> dict:
        fresh = _hull_payloads(self.tree)
        changed = {gid: payload for gid, payload in fresh.items()
                   if self.hulls.get(gid) != payload}
        removed = sorted(set(self.hulls) - set(fresh))
        self.hulls = fresh
        return {"changed": changed, "removed": removed}

    async def commit(self, op: str, tree: ConstraintTree) -> dict:
        """Swap in the mutated tree, bump seq, push the delta; lock held."""
        self.tree = tree
        self.seq += 1
        message = {
            "seq": self.seq,
            "op": op,
            "tree": tree_snapshot(tree),
            "hulls": self.hull_delta(),
        }
        for sock in list(self.sockets):
            try:
                await sock.send_json(message)
            except Exception:
                self.sockets.remove(sock)
        return message


def create_app() -> FastAPI:
    app = FastAPI(title="hullplan authoring service")
    sessions: dict[str, Session] = {}
    counter = {"n": 0}

    @app.exception_handler(HullplanError)
    async def _core_error(request, exc: HullplanError):
        return JSONResponse(
            status_code=_status_of(exc),
            content={"error": {"code": exc.code, "message": exc.message}})

    @app.exception_handler(RequestValidationError)
    async def _schema_error(request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "SCHEMA", "message": str(exc.errors())}})

    def get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise UnknownId(f"unknown session {sid!r}")
        return session

    @app.post("/session")
    async def create_session(body: dict):
        scene = ff.scene_from_dict(body)
        counter["n"] += 1
        sid = f"s{counter['n']}"
        session = Session(sid, ConstraintTree.from_objects(scene.objects), scene)
        session.hulls = _hull_payloads(session.tree)
        sessions[sid] = session
        return {"session": sid, "seq": 0, "tree": tree_snapshot(session.tree)}

    @app.get("/session/{sid}/scene")
    async def get_scene(sid: str):
        session = get_session(sid)
        async with session.lock:
            return {"seq": session.seq, "tree": tree_snapshot(session.tree)}

    @app.post("/session/{sid}/group")
    async def create_group(sid: str, body: dict):
        session = get_session(sid)
        a = ff.require_field(body, "a", str, "body")
        b = ff.require_field(body, "b", str, "body")
        async with session.lock:
            tree, gid = session.tree.create_group(a, b)
            message = await session.commit("group", tree)
        return {"group": gid, **message}

    @app.post("/session/{sid}/group/{gid}/object")
    async def add_object(sid: str, gid: str, body: dict):
        session = get_session(sid)
        oid = ff.require_field(body, "o", str, "body")
        async with session.lock:
            return await session.commit("add_object", session.tree.add_object(gid, oid))

    @app.post("/session/{sid}/nest")
    async def nest(sid: str, body: dict):
        session = get_session(sid)
        first = ff.require_field(body, "first", str, "body")
        second = ff.require_field(body, "second", str, "body")
        async with session.lock:
            return await session.commit("nest", session.tree.nest_groups(first, second))

    @app.post("/session/{sid}/wrap")
    async def wrap(sid: str, body: dict):
        session = get_session(sid)
        a = ff.require_field(body, "a", str, "body")
        b = ff.require_field(body, "b", str, "body")
        async with session.lock:
            tree, gid = session.tree.wrap_in_parent(a, b)
            message = await session.commit("wrap", tree)
        return {"group": gid, **message}

    @app.delete("/session/{sid}/group/{gid}")
    async def delete_group(sid: str, gid: str):
        session = get_session(sid)
        async with session.lock:
            return await session.commit("delete", session.tree.delete_group(gid))

    @app.post("/session/{sid}/group/{gid}/toggle")
    async def toggle_mode(sid: str, gid: str):
        session = get_session(sid)
        async with session.lock:
            return await session.commit("toggle", session.tree.toggle_mode(gid))

    @app.put("/session/{sid}/pose/{ident}")
    async def set_pose(sid: str, ident: str, body: dict):
        session = get_session(sid)
        pose = ff.pose_from(body, "body")
        async with session.lock:
            return await session.commit("pose", session.tree.set_pose(ident, pose))

    @app.post("/session/{sid}/export/{gid}")
    async def export_group(sid: str, gid: str):
        session = get_session(sid)
        async with session.lock:
            tree, doc = session.tree.export_spec(gid)
            session.exports[gid] = doc
            message = await session.commit("export", tree)
        return {"spec": ff.spec_to_dict(doc), **message}

    @app.post("/session/{sid}/plan")
    async def plan(sid: str, body: dict | None = None):
        session = get_session(sid)
        body = body or {}
        gid = body.get("group")
        seed = body.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise SchemaError("SCHEMA", "body.seed: wrong type", "body.seed")
        async with session.lock:
            tree = session.tree
            if gid is None:
                if len(tree.roots) != 1:
                    raise SchemaError(
                        "AMBIGUOUS_ROOT",
                        f"{len(tree.roots)} root groups; pass body.group")
                gid = next(iter(tree.roots))
            if gid in session.exports:
                doc = session.exports[gid]
            else:
                _, doc = tree.export_spec(gid)   # read-only: frozen tree discarded
            arm = ff.load_arm(session.scene)
            plan_doc, _, _ = await asyncio.to_thread(
                ff.plan_document, doc, session.scene.workspace, arm, seed)
        return plan_doc

    @app.get("/session/{sid}/hulls")
    async def hulls(sid: str, cursor: str | None = Query(None)):
        session = get_session(sid)
        point = None
        if cursor is not None:
            parts = cursor.split(",")
            try:
                point = np.array([float(v) for v in parts])
            except ValueError:
                point = None
            if point is None or point.shape != (3,) or not np.all(np.isfinite(point)):
                raise SchemaError("SCHEMA", "cursor must be x,y,z", "cursor")
        async with session.lock:
            tree = session.tree
            group_hulls = forest_hulls(tree)
            if point is None:
                visible = set(tree.roots)
            else:
                visible = visible_hulls(tree, point, hulls=group_hulls)
            payload = {gid: {"vertices": group_hulls[gid].vertices.tolist(),
                             "faces": group_hulls[gid].faces.tolist()}
                       for gid in visible}
            return {"seq": session.seq, "visible": sorted(visible), "hulls": payload}

    @app.websocket("/session/{sid}/events")
    async def events(ws: WebSocket, sid: str):
        session = sessions.get(sid)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        async with session.lock:
            session.sockets.append(ws)
            await ws.send_json({
                "seq": session.seq,
                "op": "sync",
                "tree": tree_snapshot(session.tree),
                "hulls": {"changed": dict(session.hulls), "removed": []},
            })
        try:
            while True:
                await ws.receive_text()
        except WebSocketDisconnect:
            if ws in session.sockets:
                session.sockets.remove(ws)

    return app


app = create_app()
