"""Command line front end for the engine and planning pipeline.

Every verb reads canonical JSON documents, writes canonical JSON (to
``--out`` or stdout), and reports failures as a machine-readable error
object on stderr with exit code 1.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import fileformats as ff
from .errors import HullplanError
from .placement import resolve_poses, settle
from .sequencing import plan_sequences


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for every stochastic stage (default 0)")
    common.add_argument("--cell-size", type=float, default=None,
                        help="point-reduction cell size for hull computation")
    common.add_argument("--out", default=None,
                        help="write the result here instead of stdout")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hullplan",
        description="Assembly-constraint hulls, placement, and planning.")
    sub = parser.add_subparsers(dest="verb", required=True)
    common = _common()

    p = sub.add_parser("validate", parents=[common],
                       help="check a scene (and optional spec) against the schema")
    p.add_argument("scene")
    p.add_argument("spec", nargs="?")

    for verb, text in (("hull", "compute group hulls for a spec"),
                       ("resolve", "choose poses for relative groups"),
                       ("settle", "resolve, then remove penetrations and drop"),
                       ("sequence", "order groups and objects with IK configs"),
                       ("plan", "full pipeline: placements, orders, trajectories")):
        p = sub.add_parser(verb, parents=[common], help=text)
        p.add_argument("scene")
        p.add_argument("spec")

    p = sub.add_parser("serve", parents=[common], help="run the authoring session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _load_inputs(args) -> tuple:
    scene = ff.scene_from_dict(ff.read_json(args.scene))
    spec = ff.spec_from_dict(ff.read_json(args.spec), scene)
    return scene, spec


def _deliver(doc: dict, out: str | None) -> None:
    if out:
        ff.write_json(out, doc)
    else:
        sys.stdout.write(ff.canonical_dumps(doc))


def _run(args) -> dict | None:
    if args.verb == "validate":
        scene = ff.scene_from_dict(ff.read_json(args.scene))
        ff.load_arm(scene)
        report = {
            "format_version": ff.FORMAT_VERSION,
            "ok": True,
            "objects": [o.id for o in scene.objects],
        }
        if args.spec:
            spec = ff.spec_from_dict(ff.read_json(args.spec), scene)
            report["groups"] = spec.group_ids()
            report["placed_objects"] = sorted(spec.object_ids())
        return report

    if args.verb == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
        return None

    scene, spec = _load_inputs(args)
    if args.verb == "hull":
        return ff.hulls_to_dict(ff.spec_hulls(spec, cell_size=args.cell_size))

    ws = scene.workspace
    if args.verb == "resolve":
        return ff.placement_to_dict(resolve_poses(spec, ws, args.seed), args.seed)
    if args.verb == "settle":
        placed = settle(resolve_poses(spec, ws, args.seed), ws)
        return ff.placement_to_dict(placed, args.seed)

    arm = ff.load_arm(scene)
    if args.verb == "sequence":
        placed = settle(resolve_poses(spec, ws, args.seed), ws)
        tour, sequences = plan_sequences(spec, placed, ws, arm)
        return {
            "format_version": ff.FORMAT_VERSION,
            "seed": args.seed,
            "tour": {"order": list(tour.order), "length": tour.length},
            "sequences": [
                {"group": s.group_id, "order": list(s.order), "cost": s.cost,
                 "configs": {o: list(q) for o, q in s.configs.items()}}
                for s in sequences
            ],
        }

    doc, _, _ = ff.plan_document(spec, ws, arm, args.seed)
    return doc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _run(args)
    except HullplanError as exc:
        payload = {"error": {"code": exc.code, "message": exc.message}}
        print(json.dumps(payload), file=sys.stderr)
        return 1
    if doc is not None:
        _deliver(doc, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
