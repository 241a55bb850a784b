import json

import numpy as np
import pytest

from hullplan import fileformats as ff
from hullplan.cli import main
from hullplan.demo import box_mesh, fixture_scene, write_demo_files
from hullplan.scene import SceneObject
from hullplan.transforms import Pose


@pytest.fixture(scope="module")
def demo_paths(tmp_path_factory):
    return write_demo_files(tmp_path_factory.mktemp("demo"))


@pytest.fixture(scope="module")
def cube_paths(tmp_path_factory):
    """A one-cube scene and spec pair for the cheap verbs."""
    root = tmp_path_factory.mktemp("cube")
    v, t = box_mesh(0.1, 0.1, 0.1)
    cube = SceneObject("cube", v, t, Pose(np.array([0.3, 0.0, 0.77])))
    scene = ff.Scene([cube], fixture_scene().workspace, "arm6")
    spec_doc = {
        "format_version": 1,
        "root": {"id": "g", "mode": "relative",
                 "pose": Pose.identity().to_dict(), "children": ["cube"]},
        "poses": {"cube": Pose(np.array([0.3, 0.0, 0.77])).to_dict()},
    }
    scene_path = root / "scene.json"
    spec_path = root / "spec.json"
    ff.write_json(scene_path, ff.scene_to_dict(scene))
    ff.write_json(spec_path, spec_doc)
    return str(scene_path), str(spec_path)


def run(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_scene_and_spec(demo_paths, capsys):
    scene, spec = map(str, demo_paths)
    code, out, err = run(["validate", scene, spec], capsys)
    assert code == 0 and err == ""
    report = json.loads(out)
    assert report["ok"] is True
    assert len(report["objects"]) == 8
    assert report["groups"] == ["g3", "g1", "g2"]


def test_validate_duplicate_id_exits_one(tmp_path, demo_paths, capsys):
    doc = json.loads(demo_paths[0].read_text())
    doc["objects"].append(dict(doc["objects"][0]))
    bad = tmp_path / "dup.json"
    bad.write_text(json.dumps(doc))
    code, out, err = run(["validate", str(bad)], capsys)
    assert code == 1
    assert json.loads(err)["error"]["code"] == "DUP_ID"


def test_missing_file_reports_io_error(capsys):
    code, _, err = run(["validate", "/nonexistent/scene.json"], capsys)
    assert code == 1
    assert json.loads(err)["error"]["code"] == "IO"


def test_malformed_json_reports_bad_json(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    code, _, err = run(["validate", str(bad)], capsys)
    assert code == 1
    assert json.loads(err)["error"]["code"] == "BAD_JSON"


def test_hull_single_cube_eight_vertices(cube_paths, capsys):
    scene, spec = cube_paths
    code, out, _ = run(["hull", scene, spec], capsys)
    assert code == 0
    hulls = json.loads(out)["hulls"]
    assert len(hulls["g"]["vertices"]) == 8


def test_hull_cell_size_reduces(cube_paths, capsys):
    scene, spec = cube_paths
    code, out, _ = run(["hull", scene, spec, "--cell-size", "0.5"], capsys)
    assert code == 0
    hulls = json.loads(out)["hulls"]
    assert 4 <= len(hulls["g"]["vertices"]) <= 8


def test_resolve_and_settle_stage_outputs(cube_paths, capsys):
    scene, spec = cube_paths
    code, out, _ = run(["resolve", scene, spec, "--seed", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["seed"] == 3 and set(doc["placements"]) == {"g", "cube"}

    code, out, _ = run(["settle", scene, spec, "--seed", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["diagnostics"]["converged"] is True


def test_sequence_stage_output(cube_paths, capsys):
    scene, spec = cube_paths
    code, out, _ = run(["sequence", scene, spec], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["tour"]["order"] == ["g"]
    assert doc["sequences"][0]["order"] == ["cube"]
    assert len(doc["sequences"][0]["configs"]["cube"]) == 6


def test_plan_is_byte_identical_across_runs(demo_paths, tmp_path, capsys):
    scene, spec = map(str, demo_paths)
    first = tmp_path / "plan1.json"
    second = tmp_path / "plan2.json"
    assert main(["plan", scene, spec, "--seed", "7", "--out", str(first)]) == 0
    assert main(["plan", scene, spec, "--seed", "7", "--out", str(second)]) == 0
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()
    doc = ff.plan_from_dict(json.loads(first.read_text()))
    assert len(doc["steps"]) == 8


def test_infeasible_plan_reports_error(tmp_path, cube_paths, capsys):
    scene_doc = json.loads(open(cube_paths[0]).read())
    scene_doc["workspace"]["reach"] = 0.01
    cramped = tmp_path / "cramped.json"
    cramped.write_text(json.dumps(scene_doc))
    code, _, err = run(["resolve", str(cramped), cube_paths[1]], capsys)
    assert code == 1
    assert json.loads(err)["error"]["code"] == "INFEASIBLE"
