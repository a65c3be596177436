import json

import numpy as np
import pytest

from clutterkit.cli import run
from pipeline_fixture import (
    GOLDEN_ANNOTATIONS,
    GOLDEN_HASHES,
    predictions_from_annotations,
    run_pipeline,
    scene_pixel_hashes,
)


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "annotate-objects" in capsys.readouterr().out


def test_subcommand_help_exits_zero(capsys):
    assert run(["make-scenes", "--help"]) == 0


def test_unknown_flag_exits_two(capsys):
    assert run(["eval", "--nonsense"]) == 2


def test_no_subcommand_exits_two():
    assert run([]) == 2


def test_missing_input_exits_one(capsys):
    rc = run(["eval", "--gt", "/nonexistent/gt.json",
              "--pred", "/nonexistent/pred.json"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_bad_category_exits_one(tmp_path, object_dir, capsys):
    rc = run(["annotate-objects", "--in", str(object_dir),
              "--out", str(tmp_path / "x"), "--category", "durian"])
    assert rc == 1
    assert "durian" in capsys.readouterr().err


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory, object_dir, background_dir):
    root = tmp_path_factory.mktemp("pipeline")
    scenes = run_pipeline(root, object_dir, background_dir)
    return root, scenes


def test_full_pipeline_matches_committed_golden(pipeline_out):
    _, scenes = pipeline_out
    got = (scenes / "annotations.json").read_bytes()
    assert got == GOLDEN_ANNOTATIONS.read_bytes()
    want_hashes = json.loads(GOLDEN_HASHES.read_text())
    assert scene_pixel_hashes(scenes) == want_hashes


def test_pipeline_rerun_byte_identical(tmp_path_factory, object_dir, background_dir,
                                       pipeline_out):
    _, first = pipeline_out
    root = tmp_path_factory.mktemp("pipeline_again")
    second = run_pipeline(root, object_dir, background_dir)
    assert (first / "annotations.json").read_bytes() == \
        (second / "annotations.json").read_bytes()
    for png in sorted(first.glob("scene_*.png")):
        assert png.read_bytes() == (second / png.name).read_bytes()
    # run_config matches once the differing output paths are masked
    def masked(path):
        doc = json.loads((path / "run_config.json").read_text())
        doc["settings"].pop("objects", None)
        doc["settings"].pop("backgrounds", None)
        doc["settings"].pop("out", None)
        return doc
    assert masked(first) == masked(second)


def test_run_config_echoed(pipeline_out):
    root, scenes = pipeline_out
    for out_dir in (root / "annotated", scenes):
        cfg = json.loads((out_dir / "run_config.json").read_text())
        assert cfg["command"] in ("annotate-objects", "make-scenes")
        assert "settings" in cfg and "kernel_backend" in cfg


def test_eval_cli_perfect_predictions(pipeline_out, tmp_path):
    _, scenes = pipeline_out
    gt = scenes / "annotations.json"
    preds = predictions_from_annotations(gt)
    pred_path = tmp_path / "preds.json"
    pred_path.write_text(json.dumps(preds))
    out = tmp_path / "report.json"
    rc = run(["eval", "--gt", str(gt), "--pred", str(pred_path),
              "--mode", "mask", "--out", str(out), "--pr-curves"])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["overall"]["ap"] == 100.0
    assert rep["overall"]["ar"] == 100.0
    assert rep["overall"]["f1"] == 100.0
    assert (tmp_path / "report.pr_iou50.csv").exists()
    assert (tmp_path / "report.pr_iou75.json").exists()


def test_make_scenes_config_file_flags_win(tmp_path, object_dir, background_dir):
    from clutterkit.cli import run as cli_run
    ann = tmp_path / "ann"
    assert cli_run(["annotate-objects", "--in", str(object_dir),
                    "--out", str(ann), "--category", "plum"]) == 0
    cfg = tmp_path / "scenes.cfg"
    cfg.write_text(
        f"objects = {ann}\n"
        f"backgrounds = {background_dir}\n"
        "n_scenes = 2\n"
        "seed = 5\n"
        "scene_size = 128x96\n"
        "instances_per_scene = 1..2\n"
    )
    out1 = tmp_path / "s1"
    assert cli_run(["make-scenes", "--config", str(cfg), "--out", str(out1)]) == 0
    doc = json.loads((out1 / "annotations.json").read_text())
    assert len(doc["images"]) == 2
    # flag overrides the config file value
    out2 = tmp_path / "s2"
    assert cli_run(["make-scenes", "--config", str(cfg), "--out", str(out2),
                    "--n-scenes", "3"]) == 0
    doc2 = json.loads((out2 / "annotations.json").read_text())
    assert len(doc2["images"]) == 3


def test_make_scenes_config_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("objects = x\nwibble = 3\n")
    assert run(["make-scenes", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "wibble" in capsys.readouterr().err


def test_report_cost_cli(tmp_path, capsys):
    rc = run(["report", "cost", "--n-scenes", "0", "--categories", "apple"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["seconds"] == pytest.approx(1472.65, abs=1e-9)
    csv = tmp_path / "cost.csv"
    rc = run(["report", "cost", "--n-scenes", "100", "--categories", "apple",
              "--out", str(tmp_path / "cost.json"), "--csv", str(csv),
              "--sweep", "0,50,100"])
    assert rc == 0
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "n_scenes,seconds"
    assert len(lines) == 4


def test_report_success_cli(tmp_path, capsys):
    tally = {
        "labelling": {"apple": [29, 30], "banana": [30, 30], "strawberry": [30, 30],
                      "orange": [30, 30], "peach": [29, 30], "plum": [30, 30]},
        "grasping": {"apple": [24, 30], "banana": [21, 30], "strawberry": [17, 30],
                     "orange": [22, 30], "peach": [20, 30], "plum": [22, 30]},
    }
    path = tmp_path / "tally.json"
    path.write_text(json.dumps(tally))
    assert run(["report", "success", "--tally", str(path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["labelling"]["total"] == 98.9
    assert doc["grasping"]["total"] == 70.0


def test_cloud_seg_and_grasp_cli(tmp_path, capsys):
    from clutterkit.core import save_depth
    from clutterkit import rle

    # table at 800 mm with two raised square objects
    depth = np.full((60, 80), 800, dtype=np.uint16)
    depth[10:24, 10:26] = 700
    depth[30:46, 50:70] = 690
    depth_path = tmp_path / "depth.png"
    save_depth(depth_path, depth)
    intr = {"fx": 120.0, "fy": 120.0, "cx": 40.0, "cy": 30.0}
    intr_path = tmp_path / "intr.json"
    intr_path.write_text(json.dumps(intr))

    out = tmp_path / "clusters.json"
    xyz = tmp_path / "cloud.xyz"
    rc = run(["cloud-seg", "--depth", str(depth_path), "--intrinsics", str(intr_path),
              "--method", "dbscan", "--eps", "0.02", "--min-pts", "5",
              "--out", str(out), "--xyz-out", str(xyz)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["n_clusters"] == 2
    assert doc["plane"] is not None
    assert xyz.exists()

    rc = run(["cloud-seg", "--depth", str(depth_path), "--intrinsics", str(intr_path),
              "--method", "kmeans", "--k", "2", "--out", str(tmp_path / "km.json")])
    assert rc == 0
    km = json.loads((tmp_path / "km.json").read_text())
    assert km["n_clusters"] == 2

    # masks method + grasp point on the highest-scored instance
    mask_a = np.zeros((60, 80), dtype=bool)
    mask_a[10:24, 10:26] = True
    mask_b = np.zeros((60, 80), dtype=bool)
    mask_b[30:46, 50:70] = True
    preds = [
        {"image_id": 1, "category_id": 1, "bbox": [10, 10, 16, 14], "score": 0.95,
         "segmentation": rle.mask_to_coco(mask_a)},
        {"image_id": 1, "category_id": 4, "bbox": [50, 30, 20, 16], "score": 0.80,
         "segmentation": rle.mask_to_coco(mask_b)},
    ]
    pred_path = tmp_path / "preds.json"
    pred_path.write_text(json.dumps(preds))
    rc = run(["cloud-seg", "--depth", str(depth_path), "--intrinsics", str(intr_path),
              "--method", "masks", "--pred", str(pred_path),
              "--out", str(tmp_path / "mk.json")])
    assert rc == 0
    mk = json.loads((tmp_path / "mk.json").read_text())
    assert mk["n_clusters"] == 2

    grasp_out = tmp_path / "grasp.json"
    rc = run(["grasp-point", "--depth", str(depth_path), "--intrinsics", str(intr_path),
              "--pred", str(pred_path), "--out", str(grasp_out)])
    assert rc == 0
    g = json.loads(grasp_out.read_text())
    assert g["target"]["category"] == "apple"
    assert g["target"]["confidence"] == 0.95
    assert g["alignment"] == pytest.approx(1.0, abs=1e-3)   # flat top surface

    # same grasp through the xyz file path
    rc = run(["cloud-seg", "--depth", str(depth_path), "--intrinsics", str(intr_path),
              "--method", "masks", "--pred", str(pred_path),
              "--out", str(tmp_path / "mk2.json"), "--xyz-out", str(tmp_path / "c2.xyz")])
    assert rc == 0
    rc = run(["grasp-point", "--cloud", str(tmp_path / "c2.xyz"),
              "--pred", str(pred_path), "--out", str(tmp_path / "g2.json")])
    assert rc == 0
    g2 = json.loads((tmp_path / "g2.json").read_text())
    assert g2["alignment"] == pytest.approx(1.0, abs=1e-3)


def test_grasp_point_requires_exactly_one_source(capsys):
    assert run(["grasp-point"]) == 1
    assert "exactly one" in capsys.readouterr().err
