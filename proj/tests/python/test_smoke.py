import math

import numpy as np
import pytest
from PIL import Image

import stylebalance as sb

VOC = """<annotation>
\t<filename>000001.jpg</filename>
\t<size><width>64</width><height>48</height><depth>3</depth></size>
\t<object><name>scallop</name><bndbox><xmin>4</xmin><ymin>5</ymin><xmax>20</xmax><ymax>30</ymax></bndbox></object>
\t<object><name>seaurchin</name><bndbox><xmin>30</xmin><ymin>6</ymin><xmax>60</xmax><ymax>40</ymax></bndbox></object>
</annotation>
"""


def test_parse_and_serialize_round_trip():
    rec = sb.parse_voc(VOC)
    assert rec.id == "000001"
    assert (rec.width, rec.height) == (64, 48)
    labels = [label for label, _ in rec.objects]
    assert labels == ["scallop", "seaurchin"]
    box = rec.objects[0][1]
    assert (box.xmin, box.ymin, box.xmax, box.ymax) == (4, 5, 20, 30)
    again = sb.parse_voc(sb.serialize_voc(rec))
    assert [(l, (b.xmin, b.ymin, b.xmax, b.ymax)) for l, b in again.objects] == [
        (l, (b.xmin, b.ymin, b.xmax, b.ymax)) for l, b in rec.objects
    ]


def test_unknown_class_raises():
    with pytest.raises(sb.Error):
        sb.parse_voc(VOC.replace("scallop", "octopus"))


def test_split_sizes():
    assert sb.split_sizes(2897, "898/2897", seed=7) == (1999, 898)
    assert sb.split_sizes(10, (3, 10)) == (7, 3)


def test_opponent_round_trip():
    rgb = (0.2, 0.4, 0.6)
    back = sb.from_opponent(sb.to_opponent(rgb))
    assert all(math.isclose(a, b, abs_tol=1e-12) for a, b in zip(rgb, back))


def test_haze_worked_example():
    px = np.array([[[0.2, 0.4, 0.6]]], dtype=np.float32)
    out = sb.apply_haze(px, (0.8, 0.9, 1.0), 0.7)
    np.testing.assert_allclose(out[0, 0], [0.38, 0.55, 0.72], atol=1e-6)


def test_color_transfer_and_classification():
    rng = np.random.default_rng(0)
    blue = np.clip(np.array([0.18, 0.40, 0.58]) + rng.uniform(-0.04, 0.04, (24, 32, 3)), 0, 1)
    green = np.clip(np.array([0.32, 0.50, 0.32]) + rng.uniform(-0.04, 0.04, (24, 32, 3)), 0, 1)
    assert sb.classify_style(blue)[0] == "blue"
    out, clipped = sb.color_transfer(blue, green)
    assert out.shape == blue.shape
    assert clipped == 0.0
    assert sb.classify_style(out)[0] == "green"


def test_adversarial_loss():
    assert sb.adversarial_loss([1.0, 0.0], [True, False]) == 0.0
    assert math.isclose(sb.adversarial_loss([0.8, 0.3, 0.9], [True, False, True]), 0.14 / 3, abs_tol=1e-12)


def test_plan_one_minority_image():
    records = [(f"pad{i}", ["a"], "green") for i in range(10)]
    records += [("pad_b", ["b"], "green"), ("img", ["b"], "green")]
    result = sb.plan(["a", "b"], records, ["b"], tolerance="5/4")
    assert result["status"] == "balanced"
    assert sum(job[3] for job in result["jobs"]) == 6
    assert result["objective_trace"][0] == "5"
    assert result["objective_trace"][-1] == "5/4"
    assert result["predicted"] == {"a": 10, "b": 8}


def write_dataset(root):
    (root / "images").mkdir(parents=True)
    (root / "annotations").mkdir()
    rng = np.random.default_rng(1)
    bases = {"green": (0.32, 0.50, 0.32), "blue": (0.18, 0.40, 0.58), "deepblue": (0.12, 0.20, 0.42), "white": (0.66, 0.72, 0.72)}
    lines = []
    for i in range(8):
        domain = list(bases)[i % 4]
        pixels = np.clip(np.array(bases[domain]) + rng.uniform(-0.05, 0.05, (24, 32, 3)), 0, 1)
        Image.fromarray((pixels * 255).round().astype(np.uint8)).save(root / "images" / f"p{i}.png")
        objects = [("scallop", 1)] if i < 2 else [("seaurchin", 2), ("starfish", 1)]
        objects = [name for name, n in objects for _ in range(n)] + (["seacucumber"] if i < 3 else [])
        xml = ["<annotation>", f"<filename>p{i}.png</filename>", "<size><width>32</width><height>24</height><depth>3</depth></size>"]
        for k, name in enumerate(objects):
            xml.append(f"<object><name>{name}</name><bndbox><xmin>{k}</xmin><ymin>1</ymin><xmax>{k + 5}</xmax><ymax>9</ymax></bndbox></object>")
        xml.append("</annotation>")
        (root / "annotations" / f"p{i}.xml").write_text("\n".join(xml) + "\n")
        lines.append(f"images/p{i}.png\tannotations/p{i}.xml")
    (root / "manifest.txt").write_text("\n".join(lines) + "\n")


def test_pipeline_stages(tmp_path):
    write_dataset(tmp_path / "data")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dataset_root = data\nwork_dir = work\nout_dir = out\nminority = scallop, seacucumber\nexport_pending = accept\n")
    code, report = sb.ingest(cfg)
    assert code == 0
    assert "records: 8" in report
    assert len(sb.load_dataset(tmp_path / "data")) == 8

    code, report = sb.run_plan(cfg)
    assert code in (0, 2)
    assert (tmp_path / "work" / "plan.tsv").exists()
    code, _ = sb.generate(cfg)
    assert code == 0
    code, report = sb.export(cfg, {"tolerance": "100"})
    assert code == 0
    check = sb.verify_balance(tmp_path / "out", "100")
    assert check["balanced"]
    assert sum(check["counts"].values()) >= 8 * 3 - 5
