import subprocess
import sys

import pytest

from sled.cli import build_parser, main
from sled.preprocess import load_mask

SMALL_CFG = "target_w=96\ntarget_h=72\nss_scale=100\nms_scales=100,150\nn_trees=20\n"


@pytest.fixture
def workspace(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL_CFG)
    assert main(["synth", "--n", "2", "--out", str(tmp_path / "data"), "--seed", "3",
                 "--width", "96", "--height", "72"]) == 0
    return tmp_path, cfg


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_synth_then_segment(workspace, capsys):
    tmp, cfg = workspace
    assert sorted(p.name for p in (tmp / "data").iterdir()) == [
        "gt_000.png", "gt_001.png", "img_000.png", "img_001.png"]
    rc = main(["segment", str(tmp / "data" / "img_000.png"), "--config", str(cfg),
               "--mode", "ss", "--out", str(tmp / "seg")])
    assert rc == 0
    assert load_mask(tmp / "seg" / "img_000_mask.png").shape == (72, 96)
    assert (tmp / "seg" / "img_000_overlay.png").exists()
    assert "img_000_mask.png" in capsys.readouterr().out


def test_batch_then_eval_agree(workspace):
    tmp, cfg = workspace
    data = tmp / "data"
    assert main(["batch", str(data), "--gt", str(data), "--out", str(tmp / "b"),
                 "--config", str(cfg)]) == 0
    assert main(["eval", str(tmp / "b"), str(data), "--out", str(tmp / "e.csv")]) == 0
    assert (tmp / "b" / "metrics.csv").read_text() == (tmp / "e.csv").read_text()


def test_missing_image_fails(tmp_path):
    assert main(["segment", str(tmp_path / "nope.png"), "--out", str(tmp_path)]) == 1


def test_bad_config_fails(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = 3\n")
    (tmp_path / "in").mkdir()
    assert main(["batch", str(tmp_path / "in"), "--out", str(tmp_path / "o"),
                 "--config", str(cfg)]) == 1


def test_empty_batch_succeeds(tmp_path, capsys):
    (tmp_path / "in").mkdir()
    assert main(["batch", str(tmp_path / "in"), "--out", str(tmp_path / "o")]) == 0
    assert "0 image(s)" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "sled.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "segment" in out.stdout
