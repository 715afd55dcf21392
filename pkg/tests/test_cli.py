from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from velomap.cli import main
from velomap.field import FlowSnapshot, Grid3, load_snapshot, save_snapshot
from velomap.render import write_matrix_csv


def _write_config(tmp_path: Path) -> Path:
    path = tmp_path / "config.json"
    config = {
        "snapshots": [{"kind": "tg", "n": 4}],
        "mlp": {"layers": [3], "max_epochs": 3},
        "som": {"rows": 2, "cols": 2, "epochs": 2},
    }
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


def test_gen_writes_snapshot(tmp_path: Path) -> None:
    out = tmp_path / "abc.vfld"
    assert main(["gen", "--kind", "abc", "--n", "8", "--re", "2", "--out", str(out)]) == 0
    snapshot = load_snapshot(out)
    assert snapshot.grid.shape == (8, 8, 8)
    assert snapshot.re == 2.0


def test_gen_rejects_bad_grid(tmp_path: Path) -> None:
    assert main(["gen", "--kind", "tg", "--n", "2", "--out", str(tmp_path / "bad.vfld")]) == 2


def test_usage_error_exits_one() -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["gen", "--kind", "vortex", "--out", "x.vfld"])
    assert excinfo.value.code == 1


def test_missing_command_exits_one() -> None:
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 1


def test_pipeline_then_eval(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out_dir = tmp_path / "out"
    assert main(["pipeline", "--config", str(_write_config(tmp_path)), "--out-dir", str(out_dir)]) == 0
    printed = capsys.readouterr().out
    assert "tg:n=4: sizes=(44, 9, 11)" in printed
    assert "reference_accuracy=0.67" in printed
    assert (out_dir / "report.json").is_file()
    assert (out_dir / "hitmap.pgm").read_text(encoding="ascii").startswith("P2\n2 2\n255\n")

    field = tmp_path / "tg.vfld"
    assert main(["gen", "--kind", "tg", "--n", "4", "--out", str(field)]) == 0
    assert main(["eval", "--model", str(out_dir / "model.mlp"), "--field", str(field), "--tau", "0.25"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("accuracy=")
    assert 0.0 <= float(line.removeprefix("accuracy=")) <= 1.0


def test_pipeline_rejects_invalid_config(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"snapshots": []}), encoding="utf-8")
    assert main(["pipeline", "--config", str(path), "--out-dir", str(tmp_path / "out")]) == 2


def test_pipeline_missing_snapshot_file(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"snapshots": ["nowhere.vfld"]}), encoding="utf-8")
    assert main(["pipeline", "--config", str(path), "--out-dir", str(tmp_path / "out")]) == 2


def test_pipeline_numerical_failure_exits_three(tmp_path: Path) -> None:
    grid = Grid3.cube(4)
    zeros = np.zeros(grid.shape)
    huge = FlowSnapshot(grid, np.full(grid.shape, 1e200), zeros, zeros, zeros, zeros, re=1.0, pr=1.0)
    save_snapshot(huge, tmp_path / "huge.vfld")
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"snapshots": ["huge.vfld"], "mlp": {"layers": [2], "max_epochs": 2}}), encoding="utf-8")
    with np.errstate(over="ignore", invalid="ignore"):
        assert main(["pipeline", "--config", str(path), "--out-dir", str(tmp_path / "out")]) == 3


def test_pipeline_rejects_zero_workers(tmp_path: Path) -> None:
    args = ["pipeline", "--config", str(_write_config(tmp_path)), "--out-dir", str(tmp_path / "out"), "--workers", "0"]
    assert main(args) == 1


def test_render_csv_to_pgm(tmp_path: Path) -> None:
    source, target = tmp_path / "m.csv", tmp_path / "m.pgm"
    write_matrix_csv(np.array([[0.0, 1.0], [2.0, 3.0]]), source)
    assert main(["render", "--in", str(source), "--out", str(target)]) == 0
    assert target.read_bytes() == b"P2\n2 2\n255\n0 85\n170 255\n"


def test_render_missing_input(tmp_path: Path) -> None:
    assert main(["render", "--in", str(tmp_path / "none.csv"), "--out", str(tmp_path / "m.pgm")]) == 2


def test_eval_rejects_corrupt_model(tmp_path: Path) -> None:
    model = tmp_path / "model.mlp"
    model.write_text("not a model\n", encoding="utf-8")
    field = tmp_path / "tg.vfld"
    assert main(["gen", "--kind", "tg", "--n", "4", "--out", str(field)]) == 0
    assert main(["eval", "--model", str(model), "--field", str(field)]) == 2
