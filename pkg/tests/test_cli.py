import json

import numpy as np
import pytest

from preimage_forge import Image, read_kernel_csv, read_metrics_csv, write_ppm
from preimage_forge.cli import main


def write_config(tmp_path, name="run.json", **overrides):
    cfg = {
        "model": "vggish",
        "objective": {"kind": "activation_max", "unit": 0},
        "demons": {"fluid": {"kind": "none"}, "tau": 0.1, "steps": 3},
        "output": {"image": "out.pgm", "metrics": "metrics.csv"},
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def test_kernel_dirac(tmp_path, capsys):
    assert main(["kernel", "--kind", "dirac", "--side", "3", "--out", str(tmp_path / "k")]) == 0
    kernel = read_kernel_csv(tmp_path / "k.csv")
    assert kernel.weights[1, 1] == 1.0
    assert (tmp_path / "k.pgm").is_file()
    assert "wrote" in capsys.readouterr().out


def test_kernel_fitted_sobolev_reports_parameter(tmp_path, capsys):
    assert main(
        ["kernel", "--kind", "sobolev", "--side", "11", "--threshold", "1e-4", "--out", str(tmp_path / "s")]
    ) == 0
    out = capsys.readouterr().out
    assert "fitted gamma = " in out


def test_kernel_reruns_are_byte_identical(tmp_path):
    args = ["kernel", "--kind", "gaussian", "--side", "7", "--sigma", "1.5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_kernel_parameter_combinations_rejected(tmp_path, capsys):
    base = ["--side", "5", "--out", str(tmp_path / "k")]
    bad = (
        ["kernel", "--kind", "dirac", "--sigma", "1.0"] + base,
        ["kernel", "--kind", "gaussian", "--sigma", "1.0", "--threshold", "1e-4"] + base,
        ["kernel", "--kind", "sobolev"] + base,
    )
    for argv in bad:
        assert main(argv) == 2
    capsys.readouterr()


def test_train_writes_model_and_report(tmp_path, capsys):
    out = tmp_path / "v.model"
    argv = ["train", "--arch", "vggish", "--seed", "0", "--n", "24", "--epochs", "1", "--out", str(out)]
    assert main(argv) == 0
    report = json.loads((tmp_path / "v.model.report.json").read_text())
    assert report["learning_rate"] == 0.15  # per-arch default
    assert len(report["train_accuracy"]) == 1
    first = out.read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == first
    capsys.readouterr()


def test_train_densish_default_rate(tmp_path, capsys):
    out = tmp_path / "d.model"
    argv = ["train", "--arch", "densish", "--n", "24", "--epochs", "1", "--out", str(out),
            "--report", str(tmp_path / "r.json")]
    assert main(argv) == 0
    assert json.loads((tmp_path / "r.json").read_text())["learning_rate"] == 0.3
    capsys.readouterr()


def test_train_unknown_arch_exits_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["train", "--arch", "resnet", "--out", str(tmp_path / "m")])
    assert info.value.code == 2
    capsys.readouterr()


def test_maximize_runs_and_reruns_identically(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["maximize", "--config", str(cfg)]) == 0
    image = (tmp_path / "out.pgm").read_bytes()
    metrics = (tmp_path / "metrics.csv").read_bytes()
    rows = read_metrics_csv(tmp_path / "metrics.csv")
    assert len(rows) == 3
    assert main(["maximize", "--config", str(cfg)]) == 0
    assert (tmp_path / "out.pgm").read_bytes() == image
    assert (tmp_path / "metrics.csv").read_bytes() == metrics
    assert "final_total" in capsys.readouterr().out


def test_invert_runs(tmp_path, capsys):
    rng = np.random.default_rng(0)
    write_ppm(Image(rng.uniform(0.3, 0.7, size=(32, 32, 1))), tmp_path / "t.ppm")
    cfg = write_config(
        tmp_path,
        objective={"kind": "inversion", "target": "t.ppm", "layer": "deepest_conv"},
        demons={"fluid": {"kind": "none"}, "tau": 0.5, "steps": 2},
    )
    assert main(["invert", "--config", str(cfg)]) == 0
    assert (tmp_path / "out.pgm").is_file()
    capsys.readouterr()


def test_dry_run_prints_resolved_config_and_writes_nothing(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["maximize", "--config", str(cfg), "--dry-run"]) == 0
    resolved = json.loads(capsys.readouterr().out)
    assert resolved["demons"]["tau"] == 0.1
    assert resolved["objective"]["unit"] == 0
    assert not (tmp_path / "out.pgm").exists()
    # feeding the echoed config back in resolves to itself
    cfg2 = tmp_path / "echo.json"
    cfg2.write_text(json.dumps(resolved), encoding="utf-8")
    assert main(["maximize", "--config", str(cfg2), "--dry-run"]) == 0
    assert json.loads(capsys.readouterr().out) == resolved


def test_subcommand_objective_kind_mismatch(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["invert", "--config", str(cfg)]) == 2
    assert "activation_max" in capsys.readouterr().err


def test_numerical_failure_exits_three(tmp_path, capsys):
    rng = np.random.default_rng(0)
    write_ppm(Image(rng.uniform(0.3, 0.7, size=(32, 32, 1))), tmp_path / "t.ppm")
    cfg = write_config(
        tmp_path,
        objective={"kind": "inversion", "target": "t.ppm", "z": 1e-300},
        demons={"fluid": {"kind": "none"}, "tau": 1e6, "steps": 5, "clamp": False},
    )
    with np.errstate(over="ignore", invalid="ignore"):
        assert main(["invert", "--config", str(cfg)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_missing_config_exits_two(tmp_path, capsys):
    assert main(["maximize", "--config", str(tmp_path / "nope.json")]) == 2
    assert "error:" in capsys.readouterr().err


def test_evaluate_cli_identity(tmp_path, capsys):
    out = tmp_path / "report.json"
    argv = [
        "evaluate", "--model-a", "vggish", "--model-b", "vggish",
        "--n-images", "3", "--steps", "2", "--presets", "identity", "--out", str(out),
    ]
    assert main(argv) == 0
    first = out.read_bytes()
    report = json.loads(first)
    assert "identity" in report["accuracy"]["a_to_b"]
    assert "a_to_b identity:" in capsys.readouterr().out
    assert main(argv) == 0
    assert out.read_bytes() == first
    capsys.readouterr()


def test_evaluate_bad_model_arg_exits_two(tmp_path, capsys):
    argv = ["evaluate", "--model-a", "nope.model", "--model-b", "vggish", "--out", str(tmp_path / "r.json")]
    assert main(argv) == 2
    capsys.readouterr()
