import json
import math

import numpy as np
import pandas as pd
import pytest

from app.cli import build_parser, run
from app.cli.commands import bounds, compare_estimators, robustness, verify_score, verify_shapes
from app.schemas.experiment import ExperimentConfig
from pydantic import ValidationError


@pytest.fixture
def points_csv(tmp_path):
    """The four-point d = 2 dataset."""
    path = tmp_path / "pts.csv"
    path.write_text("1,0\n-1,0\n0,2\n0,-2\n", encoding="utf-8")
    return path


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_verify_score(tmp_path):
    output = tmp_path / "score.csv"
    code = run([
        "verify-score", "--shape", "student-t", "--nu", "5", "--dim", "2", "--seed", "7",
        "--n-thetas", "3", "--output", str(output),
    ])
    assert code == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == verify_score.COLUMNS
    assert len(frame) == 3 * 5
    assert frame["max_abs_residual"].max() <= 1e-8

    manifest = read_json(tmp_path / "score.manifest.json")
    assert manifest["command"] == "verify-score"
    assert manifest["seed"] == 7
    assert manifest["outputs"] == [str(output)]
    assert manifest["config"]["nu"] == 5.0


def test_outputs_are_reproducible(tmp_path):
    args = ["verify-score", "--dim", "1", "--seed", "3", "--n-thetas", "2", "--n-points", "20"]
    assert run(args + ["--output", str(tmp_path / "a.csv")]) == 0
    assert run(args + ["--output", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_estimate_w(tmp_path, points_csv):
    output = tmp_path / "est.json"
    assert run(["estimate", "--method", "w", "--data", str(points_csv), "--output", str(output)]) == 0
    report = read_json(output)
    np.testing.assert_allclose(report["estimate"]["lambda"], np.diag([math.sqrt(2), 1 / math.sqrt(2)]), atol=1e-12)
    assert report["method"] == "w"
    assert report["converged"] is True


def test_estimate_mle_gaussian(tmp_path, points_csv):
    output = tmp_path / "mle.json"
    assert run(["estimate", "--method", "mle", "--shape", "gaussian", "--data", str(points_csv), "--output", str(output)]) == 0
    np.testing.assert_allclose(
        read_json(output)["estimate"]["lambda"], np.diag([math.sqrt(2), 1 / math.sqrt(2)]), atol=1e-6
    )


def test_estimate_ragged_data(tmp_path, capsys):
    data = tmp_path / "bad.csv"
    data.write_text("1,2\n3\n", encoding="utf-8")
    assert run(["estimate", "--method", "w", "--data", str(data), "--output", str(tmp_path / "o.json")]) == 1
    assert "ParseError" in capsys.readouterr().err
    assert not (tmp_path / "o.json").exists()


def test_estimate_singular_data_exits_2(tmp_path, capsys):
    data = tmp_path / "one.csv"
    data.write_text("1,2\n", encoding="utf-8")
    assert run(["estimate", "--method", "w", "--data", str(data), "--output", str(tmp_path / "o.json")]) == 2
    assert "SingularMatrix" in capsys.readouterr().err


def test_estimate_mle_uniform_ball_exits_1(tmp_path, points_csv, capsys):
    code = run([
        "estimate", "--method", "mle", "--shape", "uniform-ball", "--data", str(points_csv),
        "--output", str(tmp_path / "o.json"),
    ])
    assert code == 1
    assert "UnsupportedShape" in capsys.readouterr().err


def test_distance(tmp_path):
    output = tmp_path / "d.json"
    assert run(["distance", "--mu1", "0,0", "--lam1", "I", "--mu2", "1,0", "--lam2", "I", "--output", str(output)]) == 0
    assert read_json(output)["value"] == pytest.approx(1.0)


def test_distance_from_config_file(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"command": "distance", "mu": [0.0], "mu2": [3.0], "lam2": [[1.0]]}), encoding="utf-8")
    output = tmp_path / "d.json"
    assert run(["distance", "--config", str(config), "--output", str(output)]) == 0
    assert read_json(output)["value"] == pytest.approx(9.0)


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"mu": [0.0], "mu2": [1.0], "colour": "red"}), encoding="utf-8")
    assert run(["distance", "--config", str(config), "--output", str(tmp_path / "d.json")]) == 1
    assert "colour" in capsys.readouterr().err


def test_invalid_nu_exits_1(tmp_path, capsys):
    assert run(["verify-score", "--shape", "student-t", "--nu", "1.5", "--output", str(tmp_path / "s.csv")]) == 1
    assert "nu" in capsys.readouterr().err


def test_student_t_requires_nu(tmp_path):
    assert run(["verify-score", "--shape", "student-t", "--output", str(tmp_path / "s.csv")]) == 1


def test_unknown_flag_exits_1():
    assert run(["bounds", "--colour", "red"]) == 1


def test_verify_shapes(tmp_path):
    output = tmp_path / "shapes.csv"
    assert run(["verify-shapes", "--dim", "2", "--n", "50000", "--seed", "1", "--output", str(output)]) == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == verify_shapes.COLUMNS
    assert frame["shape"].tolist() == ["gaussian", "uniform-ball", "student-t(5)"]
    assert frame["passed"].all()


def test_robustness(tmp_path):
    output = tmp_path / "rob.csv"
    assert run(["robustness", "--statistics", "linear,square", "--n", "50000", "--output", str(output)]) == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == robustness.COLUMNS
    assert frame["statistic"].tolist() == ["linear", "square"]
    assert (frame["z_score"] <= 5).all()


def test_bounds(tmp_path):
    output = tmp_path / "bounds.csv"
    assert run(["bounds", "--statistics", "cube", "--n-thetas", "2", "--n", "20000", "--output", str(output)]) == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == bounds.COLUMNS
    assert len(frame) == 2
    assert frame["passed"].all()


def test_bounds_json_format(tmp_path):
    output = tmp_path / "bounds.json"
    assert run([
        "bounds", "--statistics", "linear", "--n-thetas", "1", "--n", "5000", "--format", "json", "--output", str(output),
    ]) == 0
    rows = read_json(output)
    assert rows[0]["statistic"] == "linear"


def test_compare_estimators(tmp_path):
    output = tmp_path / "cmp.csv"
    assert run([
        "compare-estimators", "--methods", "w,mle", "--n", "200", "--replications", "100", "--output", str(output),
    ]) == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == compare_estimators.COLUMNS
    assert frame["method"].tolist() == ["w", "w", "mle", "mle"]
    assert (frame["failed"] == 0).all()


def test_compare_estimators_wp1d_needs_one_dimension(tmp_path, capsys):
    output = tmp_path / "cmp.csv"
    assert run([
        "compare-estimators", "--methods", "w,wp1d", "--dim", "2", "--n", "50", "--replications", "100",
        "--output", str(output),
    ]) == 1
    assert "InvalidInput" in capsys.readouterr().err
    assert not output.exists()


def test_help_lists_columns(capsys):
    assert run(["bounds", "--help"]) == 0
    assert ",".join(bounds.COLUMNS) in capsys.readouterr().out


def test_parser_knows_every_command():
    args = build_parser().parse_args(["verify-shapes", "--dim", "3"])
    assert (args.command, args.dim, args.seed) == ("verify-shapes", 3, None)


def test_experiment_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(command="estimate", method="w")
    with pytest.raises(ValidationError):
        ExperimentConfig(command="robustness", sigma2=[1e-3, -1.0, 2e-3])
    with pytest.raises(ValidationError):
        ExperimentConfig(command="bounds", statistics=["median"])
    config = ExperimentConfig(command="distance", mu="0,1", mu2=[1, 1], lam="2,1;1,2")
    assert config.lam == [[2.0, 1.0], [1.0, 2.0]]
