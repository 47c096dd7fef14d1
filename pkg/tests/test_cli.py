import json
import math

import numpy as np
import pytest

from fsep import write_bundle
from fsep.cli import main

from conftest import make_bundle


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def two_point_bundle(tmp_path):
    # symmetric two-point layout whose dispersion is exactly ln 2
    features = np.array([[1.0, 0.0], [-1.0, 0.0]])
    logits = np.array([[2.0, -2.0], [-2.0, 2.0]])
    bundle = make_bundle(features, logits, 2, labels=np.array([0, 1]))
    write_bundle(bundle, tmp_path / "two_point")
    return tmp_path / "two_point"


@pytest.fixture()
def small_suite(tmp_path, capsys):
    out = tmp_path / "suite"
    code = main([
        "synth", "--out", str(out), "--k", "3", "--d", "4", "--train-n", "10",
        "--test-m", "60", "--families", "2", "--severities", "2", "--seed", "1",
    ])
    captured = json.loads(capsys.readouterr().out)
    assert code == 0
    assert captured["bundles"] == 5
    return out


def test_score_dispersion_two_point(capsys, two_point_bundle):
    code, out, _ = run_cli(capsys, "score", "--bundle", str(two_point_bundle),
                           "--metric", "dispersion")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"metric", "value", "degenerate", "seconds"}
    assert payload["metric"] == "dispersion"
    assert abs(payload["value"] - math.log(2)) < 1e-6
    assert payload["degenerate"] is False


def test_score_atc_requires_reference(capsys, two_point_bundle):
    code, out, err = run_cli(capsys, "score", "--bundle", str(two_point_bundle),
                             "--metric", "atc")
    assert code == 2
    assert out == ""
    assert "--reference" in err


def test_score_true_labels_absent(capsys, tmp_path, rng):
    bundle = make_bundle(rng.standard_normal((5, 2)), rng.standard_normal((5, 2)), 2)
    write_bundle(bundle, tmp_path / "unlabeled")
    code, _, err = run_cli(capsys, "score", "--bundle", str(tmp_path / "unlabeled"),
                           "--metric", "dispersion", "--labels", "true")
    assert code == 1
    assert "labels absent" in err


def test_score_unknown_metric_is_usage_error(two_point_bundle):
    with pytest.raises(SystemExit) as excinfo:
        main(["score", "--bundle", str(two_point_bundle), "--metric", "bogus"])
    assert excinfo.value.code == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["score", "--bundle", "x", "--metric", "dispersion", "--frobnicate"])
    assert excinfo.value.code == 2


def test_score_missing_bundle_is_data_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "score", "--bundle", str(tmp_path / "nope"),
                           "--metric", "dispersion")
    assert code == 1
    assert err


def test_score_reference_metrics(capsys, small_suite):
    for metric in ("atc", "frechet", "mmd"):
        code, out, _ = run_cli(
            capsys, "score", "--bundle", str(small_suite / "family00_s2"),
            "--metric", metric, "--reference", str(small_suite / "reference"),
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["metric"] == metric
        assert payload["value"] >= 0.0


def test_synth_count_arithmetic(capsys, tmp_path):
    out = tmp_path / "wide"
    code = main([
        "synth", "--out", str(out), "--k", "3", "--d", "4", "--train-n", "5",
        "--test-m", "30", "--families", "5", "--severities", "5",
    ])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["bundles"] == 26  # 1 reference + 5*5 tests
    bundle_dirs = [p for p in out.iterdir() if p.is_dir()]
    assert len(bundle_dirs) == 26
    assert (out / "manifest.json").is_file()


def test_synth_determinism(capsys, tmp_path):
    args = ["--k", "3", "--d", "4", "--train-n", "8", "--test-m", "40",
            "--families", "1", "--severities", "2", "--seed", "9"]
    assert main(["synth", "--out", str(tmp_path / "a"), *args]) == 0
    assert main(["synth", "--out", str(tmp_path / "b"), *args]) == 0
    capsys.readouterr()
    for rel in ("manifest.json", "family00_s1/features.fsb", "reference/logits.fsb"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_synth_invalid_config(capsys, tmp_path):
    code, _, err = run_cli(capsys, "synth", "--out", str(tmp_path / "x"),
                           "--k", "10", "--d", "5")
    assert code == 2
    assert "d must be >= k" in err


def test_validate_fresh_bundle(capsys, small_suite):
    code, out, err = run_cli(capsys, "validate", "--bundle",
                             str(small_suite / "reference"))
    assert code == 0
    assert out == "" and err == ""


def test_validate_truncated_file(capsys, small_suite, tmp_path):
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(small_suite / "family00_s1", broken)
    payload = (broken / "features.fsb").read_bytes()
    (broken / "features.fsb").write_bytes(payload[:30])
    code, _, err = run_cli(capsys, "validate", "--bundle", str(broken))
    assert code == 1
    assert "unexpected end of file" in err


def test_fit_two_metrics(capsys, small_suite, tmp_path):
    csv_path = tmp_path / "report.csv"
    code, out, _ = run_cli(
        capsys, "fit", "--manifest", str(small_suite / "manifest.json"),
        "--metric", "dispersion", "--metric", "confscore", "--csv", str(csv_path),
    )
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"fits", "raw_spearman"}
    assert set(payload["fits"]) == {"dispersion", "confscore"}
    for fit in payload["fits"].values():
        assert set(fit) == {"slope", "intercept", "r2", "spearman", "n_points"}
        assert fit["n_points"] == 4
    header = csv_path.read_text().splitlines()[0]
    assert header == "bundle,family,severity,true_error,dispersion,confscore"


def test_fit_empty_manifest(capsys, tmp_path):
    (tmp_path / "manifest.json").write_text(
        json.dumps({"reference": "ref", "tests": [], "k": 3})
    )
    code, _, err = run_cli(capsys, "fit", "--manifest",
                           str(tmp_path / "manifest.json"), "--metric", "dispersion")
    assert code == 1
    assert "no test bundles" in err


def test_fit_deterministic_output(capsys, small_suite):
    args = ["fit", "--manifest", str(small_suite / "manifest.json"),
            "--metric", "kmeans-dispersion", "--seed", "4"]
    code_a = main(args)
    out_a = capsys.readouterr().out
    code_b = main(args)
    out_b = capsys.readouterr().out
    assert code_a == code_b == 0
    assert out_a == out_b


def test_report_writes_csv(capsys, small_suite, tmp_path):
    out_csv = tmp_path / "table.csv"
    code, _, _ = run_cli(
        capsys, "report", "--manifest", str(small_suite / "manifest.json"),
        "--metrics", "dispersion,entropy", "--out", str(out_csv),
    )
    assert code == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0] == "bundle,family,severity,true_error,dispersion,entropy"
    assert len(lines) == 1 + 4


def test_report_unknown_metric(capsys, small_suite, tmp_path):
    code, _, err = run_cli(
        capsys, "report", "--manifest", str(small_suite / "manifest.json"),
        "--metrics", "dispersion,wat", "--out", str(tmp_path / "t.csv"),
    )
    assert code == 2
    assert "unknown metric" in err
