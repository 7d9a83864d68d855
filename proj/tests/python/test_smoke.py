import json
import os
import pathlib
import subprocess

import jsonschema
import numpy as np
import pytest

import hydraquant as hq

ROOT = pathlib.Path(os.environ.get("HQ_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def load_schema(name):
    return json.loads((ROOT / "docs" / name).read_text())


@pytest.fixture(scope="module")
def small_pair():
    return hq.make_synthetic("planted_complementarity", n_train=120, n_test=60, length=32, seed=3)


def test_strategies_listed():
    assert hq.strategies() == [
        "fc_ridge", "fc_et", "qfeat_hlogit_ridge", "qfeat_hlogit_et", "dual_oof_et", "cawpe"]


def test_dataset_roundtrip_from_arrays():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, 2, 16)).astype(np.float32)
    y = [5, 9] * 5
    train = hq.dataset_from_arrays(x, y)
    assert train.n_classes == 2
    assert list(train.label_values) == [5, 9]
    assert train.y.tolist() == [0, 1] * 5
    np.testing.assert_array_equal(train.x, x)
    test = hq.dataset_from_arrays(x[:4], y[:4], split="test", label_values=train.label_values)
    assert test.is_test
    with pytest.raises(hq.DataError):
        hq.dataset_from_arrays(x[:2], [5, 7], split="test", label_values=train.label_values)


def test_features_shapes(small_pair):
    train, test = small_pair
    h_train, h_test = hq.hydra_features(train, test)
    assert h_train.shape[0] == 120 and h_test.shape[0] == 60
    assert h_train.shape[1] == h_test.shape[1]
    q = hq.quant_features(train)
    assert q.shape[0] == 120
    np.testing.assert_array_equal(q, hq.quant_features(train))


def test_run_strategy(small_pair):
    train, test = small_pair
    out = hq.run_strategy("cawpe", train, test, n_trees=20)
    assert out["probs"].shape == (60, 4)
    np.testing.assert_allclose(out["probs"].sum(axis=1), 1.0, atol=1e-9)
    assert 0.0 <= out["accuracy"] <= 1.0
    with pytest.raises(hq.ConfigError):
        hq.run_strategy("nope", train, test)
    # A test split may not be used as training data.
    with pytest.raises(hq.TaintError):
        hq.run_strategy("fc_ridge", test, train, n_trees=20)


def test_metrics():
    m = hq.prediction_metrics([0, 1, 1], [1, 1, 0], [0, 1, 0])
    assert m["acc_oracle"] == pytest.approx(1.0)
    assert m["disagreement"] == pytest.approx(2 / 3)
    assert m["error_corr"] == pytest.approx(-0.5)
    p = hq.cawpe_combine(np.array([[0.6, 0.4]]), np.array([[0.3, 0.7]]), 0.9, 0.8)
    assert p[0, 0] == pytest.approx(0.4847, abs=1e-4)
    a = np.random.default_rng(1).normal(size=(200, 3))
    assert hq.canonical_correlations(a, a)[0] == pytest.approx(1.0, abs=1e-6)


def test_bench_records_match_schema(tmp_path, small_pair):
    train, test = small_pair
    hq.save_dataset(train, str(tmp_path / "toy_TRAIN.tsd"))
    hq.save_dataset(test, str(tmp_path / "toy_TEST.tsd"))
    stem = str(tmp_path / "toy")
    records = hq.bench([stem, str(tmp_path / "missing")], ["fc_et", "cawpe"], n_trees=20, out_dir=str(tmp_path / "out"))
    schema = load_schema("run_record.schema.json")
    assert len(records) == 4
    for r in records:
        jsonschema.validate(r, schema)
    assert [r["status"] for r in records] == ["ok", "ok", "failed", "failed"]
    assert (tmp_path / "out" / "summary.csv").exists()
    assert len(list((tmp_path / "out" / "records").glob("*.json"))) == 4


def test_complementarity_matches_schema(small_pair, tmp_path):
    train, test = small_pair
    hq.save_dataset(train, str(tmp_path / "toy_TRAIN.tsd"))
    hq.save_dataset(test, str(tmp_path / "toy_TEST.tsd"))
    reports = hq.complementarity([str(tmp_path / "toy")], cap=40, n_trees=20)
    jsonschema.validate(reports, load_schema("complementarity.schema.json"))
    assert reports[0]["status"] == "ok"


def test_cli_bench_output_matches_schema(tmp_path):
    exe = os.environ.get("HQBENCH_PATH")
    if not exe:
        pytest.skip("HQBENCH_PATH not set")
    subprocess.run([exe, "make-synthetic", "--kind", "level_shift", "--out", str(tmp_path / "lv"),
                    "--n-train", "40", "--n-test", "20", "--length", "24"], check=True)
    proc = subprocess.run([exe, "bench", "--data", str(tmp_path / "lv"), "--strategy", "fc_ridge", "dual_oof_et",
                           "--trees", "10"], check=True, capture_output=True, text=True)
    schema = load_schema("run_record.schema.json")
    lines = proc.stdout.strip().splitlines()
    assert len(lines) == 2
    for line in lines:
        jsonschema.validate(json.loads(line), schema)
    bad = subprocess.run([exe, "bench", "--data", str(tmp_path / "lv")], capture_output=True)
    assert bad.returncode == 1
