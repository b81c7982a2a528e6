"""Smoke tests for the python bindings: tiny configs, fast paths only."""

import json
import math
import os

import pytest

import vqacl

TINY = {
    "data": {"train_size": 120, "val_size": 60, "test_size": 60, "seed": 5},
    "model": {"embed_dim": 8, "hidden_dim": 16, "attention_hops": 2, "mlp_hidden_dim": 16},
    "train": {"batch_size": 32, "max_epochs": 2, "patience": 2},
    "ewc": {"lambda_grid": [10.0], "fisher_samples": 10},
}


@pytest.fixture(scope="module")
def dataset():
    return vqacl.build_dataset(TINY)


def test_dataset_shape(dataset):
    assert dataset.vocab_size > 20
    stats = dataset.split_stats("wh", "train")
    assert stats["count"] == 120
    assert set(stats["per_subtype"]) == {
        "query_color",
        "query_shape",
        "query_material",
        "query_size",
    }
    yn = dataset.split_stats("yn", "train")
    assert abs(yn["yes_rate"] - 0.5) <= 0.02


def test_gold_answers_verify(dataset):
    assert vqacl.verify_gold_answers(dataset) == 1.0


def test_dataset_round_trip(tmp_path, dataset):
    vqacl.write_dataset(dataset, str(tmp_path / "data"))
    back = vqacl.load_dataset(str(tmp_path / "data"))
    assert back.data_hash == dataset.data_hash
    assert back.scene_count == dataset.scene_count
    assert vqacl.verify_gold_answers(back) == 1.0


def test_train_and_evaluate(tmp_path, dataset):
    out = str(tmp_path / "run")
    summary = vqacl.train_single(dataset, "wh", out, head="single", config=TINY, seed=0)
    assert 0.0 <= summary["test_accuracy"] <= 1.0
    assert summary["selected_epoch"] >= 1
    acc = vqacl.evaluate_checkpoint(os.path.join(out, "best.ckpt"), dataset, "wh")
    assert acc == pytest.approx(summary["test_accuracy"])


def test_run_strategy_and_reductions(tmp_path, dataset):
    naive = vqacl.run_strategy(
        dataset, "naive", "wh-yn", str(tmp_path / "naive"), config=TINY, seed=0
    )
    ewc0 = vqacl.run_strategy(
        dataset, "ewc", "wh-yn", str(tmp_path / "ewc0"), config=TINY, seed=0, ewc_lambda=0.0
    )
    assert naive["after_second"]["acc_first"] == ewc0["after_second"]["acc_first"]
    assert naive["after_second"]["acc_second"] == ewc0["after_second"]["acc_second"]
    for phase in ("after_first", "after_second"):
        for key in ("acc_first", "acc_second"):
            assert 0.0 <= naive[phase][key] <= 1.0


def test_metrics_helpers():
    assert vqacl.cl_score(0.81, 0.74) == pytest.approx(0.775)
    analytic, mc = vqacl.stratified_random_baseline(
        [0.5, 0.5], [0, 1] * 500, seed=1, trials=10000
    )
    assert analytic == pytest.approx(0.5)
    assert abs(mc - 0.5) < 0.02


def test_pca_and_silhouette():
    coords, explained = vqacl.pca_project([[0, 0, 5], [2, 0, 5], [0, 1, 5]])
    l1 = (5 + math.sqrt(13)) / 6
    l2 = (5 - math.sqrt(13)) / 6
    assert explained[0] == pytest.approx(l1 / (l1 + l2), abs=1e-9)
    assert len(coords) == 3

    rows = [[0, 0], [0.1, 0], [10, 10], [10.1, 10]]
    assert vqacl.silhouette(rows, [0, 0, 1, 1]) > 0.9
    with pytest.raises(Exception):
        vqacl.silhouette([[1, 1]] * 4, [0, 0, 1, 1])


def test_analyze_checkpoint(tmp_path, dataset):
    out = str(tmp_path / "run")
    vqacl.train_single(dataset, "wh", out, head="single", config=TINY, seed=1)
    result = vqacl.analyze_checkpoint(
        os.path.join(out, "best.ckpt"), dataset, sample_per_task=32, seed=0,
        out_dir=str(tmp_path / "analysis"),
    )
    assert os.path.exists(result["csv"])
    with open(result["json"]) as f:
        scores = json.load(f)
    assert scores["sample_per_task"] == 32
    assert -1.0 <= scores["silhouette_wh_subtypes"] <= 1.0
