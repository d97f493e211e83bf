import math

import numpy as np
import pytest

import eaoa


def test_energy_scores():
    assert eaoa.free_energy([0.0] * 10) == pytest.approx(-math.log(10))
    e_known, e_unknown, eu = eaoa.epistemic_uncertainty([0.0] * 11)
    assert eu == pytest.approx(-math.log(10) + math.log(2))
    logits = [2.0, -1.0, 0.5]
    p = np.exp(logits) / np.exp(logits).sum()
    assert eaoa.aleatoric_uncertainty(logits) == pytest.approx(math.log(1 - p.max()), abs=1e-12)
    loss, grad = eaoa.margin_energy_loss([0.0] * 11, True)
    assert loss == pytest.approx((25 - math.log(10)) ** 2)
    assert len(grad) == 11


def test_arrows_and_density_score():
    rng = np.random.default_rng(0)
    labeled = rng.normal(size=(12, 3))
    unlabeled = rng.normal(size=(20, 3))
    labels = [i % 3 for i in range(12)]
    arrows = eaoa.reverse_knn_arrows(labeled, labels, unlabeled, 5, 3)
    assert arrows.shape == (20, 3)
    assert arrows.sum(axis=0).tolist() == [20, 20, 20]
    eu = eaoa.data_driven_eu(arrows, 1.0)
    assert len(eu) == 20
    with pytest.raises(ValueError):
        eaoa.reverse_knn_arrows(labeled, labels, unlabeled, 21, 3)


def test_mixture_and_fusion():
    rng = np.random.default_rng(1)
    scores = np.concatenate([rng.normal(-5, 1, 200), rng.normal(5, 1, 200)])
    fit = eaoa.fit_gmm(scores.tolist())
    assert sorted(fit["means"])[0] == pytest.approx(-5, abs=0.5)
    probs = eaoa.to_probabilistic(fit, [-10.0, 10.0])
    assert probs[0] < 0.01 and probs[1] > 0.99
    assert eaoa.fuse_eu([0.5, 1.0], [0.5, 0.0]) == [0.25, 0.0]


def test_sampler():
    eu = [0.9, 0.1, 0.5, 0.3, 0.8, 0.05, 0.7, 0.6, 0.2, 0.4]
    au = [0.95, 0.2, 0.9, 0.6, 0.99, 0.1, 0.5, 0.3, 0.7, 0.85]
    query, candidates = eaoa.select(eu, au, 2.0, 2)
    assert candidates == [5, 1, 8, 3]
    assert query == [8, 3]
    assert eaoa.update_k(5, 0.9) == 6
    assert eaoa.update_k(5, 0.4) == 4
    assert eaoa.update_k(5, 0.62) == 5


def test_run_experiment(tmp_path):
    config = {
        "dataset": {"total_classes": 5, "per_class": 15, "dim": 4, "center_spread": 3.0,
                    "initial_fraction": 0.1},
        "experiment": {"rounds": 2, "budget": 10, "seeds": [1]},
        "density": {"K": 10},
        "detector": {"hidden": [8], "sgd": {"epochs": 5}},
        "classifier": {"hidden": [8], "sgd": {"epochs": 5}},
    }
    summary = eaoa.run_experiment(config, tmp_path)
    assert summary["strategy"] == "eaoa"
    assert len(summary["rounds"]) == 2
    assert (tmp_path / "rounds.csv").exists()
    assert eaoa.default_config()["sampler"]["tP"] == 0.6
    with pytest.raises(ValueError):
        eaoa.run_experiment({"sampler": {"nope": 1}})
