"""Desk-scale directional checks (hours of CPU; opt in).

Run with: RUN_DESK_SCALE=1 pytest trainer/tests/test_desk_scale.py -s
"""

import os
import subprocess
import sys

import pytest

from cottrainer.data import load_dataset
from cottrainer.train import TrainConfig, build_model, train

pytestmark = pytest.mark.skipif(
    not os.environ.get("RUN_DESK_SCALE"),
    reason="desk-scale run; set RUN_DESK_SCALE=1 to enable")

MODEL = dict(layers=6, heads=16, width=256, context=512)
STEPS = 6000


def _generate(tmp_path_factory, name, cot, recap=True, count=20000):
    out = tmp_path_factory.mktemp(name)
    train_count = count // 2
    args = [sys.executable, "-m", "cotbench.cli", "generate", "--task", "lis",
            "--train", f"4:{train_count},8:{train_count}",
            "--eval", f"6:{count // 10}", "--cot", str(cot), "--seed", "13",
            "--jobs", "8", "--out", str(out)]
    if not recap:
        args.append("--no-recap")
    result = subprocess.run(args, capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    return out


def _run(dataset_dir, seed):
    dataset = load_dataset(dataset_dir)
    model = build_model(dataset, **MODEL)
    config = TrainConfig(steps=STEPS, batch_size=64, seed=seed,
                         eval_limit=500, eval_max_new=160)
    return train(model, dataset, config)


def test_directional_generalization_gap(tmp_path_factory):
    cot_dir = _generate(tmp_path_factory, "cot", 1.0)
    qa_dir = _generate(tmp_path_factory, "qa", 0.0)
    cot_id, cot_ood, qa_ood = [], [], []
    for seed in (0, 1):
        cot_report = _run(cot_dir, seed)
        qa_report = _run(qa_dir, seed)
        cot_id.append(cot_report.id_accuracy)
        cot_ood.append(cot_report.ood_accuracy)
        qa_ood.append(qa_report.ood_accuracy)
        print(f"seed {seed}: cot id={cot_report.id_accuracy:.3f} "
              f"ood={cot_report.ood_accuracy:.3f} "
              f"qa ood={qa_report.ood_accuracy:.3f}")
    mean = lambda xs: sum(xs) / len(xs)
    assert mean(cot_id) >= 0.9
    assert mean(cot_ood) - mean(qa_ood) >= 0.2


def test_granularity_ordering(tmp_path_factory):
    accuracies = []
    for rate in (0.0, 0.5, 1.0):
        report = _run(_generate(tmp_path_factory, f"rate{rate}", rate), 0)
        accuracies.append(report.ood_accuracy)
        print(f"rate {rate}: ood={report.ood_accuracy:.3f}")
    for lower, higher in zip(accuracies, accuracies[1:]):
        assert higher >= lower - 0.05


def test_recap_ablation_direction(tmp_path_factory):
    with_recap = _run(_generate(tmp_path_factory, "recap_on", 1.0, recap=True), 0)
    without = _run(_generate(tmp_path_factory, "recap_off", 1.0, recap=False), 0)
    print(f"recap on ood={with_recap.ood_accuracy:.3f} "
          f"off={without.ood_accuracy:.3f}")
    assert with_recap.ood_accuracy >= without.ood_accuracy + 0.1
