import json
import os

import pytest

from chemkan.cli import fit_loglog_slope, main


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("CHEMKAN_OUT", str(tmp_path))
    return tmp_path


def test_fit_loglog_slope_recovers_power_law():
    params = [10, 100, 1000]
    losses = [1.0, 1e-2, 1e-4]
    assert fit_loglog_slope(params, losses) == pytest.approx(-2.0)


def test_generate_writes_manifests(outdir):
    rc = main(["generate", "--set", "dataset.n_train=2",
               "--set", "dataset.n_test=1"])
    assert rc == 0
    gen = outdir / "generate"
    assert (gen / "train_manifest.json").exists()
    assert (gen / "test_manifest.json").exists()
    resolved = json.loads((gen / "resolved_config.json").read_text())
    assert resolved["dataset"]["n_train"] == 2
    assert resolved["experiment"] == "generate"


def test_train_then_evaluate(outdir):
    rc = main(["generate", "--set", "dataset.n_train=2",
               "--set", "dataset.n_test=1"])
    assert rc == 0
    rc = main(["train", "--set", "dataset.n_train=2",
               "--set", "dataset.n_test=1",
               "--set", "train.epochs_stage1=3"])
    assert rc == 0
    ck = outdir / "train" / "chemkan.ck.json"
    assert ck.exists()
    assert (outdir / "train" / "chemkan_stage1.trace").exists()
    rc = main(["evaluate", str(ck),
               str(outdir / "generate" / "test_manifest.json")])
    assert rc == 0
    assert (outdir / "evaluate" / "evaluate.txt").exists()


def test_config_file_and_override_precedence(outdir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": {"n_train": 3, "n_test": 1}}))
    rc = main(["generate", "--config", str(cfg),
               "--set", "dataset.n_train=2"])
    assert rc == 0
    resolved = json.loads(
        (outdir / "generate" / "resolved_config.json").read_text()
    )
    # file overrides defaults; --set overrides the file
    assert resolved["dataset"]["n_train"] == 2
    assert resolved["dataset"]["n_test"] == 1


def test_unknown_config_key_is_exit_1(outdir):
    assert main(["generate", "--set", "dataset.bogus=1"]) == 1


def test_bad_dataset_kind_is_exit_1(outdir):
    assert main(["generate", "--set", "dataset.kind=plasma"]) == 1


def test_missing_checkpoint_is_exit_1(outdir):
    assert main(["evaluate", "nope.ck.json", "nope_manifest.json"]) == 1


def test_ignition_on_toy_manifest(outdir):
    rc = main(["generate", "--set", "dataset.kind=toy",
               "--set", 'dataset.toy_train_T0=[1100.0]',
               "--set", 'dataset.toy_test_T0=[1150.0]'])
    assert rc == 0
    rc = main(["ignition", str(outdir / "generate" / "test_manifest.json")])
    assert rc == 0
    body = (outdir / "ignition" / "ignition.txt").read_text().splitlines()
    assert body[0].split() == ["trajectory", "delay_s"]
    assert float(body[1].split()[1]) > 0.0
