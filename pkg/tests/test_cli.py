"""Сквозные прогоны команд через main.run на крошечной конфигурации."""

import json

import pytest

from main import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, run
from storage import read_records
from vocab import perturbation_budget

TINY_CONFIG = """
synth.n_total=150
synth.num_classes=3
synth.keyword_pool_size=6
synth.filler_pool_size=20
synth.min_len=5
synth.max_len=9
split.labeled_per_class=4
split.unlabeled=60
split.dev=30
mlm.epochs=2
mlm.window=2
mlm.dim=6
mlm.hidden=8
model.d=6
model.d_a=4
model.h=8
perturb.k=4
perturb.S=1
train.total_steps=4
train.eval_every=2
train.labeled_batch=4
train.unlabeled_batch=4
train.probe_size=4
"""


def _run(capsys, *argv):
    code = run([str(a) for a in argv])
    out = capsys.readouterr().out.strip()
    return code, (json.loads(out) if code == EXIT_OK and out else None)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.cfg"
    cfg.write_text(TINY_CONFIG, encoding="utf-8")
    data, mlm = root / "data", root / "mlm.bin"
    assert run(["gen-data", "--config", str(cfg), "--out", str(data)]) == EXIT_OK
    assert run(["pretrain-mlm", "--config", str(cfg), "--data", str(data), "--out", str(mlm)]) == EXIT_OK
    return {"root": root, "cfg": cfg, "data": data, "mlm": mlm}


@pytest.fixture(scope="module")
def trained(workspace):
    root = workspace["root"]
    ckpt, metrics = root / "clf.bin", root / "metrics.jsonl"
    code = run(["train", "--config", str(workspace["cfg"]), "--data", str(workspace["data"]),
                "--mlm", str(workspace["mlm"]), "--checkpoint", str(ckpt), "--metrics-out", str(metrics)])
    assert code == EXIT_OK
    return {**workspace, "ckpt": ckpt, "metrics": metrics}


def test_gen_data_is_deterministic(workspace, tmp_path, capsys):
    code, result = _run(capsys, "gen-data", "--config", workspace["cfg"], "--out", tmp_path)
    assert code == EXIT_OK
    assert result["record"] == "gen-data"
    assert result["sizes"] == {"labeled": 12, "unlabeled": 60, "dev": 30, "test": 48}
    for name in ("labeled.tsv", "unlabeled.tsv", "dev.tsv", "test.tsv", "spec.json"):
        assert (tmp_path / name).read_bytes() == (workspace["data"] / name).read_bytes()
    assert json.loads((tmp_path / "spec.json").read_text(encoding="utf-8"))["config_hash"] == result["config_hash"]


def test_train_writes_metrics_with_provenance(trained):
    records = read_records(trained["metrics"])
    header, evals = records[0], records[1:]
    assert header["record"] == "header"
    assert header["strategy"] == "vat_d"
    assert [r["step"] for r in evals] == [2, 4]
    assert {r["config_hash"] for r in records} == {header["config_hash"]}
    assert (trained["root"] / "clf.bin.vocab").is_file()


def test_eval_reports_accuracy(trained, capsys):
    code, result = _run(capsys, "eval", "--checkpoint", trained["ckpt"], "--data", trained["data"] / "test.tsv")
    assert code == EXIT_OK
    assert 0.0 <= result["accuracy"] <= 1.0
    assert result["n"] == 48


def test_perturb_dump_respects_budget(trained, tmp_path, capsys):
    out = tmp_path / "perturb.jsonl"
    code, result = _run(capsys, "perturb", "--config", trained["cfg"], "--classifier", trained["ckpt"],
                        "--mlm", trained["mlm"], "--input", trained["data"] / "dev.tsv", "--out", out,
                        "--tau", "0.3", "--refine", "2")
    assert code == EXIT_OK
    assert result["n"] == 30
    assert sum(result["rank_histogram"]) > 0
    records = read_records(out)
    assert len(records) == 30
    for r in records:
        M = len(r["original_text"].split())
        assert len(r["indexes"]) == perturbation_budget(M, 0.3)
        changed = [i for i, (a, b) in enumerate(zip(r["original_text"].split(), r["perturbed_text"].split()))
                   if a != b]
        assert set(changed) <= set(r["indexes"])
        assert r["backward_passes"] == 1
        assert r["mlm_forward_passes"] == 3
        assert len(r["perplexity_trace"]) == 3
        assert r["kl_before_after"][0] >= 0.0
        assert r["config_hash"] == result["config_hash"]


def test_invalid_tau_is_a_validation_error(trained, tmp_path):
    code = run(["train", "--config", str(trained["cfg"]), "--data", str(trained["data"]),
                "--mlm", str(trained["mlm"]), "--checkpoint", str(tmp_path / "c.bin"),
                "--metrics-out", str(tmp_path / "m.jsonl"), "--set", "perturb.tau=1.5"])
    assert code == EXIT_VALIDATION


def test_consistency_without_mlm_is_a_validation_error(trained, tmp_path):
    code = run(["train", "--config", str(trained["cfg"]), "--data", str(trained["data"]),
                "--checkpoint", str(tmp_path / "c.bin"), "--metrics-out", str(tmp_path / "m.jsonl")])
    assert code == EXIT_VALIDATION


def test_ce_only_trains_without_mlm(trained, tmp_path, capsys):
    code, result = _run(capsys, "train", "--config", trained["cfg"], "--data", trained["data"],
                        "--checkpoint", tmp_path / "c.bin", "--metrics-out", tmp_path / "m.jsonl",
                        "--strategy", "ce-only")
    assert code == EXIT_OK
    assert result["strategy"] == "ce-only"
    assert "train" in result["timing_ms"]


def test_missing_inputs_are_validation_errors(trained, tmp_path):
    assert run(["eval", "--checkpoint", str(tmp_path / "absent.bin"),
                "--data", str(trained["data"] / "dev.tsv")]) == EXIT_VALIDATION
    assert run(["pretrain-mlm", "--config", str(trained["cfg"]), "--data", str(tmp_path),
                "--out", str(tmp_path / "m.bin")]) == EXIT_VALIDATION


def test_corrupted_checkpoint_is_a_runtime_error(trained, tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"not a checkpoint at all")
    (tmp_path / "bad.bin.vocab").write_bytes((trained["root"] / "clf.bin.vocab").read_bytes())
    assert run(["eval", "--checkpoint", str(bad), "--data", str(trained["data"] / "dev.tsv")]) == EXIT_RUNTIME


def test_ablation_summary(trained, tmp_path, capsys):
    out = tmp_path / "ablation"
    code, result = _run(capsys, "ablate", "--config", trained["cfg"], "--data", trained["data"],
                        "--mlm", trained["mlm"], "--out", out, "--strategies", "vat_d,ce-only",
                        "--seeds", "0,1", "--steps", "2")
    assert code == EXIT_OK
    keys = [row["key"] for row in result["rows"]]
    assert keys == ["vat_d/1", "ce-only"]
    for row in result["rows"]:
        assert row["runs"] == 2
        assert row["failed"] == 0
        assert row["seeds"] == [0, 1]
    summary = read_records(out / "ablation.jsonl")
    assert summary[0]["record"] == "header"
    assert [r["key"] for r in summary[1:]] == keys
    table = (out / "ablation.txt").read_text(encoding="utf-8").splitlines()
    assert result["table"] == str(out / "ablation.txt")
    assert table[0].split()[0] == "strategy"
    assert [line.split()[0] for line in table[1:]] == keys


def test_ablation_rejects_unknown_strategy(trained, tmp_path):
    code = run(["ablate", "--config", str(trained["cfg"]), "--data", str(trained["data"]),
                "--mlm", str(trained["mlm"]), "--out", str(tmp_path), "--strategies", "greedy", "--seeds", "0"])
    assert code == EXIT_VALIDATION
