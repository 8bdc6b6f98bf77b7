"""Command-line driver: config validation, subcommands, artifact hygiene."""

import json
import re
from pathlib import Path

import pytest

from hyperq.cli import CONFIG_SCHEMA, ConfigError, main, parse_config

CONFIG = """\
[graph]
source = synth
seed = 7
n_entities = 40
n_relations = 6
profile = mixed

[sampling]
patterns = 1p
seed = 3
max_queries_per_split = 10
visit_budget = 50000

[training]
regime = mpqe-like
baseline = starqe
learning_rate = 0.005
batch_size = 8
max_epochs = 2
patience = 2
seeds = 0

[model]
dim = 8
layers = 1
dropout = 0.0
relation_aggregation = sum
similarity = dot

[output]
dir = {out}
"""


def write_config(tmp_path, **kw):
    out = tmp_path / "out"
    text = CONFIG.format(out=out)
    for key, value in kw.items():
        text = re.sub(rf"(?m)^{key} = .*$", f"{key} = {value}", text)
    path = tmp_path / "exp.ini"
    path.write_text(text)
    return path, out


def run(args, capsys):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def pipeline(tmp_path, capsys):
    cfg, out = write_config(tmp_path)
    assert main(["synth", "--config", str(cfg)]) == 0
    assert main(["sample", "--config", str(cfg)]) == 0
    capsys.readouterr()
    return cfg, out


def test_parse_config_happy_path(tmp_path):
    cfg_path, out = write_config(tmp_path)
    cfg = parse_config(str(cfg_path))
    assert cfg.graph["n_entities"] == 40
    assert [p.value for p in cfg.patterns] == ["1p"]
    assert cfg.regime == "mpqe-like"
    assert cfg.baseline == "starqe"
    assert cfg.seeds == [0]
    assert cfg.output_dir == str(out)
    hp = cfg.hyperparams()
    assert hp.dim == 8 and hp.layers == 1


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[grpah]\nseed = 1\n")
    with pytest.raises(ConfigError) as err:
        parse_config(str(path))
    assert "grpah" in str(err.value)
    for section in CONFIG_SCHEMA:
        assert section in str(err.value)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[graph]\nseedd = 1\n")
    with pytest.raises(ConfigError) as err:
        parse_config(str(path))
    assert "seedd" in str(err.value)


@pytest.mark.parametrize("key,value", [
    ("regime", "frequentist"),
    ("baseline", "gpt"),
    ("learning_rate", "fast"),
    ("seeds", ""),
    ("patterns", "4p"),
    ("dim", "-3"),
    ("relation_aggregation", "max"),
    ("similarity", "hamming"),
])
def test_bad_values_rejected(tmp_path, key, value):
    cfg_path, _ = write_config(tmp_path, **{key: value})
    with pytest.raises((ConfigError, ValueError)):
        parse_config(str(cfg_path))


def test_missing_config_file(capsys):
    code, _, err = run(["synth", "--config", "/nonexistent.ini"], capsys)
    assert code == 1
    payload = json.loads(err)
    assert set(payload["error"]) == {"type", "message"}


def test_synth_writes_graph_and_stats(tmp_path, capsys):
    cfg, out = write_config(tmp_path)
    code, stdout, _ = run(["synth", "--config", cfg], capsys)
    assert code == 0
    assert (out / "graph.json").exists()
    stats = json.loads((out / "stats.json").read_text())
    assert stats["entities"] == 40
    assert "statements" in stdout


def test_sample_requires_graph(tmp_path, capsys):
    cfg, out = write_config(tmp_path)
    code, _, err = run(["sample", "--config", cfg], capsys)
    assert code == 1
    assert "synth" in json.loads(err)["error"]["message"]


def test_sample_writes_bundles(pipeline, capsys):
    cfg, out = pipeline
    assert (out / "bundles" / "1p_records.json").exists() or \
        any((out / "bundles").glob("1p*"))


def test_train_eval_report_pipeline(pipeline, capsys):
    cfg, out = pipeline
    code, _, _ = run(["train", "--config", cfg], capsys)
    assert code == 0
    assert (out / "params_seed0.npz").exists()
    report = json.loads((out / "train_report_seed0.json").read_text())
    assert report["epochs_run"] >= 1
    assert "timing" in report

    code, _, _ = run(["eval", "--config", cfg], capsys)
    assert code == 0
    metrics = json.loads((out / "metrics_seed0.json").read_text())
    assert "1p" in metrics["entries"]
    assert "test" in metrics["entries"]["1p"]

    code, stdout, _ = run(["report", "--config", cfg], capsys)
    assert code == 0
    summary = json.loads((out / "report.json").read_text())
    assert summary["entries"]["1p"]["test"]["mrr"]["std"] == 0.0
    assert "mrr" in stdout


def test_oracle_subcommand(pipeline, capsys):
    cfg, out = pipeline
    code, _, _ = run(["oracle", "--config", cfg], capsys)
    assert code == 0
    metrics = json.loads((out / "oracle_metrics.json").read_text())
    assert "1p" in metrics["entries"]


def test_oracle_baseline_cannot_train(pipeline, capsys):
    cfg, out = pipeline
    code, _, err = run(["train", "--config", cfg,
                        "--baseline", "oracle"], capsys)
    assert code == 1
    assert "oracle" in json.loads(err)["error"]["message"]


def test_unknown_baseline_flag(pipeline, capsys):
    code, _, err = run(["train", "--config", pipeline[0],
                        "--baseline", "resnet"], capsys)
    assert code == 1
    json.loads(err)


def test_reify_subcommand(pipeline, capsys):
    cfg, out = pipeline
    code, _, _ = run(["reify", "--config", cfg], capsys)
    assert code == 0
    assert (out / "reified_graph.json").exists()
    rg = json.loads((out / "reified_graph.json").read_text())
    assert any(name.startswith("rdf:") for name in rg["relations"])


def test_answer_subcommand(pipeline, capsys, tmp_path):
    cfg, out = pipeline
    bundles = sorted((out / "bundles").glob("1p*"))
    # pull one sampled query out of the bundle artifacts
    from hyperq import Pattern, load_bundle, load_graph, query_to_json
    bundle = load_bundle(out / "bundles", Pattern.P1)
    rec = bundle.records("test")[0]
    qfile = tmp_path / "query.json"
    qfile.write_text(query_to_json(rec.query))
    code, stdout, _ = run(["answer", "--config", cfg, str(qfile)], capsys)
    assert code == 0
    payload = json.loads(stdout)
    assert set(payload) == {"answers", "labels"}
    assert frozenset(payload["answers"]) == rec.answers
    g = load_graph(str(out / "graph.json"))
    assert payload["labels"] == [g.entities.label(a)
                                 for a in payload["answers"]]


def test_answer_rejects_garbage(pipeline, capsys, tmp_path):
    qfile = tmp_path / "query.json"
    qfile.write_text("{not json")
    code, _, err = run(["answer", "--config", pipeline[0], str(qfile)],
                       capsys)
    assert code == 1
    json.loads(err)


def test_pipeline_determinism(tmp_path, capsys):
    outputs = []
    for name in ("a", "b"):
        base = tmp_path / name
        base.mkdir()
        cfg, out = write_config(base)
        for cmd in ("synth", "sample", "train", "eval"):
            assert main([cmd, "--config", str(cfg)]) == 0
        capsys.readouterr()
        outputs.append(out)
    a, b = outputs
    assert (a / "params_seed0.npz").read_bytes() == \
        (b / "params_seed0.npz").read_bytes()
    assert (a / "metrics_seed0.json").read_bytes() == \
        (b / "metrics_seed0.json").read_bytes()
    ra = json.loads((a / "train_report_seed0.json").read_text())
    rb = json.loads((b / "train_report_seed0.json").read_text())
    ra.pop("timing"), rb.pop("timing")
    assert ra == rb


def test_threaded_training_matches_serial(tmp_path, capsys, monkeypatch):
    results = {}
    for threads, name in (("1", "serial"), ("4", "fanout")):
        base = tmp_path / name
        base.mkdir()
        cfg, out = write_config(base, seeds="0, 1")
        monkeypatch.setenv("HYPERQ_THREADS", threads)
        for cmd in ("synth", "sample", "train"):
            assert main([cmd, "--config", str(cfg)]) == 0
        capsys.readouterr()
        results[name] = [(out / f"params_seed{s}.npz").read_bytes()
                         for s in (0, 1)]
    assert results["serial"] == results["fanout"]
    assert results["serial"][0] != results["serial"][1]


def test_seed_flag_overrides_sampling(pipeline, capsys):
    cfg, out = pipeline
    before = sorted(p.name for p in (out / "bundles").iterdir())
    code, _, _ = run(["sample", "--config", cfg, "--seed", "9"], capsys)
    assert code == 0
    # same filenames, regenerated with a different stream
    after = sorted(p.name for p in (out / "bundles").iterdir())
    assert before == after


def test_out_flag_redirects(tmp_path, capsys):
    cfg, _ = write_config(tmp_path)
    alt = tmp_path / "elsewhere"
    code, _, _ = run(["synth", "--config", cfg, "--out", str(alt)], capsys)
    assert code == 0
    assert (alt / "graph.json").exists()
