"""Command-line pipeline driver.

Subcommands: ingest, synth, sample, reify, train, eval, oracle, answer,
report. Everything is driven by an INI config file (flat key = value lines
under section headers) validated against the schema below; unknown sections
or keys are rejected. Artifacts are JSON/JSONL files under the output
directory and are byte-identical across reruns with the same config and
seed; wall-clock readings live in a separate "timing" field so the rest of
each artifact stays reproducible.

The environment variable HYPERQ_THREADS caps how many per-seed runs execute
concurrently (default 1, fully sequential).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import dataclass, field, replace
from configparser import ConfigParser
from pathlib import Path

from .encoder import (ACTIVATIONS, COMPOSITIONS, DEPTH_MODES,
                      MESSAGE_WEIGHTINGS, POOLINGS, RELATION_AGGREGATIONS,
                      SIMILARITIES, HyperParams, load_params, save_params)
from .evaluator import (MetricReport, evaluate_faithfulness, evaluate_records,
                        oracle_expected_metrics, summarize_runs,
                        summary_to_text)
from .kg import (GraphBuilder, KnowledgeGraph, graph_stats, load_graph,
                 save_graph, strip_graph, synth_graph)
from .matcher import answer_set
from .query import Pattern, canonicalize, query_from_json
from .reify import reify_graph
from .sampler import (DatasetBundle, QualifierCondition, SamplingConfig,
                      generate, load_bundle, reify_bundle, save_bundle,
                      strip_bundle)
from .trainer import (BASELINES, REGIME_PATTERNS, DivergenceError,
                      TrainConfig, regime_patterns, regime_reified, train)


class ConfigError(ValueError):
    """Bad or missing configuration."""


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _parse_str_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


# section -> key -> value parser; this is the published config schema
CONFIG_SCHEMA = {
    "graph": {
        "source": _parse_str,          # synth | csv | json
        "seed": _parse_int,
        "n_entities": _parse_int,
        "n_relations": _parse_int,
        "profile": _parse_str,         # none | mixed | discriminative
        "n_statements": _parse_int,
        "split_fractions": _parse_float_list,
        "train_csv": _parse_str,
        "valid_csv": _parse_str,
        "test_csv": _parse_str,
        "json": _parse_str,
    },
    "sampling": {
        "patterns": _parse_str_list,
        "seed": _parse_int,
        "max_queries_per_split": _parse_int,
        "in_degree_threshold": _parse_int,
        "min_qualifiers": _parse_int,
        "max_qualifiers": _parse_int,
        "qualifier_edges": _parse_int_list,
        "max_answer_set": _parse_int,
        "visit_budget": _parse_int,
    },
    "training": {
        "regime": _parse_str,
        "baseline": _parse_str,
        "learning_rate": _parse_float,
        "batch_size": _parse_int,
        "max_epochs": _parse_int,
        "patience": _parse_int,
        "eval_every": _parse_int,
        "seeds": _parse_int_list,
        "faithfulness": _parse_bool,
    },
    "model": {
        "dim": _parse_int,
        "layers": _parse_int,
        "composition": _parse_str,
        "relation_aggregation": _parse_str,
        "message_weighting": _parse_str,
        "pooling": _parse_str,
        "similarity": _parse_str,
        "activation": _parse_str,
        "dropout": _parse_float,
        "use_bias": _parse_bool,
        "depth_mode": _parse_str,
    },
    "output": {
        "dir": _parse_str,
    },
}


@dataclass
class ExperimentConfig:
    """Parsed and validated experiment configuration."""

    graph: dict = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    training: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    output_dir: str = "out"

    @property
    def patterns(self) -> list[Pattern]:
        names = self.sampling.get("patterns", ["1p"])
        return [Pattern.coerce(n) for n in names]

    @property
    def regime(self) -> str:
        return self.training.get("regime", "all")

    @property
    def baseline(self) -> str:
        return self.training.get("baseline", "starqe")

    @property
    def seeds(self) -> list[int]:
        return list(self.training.get("seeds", [0]))

    def hyperparams(self) -> HyperParams:
        return HyperParams(**self.model)

    def train_config(self, seed: int) -> TrainConfig:
        keys = ("learning_rate", "batch_size", "max_epochs", "patience",
                "eval_every")
        kwargs = {k: self.training[k] for k in keys if k in self.training}
        return TrainConfig(seed=seed, hp=self.hyperparams(), **kwargs)

    def sampling_config(self, pattern: Pattern, seed: int | None = None) -> SamplingConfig:
        s = self.sampling
        qc = QualifierCondition(
            min_pairs=s.get("min_qualifiers", 1),
            max_pairs=s.get("max_qualifiers", 1),
            edges=frozenset(s["qualifier_edges"]) if "qualifier_edges" in s else None,
        )
        kwargs = {k: s[k] for k in ("max_queries_per_split", "in_degree_threshold",
                                    "max_answer_set", "visit_budget") if k in s}
        return SamplingConfig(pattern=pattern,
                              seed=seed if seed is not None else s.get("seed", 0),
                              qualifier_condition=qc, **kwargs)


def parse_config(path: str) -> ExperimentConfig:
    """Read and validate an INI config against the published schema."""
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = ConfigParser(interpolation=None)
    parser.read(path, encoding="utf-8")
    cfg = ExperimentConfig()
    for section in parser.sections():
        if section not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]; expected "
                              f"one of {sorted(CONFIG_SCHEMA)}")
        schema = CONFIG_SCHEMA[section]
        parsed: dict = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]; "
                                  f"expected one of {sorted(schema)}")
            try:
                parsed[key] = schema[key](raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
        if section == "output":
            cfg.output_dir = parsed.get("dir", cfg.output_dir)
        else:
            setattr(cfg, section, parsed)

    regime = cfg.regime
    if regime not in REGIME_PATTERNS:
        raise ConfigError(f"unknown regime {regime!r}; expected one of "
                          f"{sorted(REGIME_PATTERNS)}")
    if cfg.baseline not in BASELINES:
        raise ConfigError(f"unknown baseline {cfg.baseline!r}; expected one "
                          f"of {BASELINES}")
    if not cfg.seeds:
        raise ConfigError("seed list must be nonempty")
    for name, allowed in (("composition", COMPOSITIONS),
                          ("relation_aggregation", RELATION_AGGREGATIONS),
                          ("message_weighting", MESSAGE_WEIGHTINGS),
                          ("pooling", POOLINGS), ("similarity", SIMILARITIES),
                          ("activation", ACTIVATIONS),
                          ("depth_mode", DEPTH_MODES)):
        value = cfg.model.get(name)
        if value is not None and value not in allowed:
            raise ConfigError(f"[model] {name} must be one of {allowed}, "
                              f"got {value!r}")
    cfg.patterns  # force pattern validation
    cfg.hyperparams()
    return cfg


def _threads() -> int:
    raw = os.environ.get("HYPERQ_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"HYPERQ_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_graph_artifact(out_dir: Path) -> KnowledgeGraph:
    path = out_dir / "graph.json"
    if not path.is_file():
        raise ConfigError(f"no graph artifact at {path}; run synth or ingest first")
    return load_graph(str(path))


def _materialize(g: KnowledgeGraph, bundles: list[DatasetBundle],
                 baseline: str, regime: str, hp: HyperParams,
                 ) -> tuple[KnowledgeGraph, list[DatasetBundle], HyperParams]:
    """Apply baseline and regime transforms to graph, bundles, and hp."""
    if baseline == "triple-only":
        g = strip_graph(g)
        bundles = [strip_bundle(b) for b in bundles]
    if baseline == "reification" or regime_reified(regime):
        rg = reify_graph(g)
        bundles = [reify_bundle(b, rg) for b in bundles]
        g = rg
    if baseline == "zero-layers":
        hp = replace(hp, layers=0, depth_mode="fixed")
    return g, bundles, hp


# -- subcommand implementations -------------------------------------------------


def _cmd_synth(cfg: ExperimentConfig, args) -> int:
    gspec = cfg.graph
    if gspec.get("source", "synth") != "synth":
        raise ConfigError("synth subcommand needs [graph] source = synth")
    seed = args.seed if args.seed is not None else gspec.get("seed", 0)
    kwargs = {}
    if "n_statements" in gspec:
        kwargs["n_statements"] = gspec["n_statements"]
    if "split_fractions" in gspec:
        fr = gspec["split_fractions"]
        if len(fr) != 3:
            raise ConfigError("[graph] split_fractions needs three numbers")
        kwargs["split_fractions"] = tuple(fr)
    g = synth_graph(seed, gspec.get("n_entities", 100),
                    gspec.get("n_relations", 10),
                    profile=gspec.get("profile", "mixed"), **kwargs)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_graph(g, str(out / "graph.json"))
    _write_json(out / "stats.json", graph_stats(g))
    print(f"wrote {out / 'graph.json'} ({len(g.statements)} statements)")
    return 0


def _cmd_ingest(cfg: ExperimentConfig, args) -> int:
    gspec = cfg.graph
    source = gspec.get("source", "csv")
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if source == "csv":
        builder = GraphBuilder()
        any_file = False
        for key, split in (("train_csv", "train"), ("valid_csv", "valid"),
                           ("test_csv", "test")):
            path = gspec.get(key)
            if path:
                builder.ingest_csv(path, split)
                any_file = True
        if not any_file:
            raise ConfigError("[graph] needs train_csv/valid_csv/test_csv "
                              "for csv ingestion")
        g = builder.build()
    elif source == "json":
        path = gspec.get("json")
        if not path:
            raise ConfigError("[graph] json key required for json source")
        g = load_graph(path)
    else:
        raise ConfigError(f"ingest cannot handle source {source!r}")
    save_graph(g, str(out / "graph.json"))
    _write_json(out / "stats.json", graph_stats(g))
    print(f"wrote {out / 'graph.json'} ({len(g.statements)} statements)")
    return 0


def _cmd_sample(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.output_dir)
    g = _load_graph_artifact(out)
    patterns = ([Pattern.coerce(args.pattern)] if args.pattern
                else cfg.patterns)
    bundle_dir = out / "bundles"
    for pattern in patterns:
        scfg = cfg.sampling_config(pattern, seed=args.seed)
        bundle = generate(g, scfg)
        save_bundle(bundle, bundle_dir)
        counts = ", ".join(f"{t.value}={len(bundle.splits[t])}"
                           for t in bundle.splits)
        print(f"{pattern.value}: {counts}")
        for w in bundle.warnings:
            print(f"  warning: {w}")
    return 0


def _cmd_reify(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.output_dir)
    g = _load_graph_artifact(out)
    rg = reify_graph(g)
    save_graph(rg, str(out / "reified_graph.json"))
    print(f"wrote {out / 'reified_graph.json'} ({len(rg.statements)} triples)")
    reified_dir = out / "bundles_reified"
    for pattern in cfg.patterns:
        meta = out / "bundles" / f"{pattern.value}_metadata.json"
        if not meta.is_file():
            continue
        bundle = load_bundle(out / "bundles", pattern)
        save_bundle(reify_bundle(bundle, rg), reified_dir)
        print(f"reified bundle {pattern.value}")
    return 0


def _load_bundles(out: Path, patterns: list[Pattern]) -> list[DatasetBundle]:
    bundles = []
    for pattern in patterns:
        meta = out / "bundles" / f"{pattern.value}_metadata.json"
        if not meta.is_file():
            raise ConfigError(f"no bundle for pattern {pattern.value} under "
                              f"{out / 'bundles'}; run sample first")
        bundles.append(load_bundle(out / "bundles", pattern))
    return bundles


def _cmd_train(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.output_dir)
    regime = args.regime or cfg.regime
    baseline = args.baseline or cfg.baseline
    if baseline == "oracle":
        raise ConfigError("the oracle baseline has nothing to train")
    g = _load_graph_artifact(out)
    train_patterns = [p for p in cfg.patterns if p in regime_patterns(regime)]
    if not train_patterns:
        raise ConfigError(f"regime {regime!r} excludes every sampled pattern")
    bundles = _load_bundles(out, train_patterns)
    g2, bundles2, hp = _materialize(g, bundles, baseline, regime,
                                    cfg.hyperparams())
    seeds = [args.seed] if args.seed is not None else cfg.seeds

    def run_one(seed: int) -> str:
        tcfg = replace(cfg.train_config(seed), hp=hp)
        params, report = train(g2, bundles2, tcfg)
        save_params(params, str(out / f"params_seed{seed}.npz"))
        _write_json(out / f"train_report_seed{seed}.json", report.to_dict())
        return (f"seed {seed}: {report.epochs_run} epochs, "
                f"best validation mrr {report.best_validation_mrr}")

    for line in _fan_out(run_one, seeds):
        print(line)
    return 0


def _fan_out(fn, seeds: list[int]) -> list:
    threads = _threads()
    if threads == 1 or len(seeds) == 1:
        return [fn(s) for s in seeds]
    with concurrent.futures.ThreadPoolExecutor(max_workers=min(threads, len(seeds))) as pool:
        return list(pool.map(fn, seeds))


def _cmd_eval(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.output_dir)
    regime = args.regime or cfg.regime
    baseline = args.baseline or cfg.baseline
    g = _load_graph_artifact(out)
    patterns = ([Pattern.coerce(args.pattern)] if args.pattern else cfg.patterns)
    bundles = _load_bundles(out, patterns)
    faithful = cfg.training.get("faithfulness", False)
    seeds = [args.seed] if args.seed is not None else cfg.seeds

    if baseline == "oracle":
        report = MetricReport()
        for bundle in bundles:
            for split in ("valid", "test"):
                metrics = oracle_expected_metrics(g, bundle.records(split))
                if metrics is not None:
                    report.add(bundle.pattern.value, split, metrics)
        for seed in seeds:
            _write_json(out / f"metrics_seed{seed}.json", report.to_dict())
        print(report.to_text())
        return 0

    g2, bundles2, hp = _materialize(g, bundles, baseline, regime,
                                    cfg.hyperparams())

    def run_one(seed: int) -> str:
        path = out / f"params_seed{seed}.npz"
        if not path.is_file():
            raise ConfigError(f"no checkpoint at {path}; run train first")
        params = load_params(str(path))
        report = MetricReport()
        for bundle in bundles2:
            for split in ("valid", "test"):
                metrics = evaluate_records(params, bundle.records(split))
                if metrics is not None:
                    report.add(bundle.pattern.value, split, metrics)
            if faithful:
                metrics = evaluate_faithfulness(params, bundle)
                if metrics is not None:
                    report.add(bundle.pattern.value, "train", metrics)
        _write_json(out / f"metrics_seed{seed}.json", report.to_dict())
        return f"seed {seed}:\n{report.to_text()}"

    for block in _fan_out(run_one, seeds):
        print(block)
    return 0


def _cmd_oracle(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.output_dir)
    g = _load_graph_artifact(out)
    patterns = ([Pattern.coerce(args.pattern)] if args.pattern else cfg.patterns)
    bundles = _load_bundles(out, patterns)
    report = MetricReport()
    for bundle in bundles:
        for split in ("valid", "test"):
            metrics = oracle_expected_metrics(g, bundle.records(split))
            if metrics is not None:
                report.add(bundle.pattern.value, split, metrics)
    _write_json(out / "oracle_metrics.json", report.to_dict())
    print(report.to_text())
    return 0


def _cmd_answer(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.output_dir)
    g = _load_graph_artifact(out)
    if args.query == "-":
        text = sys.stdin.read()
    else:
        with open(args.query, encoding="utf-8") as fh:
            text = fh.read()
    q, _ = query_from_json(text)
    q = canonicalize(q)
    answers = sorted(answer_set(g, q))
    payload = {"answers": answers,
               "labels": [g.entities.label(a) for a in answers]}
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_report(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.output_dir)
    seeds = [args.seed] if args.seed is not None else cfg.seeds
    reports = []
    for seed in seeds:
        path = out / f"metrics_seed{seed}.json"
        if not path.is_file():
            raise ConfigError(f"no metrics at {path}; run eval first")
        with open(path, encoding="utf-8") as fh:
            reports.append(MetricReport.from_dict(json.load(fh)))
    summary = summarize_runs(reports)
    _write_json(out / "report.json", summary)
    print(summary_to_text(summary))
    return 0


# -- entry point -------------------------------------------------------------------

_COMMANDS = {
    "ingest": _cmd_ingest,
    "synth": _cmd_synth,
    "sample": _cmd_sample,
    "reify": _cmd_reify,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "oracle": _cmd_oracle,
    "answer": _cmd_answer,
    "report": _cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperq",
        description="Query embedding pipeline over qualifier-bearing graphs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed(s) with one seed")
        p.add_argument("--pattern", default=None,
                       help="restrict to one query pattern")
        p.add_argument("--regime", default=None,
                       help="training regime override")
        p.add_argument("--baseline", default=None,
                       help="baseline selector override")
        p.add_argument("--out", default=None, help="output directory override")
        if name == "answer":
            p.add_argument("query", help="query JSON file, or - for stdin")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.regime is not None and args.regime not in REGIME_PATTERNS:
            raise ConfigError(f"unknown regime {args.regime!r}")
        if args.baseline is not None and args.baseline not in BASELINES:
            raise ConfigError(f"unknown baseline {args.baseline!r}")
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, DivergenceError, OSError, ValueError, KeyError) as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
