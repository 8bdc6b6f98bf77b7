"""
The command-line pipeline
=========================

Every stage of the pipeline is also a subcommand of the ``hyperq``
console script, driven by one INI config: synth (or ingest) builds the
graph, sample draws query bundles, train fits parameters per seed, eval
writes metrics, oracle computes the qualifier-blind ceiling, report
aggregates across seeds, and answer runs a single query from JSON. This
script drives the same entry point in process and shows the artifacts
each stage leaves behind.

Run with: python demos/06_cli_pipeline.py
"""

import json
import tempfile
from pathlib import Path

from hyperq import Pattern, instantiate, load_graph, query_to_json
from hyperq.cli import main

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
max_queries_per_split = 25

[training]
regime = mpqe-like
baseline = starqe
learning_rate = 0.005
batch_size = 8
max_epochs = 10
patience = 3
seeds = 0, 1

[model]
dim = 8
layers = 1
dropout = 0.0

[output]
dir = {out}
"""

tmp = Path(tempfile.mkdtemp())
out = tmp / "run"
config = tmp / "exp.ini"
config.write_text(CONFIG.format(out=out))

# ---------------------------------------------------------------------------
# Stage by stage. Each call is exactly what the console script would do;
# a non-zero return signals an error JSON on stderr.

for stage in ("synth", "sample", "train", "eval", "oracle", "report"):
    print(f"--- {stage}")
    code = main([stage, "--config", str(config)])
    if code != 0:
        raise SystemExit(f"{stage} failed with exit code {code}")

print("\nartifacts:")
for p in sorted(out.rglob("*")):
    if p.is_file():
        print(" ", p.relative_to(out))

# ---------------------------------------------------------------------------
# What the artifacts hold.

metrics = json.loads((out / "metrics_seed0.json").read_text())
print("\nseed 0 test metrics (1p):",
      {k: round(v, 4) if isinstance(v, float) else v
       for k, v in metrics["entries"]["1p"]["test"].items()
       if k in ("mrr", "count")})

report = json.loads((out / "report.json").read_text())
print("across seeds, mean test MRR:",
      round(report["entries"]["1p"]["test"]["mrr"]["mean"], 4),
      "std:", round(report["entries"]["1p"]["test"]["mrr"]["std"], 4))

oracle = json.loads((out / "oracle_metrics.json").read_text())
print("oracle ceiling, test MRR   :",
      round(oracle["entries"]["1p"]["test"]["mrr"], 4))

# ---------------------------------------------------------------------------
# The answer subcommand runs one query from JSON against the ingested
# graph and prints the exact answer set with labels. Build the query in
# process, serialize it, and hand the file over.

g = load_graph(str(out / "graph.json"))
q = instantiate("1p", anchors=[0], relations=[0])
qfile = tmp / "query.json"
qfile.write_text(query_to_json(q, Pattern.P1))

code = main(["answer", "--config", str(config), str(qfile)])
print("\nanswer exit", code, "(exact answers printed above as JSON)")
