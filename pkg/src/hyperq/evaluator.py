"""Rank-based evaluation with the filtered realistic protocol.

For each query, every hard answer (an answer not already derivable from
earlier splits) is ranked among the candidates that remain after removing
the query's other answers and its easy answers. Ties resolve to the average
of the tie block's first and last positions ("realistic" rank). Per-answer
weights are the inverse of the number of ranked answers, so each query
contributes total weight one.

Reported metrics: weighted Hits@k, weighted MRR, and AMRI (adjusted mean
rank index), where AMRI = 1 means perfect ranking, 0 random-level, negative
worse than random:

    AMRI = 1 - (sum_i w_i (r_i - 1)) / (sum_i w_i (|C_i| - 1) / 2)

The module also provides the closed-form expected metrics of an oracle that
knows all qualifier-free answers but cannot use qualifiers to refine them,
and a faithfulness mode that scores a model on its own training queries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .encoder import Parameters, encode, score_all
from .kg import ALL_SPLITS, KnowledgeGraph, SplitTag
from .matcher import answer_set_ignoring_qualifiers
from .sampler import DatasetBundle, QueryRecord

DEFAULT_KS = (1, 3, 10)


@dataclass(frozen=True)
class RankingResult:
    """Filtered realistic ranks for one query's ranked answers."""

    ranks: tuple[tuple[int, float], ...]  # (answer id, rank)
    candidate_count: int
    answer_cardinality: int


@dataclass(frozen=True)
class Metrics:
    hits: dict[int, float]
    mrr: float
    amri: float
    count: int          # queries aggregated
    weight: float       # total rank weight

    def to_dict(self) -> dict:
        return {
            "hits": {str(k): v for k, v in sorted(self.hits.items())},
            "mrr": self.mrr,
            "amri": self.amri,
            "count": self.count,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Metrics":
        return cls(hits={int(k): v for k, v in d["hits"].items()},
                   mrr=d["mrr"], amri=d["amri"],
                   count=d["count"], weight=d["weight"])


def ranks(scores: np.ndarray, answers: Iterable[int],
          easy_answers: Iterable[int] = ()) -> RankingResult:
    """Filtered realistic rank of every answer.

    For answer ``a``, candidates are all entities except the other answers
    and all easy answers; the rank is the average of the best and worst
    positions of ``a``'s tie block: 1 + #strictly-greater + #ties/2.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ValueError("scores must be a vector over entities")
    answers = frozenset(answers)
    easy = frozenset(easy_answers)
    if not answers:
        raise ValueError("ranks needs a nonempty answer set")
    removed = answers | easy
    n = scores.shape[0]
    for a in removed:
        if not 0 <= a < n:
            raise ValueError(f"answer id {a} out of range for {n} scores")

    keep = np.ones(n, dtype=bool)
    keep[list(removed)] = False
    kept_scores = scores[keep]
    candidate_count = int(kept_scores.shape[0]) + 1  # the answer itself rejoins
    out = []
    for a in sorted(answers):
        sa = scores[a]
        greater = int(np.count_nonzero(kept_scores > sa))
        ties = int(np.count_nonzero(kept_scores == sa))  # a itself is not in kept
        out.append((a, greater + 1 + ties / 2.0))
    return RankingResult(tuple(out), candidate_count, len(answers))


def aggregate(results: Sequence[RankingResult],
              ks: Sequence[int] = DEFAULT_KS) -> Metrics:
    """Weighted Hits@k, MRR and AMRI over per-query ranking results."""
    if not results:
        raise ValueError("aggregate needs at least one ranking result")
    w_total = 0.0
    hit_sums = {k: 0.0 for k in ks}
    rr_sum = 0.0
    adj_sum = 0.0
    adj_expected = 0.0
    for res in results:
        w = 1.0 / res.answer_cardinality
        for _, r in res.ranks:
            w_total += w
            rr_sum += w / r
            for k in ks:
                if r <= k:
                    hit_sums[k] += w
            adj_sum += w * (r - 1.0)
            adj_expected += w * (res.candidate_count - 1.0) / 2.0
    amri = 1.0 - adj_sum / adj_expected if adj_expected > 0 else 0.0
    return Metrics(
        hits={k: hit_sums[k] / w_total for k in ks},
        mrr=rr_sum / w_total,
        amri=amri,
        count=len(results),
        weight=w_total,
    )


def evaluate_records(params: Parameters, records: Sequence[QueryRecord],
                     ks: Sequence[int] = DEFAULT_KS,
                     similarity: str | None = None) -> Metrics | None:
    """Standard evaluation loop: encode, score, rank the hard answers.

    Queries whose answers all come from earlier splits (no hard answers)
    are skipped. Returns None when nothing is rankable.
    """
    results = []
    for rec in records:
        hard = rec.hard_answers
        if not hard:
            continue
        emb = encode(params, rec.query)
        scores = score_all(params, emb, similarity).value
        results.append(ranks(scores, hard, rec.easy_answers))
    if not results:
        return None
    return aggregate(results, ks)


def evaluate_bundle(params: Parameters, bundle: DatasetBundle,
                    split: SplitTag | str = SplitTag.TEST,
                    ks: Sequence[int] = DEFAULT_KS,
                    similarity: str | None = None) -> Metrics | None:
    return evaluate_records(params, bundle.records(split), ks, similarity)


def evaluate_faithfulness(params: Parameters, bundle: DatasetBundle,
                          ks: Sequence[int] = DEFAULT_KS,
                          similarity: str | None = None) -> Metrics | None:
    """Score the model on its own training queries (memorization check)."""
    return evaluate_records(params, bundle.records(SplitTag.TRAIN), ks, similarity)


# -- oracle --------------------------------------------------------------------


def oracle_expected_metrics(g: KnowledgeGraph, records: Sequence[QueryRecord],
                            ks: Sequence[int] = DEFAULT_KS) -> Metrics | None:
    """Expected metrics of a perfect qualifier-blind answerer, closed form.

    The oracle retrieves S, the query's answers with every qualifier
    ignored, over all splits; the true answers A are a subset (qualifiers
    only shrink answer sets). It must place all of S ahead of everything
    else but cannot order within S, so after filtering, each hard answer's
    rank is uniform on 1..M with M = |S| - |A| + 1. Expectations:
    Hits@k = min(k, M)/M, reciprocal rank = H_M/M, rank - 1 = (M-1)/2.
    """
    w_total = 0.0
    hit_sums = {k: 0.0 for k in ks}
    rr_sum = 0.0
    adj_sum = 0.0
    adj_expected = 0.0
    count = 0
    for rec in records:
        hard = rec.hard_answers
        if not hard:
            continue
        s_set = answer_set_ignoring_qualifiers(g, rec.query, ALL_SPLITS)
        if not rec.answers <= s_set:
            raise AssertionError(
                "true answers escape the qualifier-free answer set; "
                "this signals a matcher bug")
        m = len(s_set) - len(rec.answers) + 1
        harmonic = float(np.sum(1.0 / np.arange(1, m + 1)))
        removed = len(rec.answers | rec.easy_answers)
        candidate_count = g.n_entities - removed + 1
        w = 1.0 / len(hard)
        for _ in hard:
            w_total += w
            rr_sum += w * harmonic / m
            for k in ks:
                hit_sums[k] += w * min(k, m) / m
            adj_sum += w * (m - 1.0) / 2.0
            adj_expected += w * (candidate_count - 1.0) / 2.0
        count += 1
    if count == 0:
        return None
    amri = 1.0 - adj_sum / adj_expected if adj_expected > 0 else 0.0
    return Metrics(
        hits={k: hit_sums[k] / w_total for k in ks},
        mrr=rr_sum / w_total,
        amri=amri,
        count=count,
        weight=w_total,
    )


# -- reports ---------------------------------------------------------------------


class MetricReport:
    """Metrics keyed by (pattern, split), with JSON and text renderings."""

    def __init__(self):
        self.entries: dict[tuple[str, str], Metrics] = {}

    def add(self, pattern: str, split: str, metrics: Metrics) -> None:
        self.entries[(pattern, split)] = metrics

    def get(self, pattern: str, split: str) -> Metrics | None:
        return self.entries.get((pattern, split))

    def to_dict(self) -> dict:
        out: dict[str, dict] = {}
        for (pattern, split), m in sorted(self.entries.items()):
            out.setdefault(pattern, {})[split] = m.to_dict()
        return {"entries": out}

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricReport":
        report = cls()
        for pattern, by_split in d["entries"].items():
            for split, m in by_split.items():
                report.add(pattern, split, Metrics.from_dict(m))
        return report

    def to_text(self) -> str:
        if not self.entries:
            return "(no metrics)"
        ks = sorted({k for m in self.entries.values() for k in m.hits})
        header = ["pattern", "split", "queries"]
        header += [f"hits@{k}" for k in ks] + ["mrr", "amri"]
        rows = [header]
        for (pattern, split), m in sorted(self.entries.items()):
            row = [pattern, split, str(m.count)]
            row += [f"{m.hits.get(k, float('nan')):.4f}" for k in ks]
            row += [f"{m.mrr:.4f}", f"{m.amri:.4f}"]
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
                 for r in rows]
        return "\n".join(lines)


def summarize_runs(reports: Sequence[MetricReport]) -> dict:
    """Merge per-seed reports into mean and std per (pattern, split, metric).

    Uses population std, so a single report yields std 0 everywhere.
    """
    if not reports:
        raise ValueError("summarize_runs needs at least one report")
    keys: list[tuple[str, str]] = sorted({k for r in reports for k in r.entries})
    out: dict[str, dict] = {}
    for pattern, split in keys:
        ms = [r.entries[(pattern, split)] for r in reports
              if (pattern, split) in r.entries]
        ks = sorted({k for m in ms for k in m.hits})
        stats: dict[str, dict] = {}
        for k in ks:
            vals = np.array([m.hits[k] for m in ms])
            stats[f"hits@{k}"] = {"mean": float(vals.mean()),
                                  "std": float(vals.std())}
        for name in ("mrr", "amri"):
            vals = np.array([getattr(m, name) for m in ms])
            stats[name] = {"mean": float(vals.mean()), "std": float(vals.std())}
        stats["runs"] = len(ms)
        out.setdefault(pattern, {})[split] = stats
    return {"entries": out}


def summary_to_text(summary: Mapping) -> str:
    """Aligned mean ± std table for a summarize_runs result."""
    entries = summary["entries"]
    if not entries:
        return "(no metrics)"
    metric_names: list[str] = []
    for by_split in entries.values():
        for stats in by_split.values():
            for name in stats:
                if name != "runs" and name not in metric_names:
                    metric_names.append(name)
    header = ["pattern", "split", "runs"] + metric_names
    rows = [header]
    for pattern in sorted(entries):
        for split in sorted(entries[pattern]):
            stats = entries[pattern][split]
            row = [pattern, split, str(stats.get("runs", ""))]
            for name in metric_names:
                if name in stats:
                    row.append(f"{stats[name]['mean']:.4f} ± {stats[name]['std']:.4f}")
                else:
                    row.append("-")
            rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
             for r in rows]
    return "\n".join(lines)
