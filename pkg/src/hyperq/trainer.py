"""Training loop for the query encoder.

Optimizes the encoder parameters on dataset bundles with multi-label binary
cross-entropy over the entity vocabulary (every true answer is a positive,
easy answers included; they are removed later by evaluation filtering, not
here). Batches are shuffled per epoch, gradients accumulate per query, and
one Adam step runs per batch, so a batch's update uses the sum of its
per-query gradients. Validation weighted MRR drives early stopping and best
checkpoint selection.

All randomness flows from the config seed through named sub-streams
(parameter init, batch shuffling, dropout), so runs are reproducible
bit-for-bit in single-threaded mode.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .encoder import HyperParams, Parameters, encode, score_all
from .evaluator import evaluate_records
from .kg import KnowledgeGraph, SplitTag, strip_graph
from .query import Pattern
from .reify import reify_graph
from .sampler import DatasetBundle, QueryRecord, reify_bundle, strip_bundle

_SHUFFLE_STREAM = 0x5F1E
_DROPOUT_STREAM = 0xD801

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# training regimes: which patterns the model sees during training, and
# whether the whole pipeline moves to the reified triple view
REGIME_PATTERNS: dict[str, tuple[str, ...]] = {
    "all": ("1p", "2p", "3p", "2i", "3i", "2i-1p", "1p-2i"),
    "q2b-like": ("1p", "2p", "3p", "2i", "3i"),
    "emql-like": ("1p", "2i"),
    "mpqe-like": ("1p",),
    "mpqe-like+reif": ("1p",),
}

_REIFIED_REGIMES = frozenset({"mpqe-like+reif"})

BASELINES = ("starqe", "triple-only", "reification", "zero-layers", "oracle")


def regime_patterns(regime: str) -> frozenset[Pattern]:
    try:
        names = REGIME_PATTERNS[regime]
    except KeyError:
        raise ValueError(f"unknown regime {regime!r}; expected one of "
                         f"{sorted(REGIME_PATTERNS)}") from None
    return frozenset(Pattern.coerce(n) for n in names)


def regime_reified(regime: str) -> bool:
    if regime not in REGIME_PATTERNS:
        raise ValueError(f"unknown regime {regime!r}")
    return regime in _REIFIED_REGIMES


def prepare_baseline(g: KnowledgeGraph, bundles: Sequence[DatasetBundle],
                     baseline: str, hp: HyperParams,
                     ) -> tuple[KnowledgeGraph, list[DatasetBundle], HyperParams]:
    """Rewrite graph/bundles/hyperparams for a baseline variant.

    'starqe' is the untouched qualifier-aware model; 'triple-only' strips
    qualifiers everywhere (answer sets are kept, so it is scored on the
    original task); 'reification' moves to the reified triple view;
    'zero-layers' forces L=0. 'oracle' has no trainable form.
    """
    if baseline not in BASELINES:
        raise ValueError(f"unknown baseline {baseline!r}; expected one of {BASELINES}")
    if baseline == "oracle":
        raise ValueError("the oracle baseline is evaluation-only and cannot be trained")
    if baseline == "triple-only":
        return strip_graph(g), [strip_bundle(b) for b in bundles], hp
    if baseline == "reification":
        rg = reify_graph(g)
        return rg, [reify_bundle(b, rg) for b in bundles], hp
    if baseline == "zero-layers":
        return g, list(bundles), replace(hp, layers=0, depth_mode="fixed")
    return g, list(bundles), hp


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 0.0007741
    batch_size: int = 64
    max_epochs: int = 50
    patience: int = 3
    seed: int = 0
    eval_every: int = 1
    hp: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        if self.optimizer != "adam":
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.patience < 1 or self.eval_every < 1:
            raise ValueError("batch_size, patience and eval_every must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    validation_mrr: list[tuple[int, float]] = field(default_factory=list)
    best_epoch: int | None = None
    best_validation_mrr: float | None = None
    epochs_run: int = 0
    stopped_early: bool = False
    diverged: bool = False
    wall_clock_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epoch_losses": list(self.epoch_losses),
            "validation_mrr": [[e, m] for e, m in self.validation_mrr],
            "best_epoch": self.best_epoch,
            "best_validation_mrr": self.best_validation_mrr,
            "epochs_run": self.epochs_run,
            "stopped_early": self.stopped_early,
            "diverged": self.diverged,
            "timing": {"wall_clock_seconds": self.wall_clock_seconds},
        }


class DivergenceError(RuntimeError):
    """Training hit a non-finite loss or embedding; carries the report."""

    def __init__(self, message: str, report: TrainReport):
        super().__init__(message)
        report.diverged = True
        self.report = report


def loss(scores: Var, answers: frozenset[int] | set[int]) -> Var:
    """Mean BCE-with-logits against a multi-hot answer vector."""
    if not answers:
        raise ValueError("loss needs a nonempty answer set")
    n = scores.value.shape[0]
    idx = sorted(answers)
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError(f"answer id out of range for {n} scores")
    targets = np.zeros(n, dtype=np.float64)
    targets[idx] = 1.0
    return ad.bce_with_logits(scores, targets)


class _Adam:
    def __init__(self, params: Parameters):
        named = params.named()
        self.m = {k: np.zeros_like(v.value) for k, v in named.items()}
        self.v = {k: np.zeros_like(v.value) for k, v in named.items()}
        self.t = 0

    def step(self, params: Parameters, lr: float) -> None:
        self.t += 1
        c1 = 1.0 - ADAM_BETA1 ** self.t
        c2 = 1.0 - ADAM_BETA2 ** self.t
        for name, var in params.named().items():
            g = var.grad if var.grad is not None else np.zeros_like(var.value)
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            var.value = var.value - lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def _train_records(bundles: Sequence[DatasetBundle]) -> list[QueryRecord]:
    out: list[QueryRecord] = []
    for b in bundles:
        out.extend(b.records(SplitTag.TRAIN))
    return out


def _valid_records(bundles: Sequence[DatasetBundle]) -> list[QueryRecord]:
    out: list[QueryRecord] = []
    for b in bundles:
        out.extend(b.records(SplitTag.VALID))
    return out


def train(g: KnowledgeGraph, bundles: Sequence[DatasetBundle],
          cfg: TrainConfig) -> tuple[Parameters, TrainReport]:
    """Train encoder parameters on the bundles' train splits.

    Returns the parameters restored to the best validation checkpoint (the
    final state if no validation queries exist) plus the training report.
    Raises :class:`DivergenceError` on non-finite losses or embeddings.
    """
    train_recs = _train_records(bundles)
    if not train_recs:
        raise ValueError("no training queries in the given bundles")
    valid_recs = _valid_records(bundles)

    params = Parameters(cfg.hp, g.n_entities, g.n_relations, seed=cfg.seed)
    shuffle_rng = np.random.default_rng([_SHUFFLE_STREAM, cfg.seed])
    dropout_rng = np.random.default_rng([_DROPOUT_STREAM, cfg.seed])
    adam = _Adam(params)
    report = TrainReport()
    best_values: dict[str, np.ndarray] | None = None
    stale = 0
    started = time.perf_counter()

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(len(train_recs))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            params.zero_grads()
            for i in batch:
                rec = train_recs[int(i)]
                try:
                    emb = encode(params, rec.query, training=True,
                                 dropout_rng=dropout_rng)
                except ArithmeticError as exc:
                    report.wall_clock_seconds = time.perf_counter() - started
                    raise DivergenceError(
                        f"epoch {epoch}: {exc}", report) from exc
                scores = score_all(params, emb)
                lv = loss(scores, rec.answers)
                if not np.isfinite(lv.value):
                    report.wall_clock_seconds = time.perf_counter() - started
                    raise DivergenceError(
                        f"epoch {epoch}: loss became non-finite", report)
                ad.backward(lv)
                total += float(lv.value)
            adam.step(params, cfg.learning_rate)
        report.epoch_losses.append(total / len(train_recs))
        report.epochs_run = epoch

        if valid_recs and epoch % cfg.eval_every == 0:
            metrics = evaluate_records(params, valid_recs)
            if metrics is None:
                continue
            mrr = metrics.mrr
            report.validation_mrr.append((epoch, mrr))
            if report.best_validation_mrr is None or mrr > report.best_validation_mrr:
                report.best_validation_mrr = mrr
                report.best_epoch = epoch
                best_values = params.copy_values()
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    report.stopped_early = True
                    break

    if best_values is not None:
        params.load_values(best_values)
    report.wall_clock_seconds = time.perf_counter() - started
    return params, report
