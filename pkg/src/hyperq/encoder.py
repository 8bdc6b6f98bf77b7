"""Message-passing query encoder over qualifier-bearing query graphs.

A query graph is encoded by seeding each node with an embedding row (anchors
use their entity rows, every variable starts from a shared VAR row, the
target from a TARGET row), then running L rounds of relation-aware message
passing:

* each qualifier pair contributes hadamard(entity row, relation row);
* the statement relation is enriched with its qualifier vectors (plain sum
  or attention over them);
* messages run both along the stored arrow (forward weights, enriched
  relation) and against it (backward weights, enriched inverse relation);
* a node averages its self-loop transform with the per-direction message
  aggregates (sum scaled by 1/sqrt(count), or attention weighted by the
  receiving node) and applies the activation;
* relation rows themselves are linearly transformed between rounds.

The pooled query vector (sum over node rows, or the target row) is scored
against every real entity row by dot product, cosine, or negative distance.
All reductions run in sorted-id order, so permuting statements or qualifier
pairs reproduces identical bits, and isomorphic queries encode identically
once variables are canonically numbered.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .kg import QualifierPair
from .query import (Direction, NodeKind, QueryGraph, QueryNode,
                    ValidityStatus, diameter, validate)

LEAKY_SLOPE = 0.01       # fixed leakyrelu activation slope
ATTENTION_SLOPE = 0.2    # slope inside attention score nonlinearity

_INIT_STREAM = 0x1D17

COMPOSITIONS = ("hadamard",)
RELATION_AGGREGATIONS = ("sum", "attention")
MESSAGE_WEIGHTINGS = ("symmetric", "attention")
POOLINGS = ("sum", "target")
SIMILARITIES = ("dot", "cosine", "negnorm")
ACTIVATIONS = ("relu", "leakyrelu", "prelu")
DEPTH_MODES = ("fixed", "diameter", "diameter+1")


@dataclass(frozen=True)
class HyperParams:
    """Encoder architecture knobs. Defaults follow the tuned configuration."""

    dim: int = 192
    layers: int = 3
    composition: str = "hadamard"
    relation_aggregation: str = "sum"
    message_weighting: str = "attention"
    pooling: str = "target"
    similarity: str = "dot"
    activation: str = "leakyrelu"
    dropout: float = 0.5
    use_bias: bool = True
    depth_mode: str = "fixed"

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.layers < 0:
            raise ValueError("layers must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        for name, value, allowed in (
            ("composition", self.composition, COMPOSITIONS),
            ("relation_aggregation", self.relation_aggregation, RELATION_AGGREGATIONS),
            ("message_weighting", self.message_weighting, MESSAGE_WEIGHTINGS),
            ("pooling", self.pooling, POOLINGS),
            ("similarity", self.similarity, SIMILARITIES),
            ("activation", self.activation, ACTIVATIONS),
            ("depth_mode", self.depth_mode, DEPTH_MODES),
        ):
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")

    def to_dict(self) -> dict:
        return {
            "dim": self.dim, "layers": self.layers,
            "composition": self.composition,
            "relation_aggregation": self.relation_aggregation,
            "message_weighting": self.message_weighting,
            "pooling": self.pooling, "similarity": self.similarity,
            "activation": self.activation, "dropout": self.dropout,
            "use_bias": self.use_bias, "depth_mode": self.depth_mode,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "HyperParams":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass
class LayerParams:
    w_fwd: Var
    w_bwd: Var
    w_self: Var
    r_self: Var
    w_rel: Var
    b_node: Var | None = None
    attn_rel: Var | None = None
    attn_msg: Var | None = None
    prelu_slope: Var | None = None

    def named(self, prefix: str) -> dict[str, Var]:
        out = {}
        for name in ("w_fwd", "w_bwd", "w_self", "r_self", "w_rel", "b_node",
                     "attn_rel", "attn_msg", "prelu_slope"):
            v = getattr(self, name)
            if v is not None:
                out[f"{prefix}.{name}"] = v
        return out


class Parameters:
    """All trainable tensors for a fixed graph size and architecture.

    The entity table has two extra rows past the real entities: the shared
    VAR row at index ``n_entities`` and the TARGET row at ``n_entities + 1``.
    The relation table holds forward rows 0..n_relations-1 and the matching
    inverse rows at ``r + n_relations``.
    """

    def __init__(self, hp: HyperParams, n_entities: int, n_relations: int,
                 seed: int | None = 0):
        if n_entities <= 0 or n_relations <= 0:
            raise ValueError("need at least one entity and one relation")
        self.hp = hp
        self.n_entities = n_entities
        self.n_relations = n_relations
        d = hp.dim
        bound = 1.0 / np.sqrt(d)
        rng = (np.random.default_rng([_INIT_STREAM, seed])
               if seed is not None else None)

        def tensor(*shape):
            if rng is None:
                return Var(np.zeros(shape))
            return Var(rng.uniform(-bound, bound, size=shape))

        self.entity_table = tensor(n_entities + 2, d)
        self.relation_table = tensor(2 * n_relations, d)
        self.layers: list[LayerParams] = []
        for _ in range(hp.layers):
            lp = LayerParams(
                w_fwd=tensor(d, d), w_bwd=tensor(d, d), w_self=tensor(d, d),
                r_self=tensor(d), w_rel=tensor(d, d),
                b_node=tensor(d) if hp.use_bias else None,
                attn_rel=(tensor(2 * d)
                          if hp.relation_aggregation == "attention" else None),
                attn_msg=(tensor(2 * d)
                          if hp.message_weighting == "attention" else None),
                prelu_slope=tensor() if hp.activation == "prelu" else None,
            )
            self.layers.append(lp)

    @property
    def var_row(self) -> int:
        return self.n_entities

    @property
    def target_row(self) -> int:
        return self.n_entities + 1

    def named(self) -> dict[str, Var]:
        out = {"entity_table": self.entity_table,
               "relation_table": self.relation_table}
        for i, lp in enumerate(self.layers):
            out.update(lp.named(f"layer{i}"))
        return out

    def zero_grads(self) -> None:
        ad.zero_grads(self.named().values())

    def copy_values(self) -> dict[str, np.ndarray]:
        return {name: v.value.copy() for name, v in self.named().items()}

    def load_values(self, values: Mapping[str, np.ndarray]) -> None:
        named = self.named()
        if set(values) != set(named):
            missing = sorted(set(named) - set(values))
            extra = sorted(set(values) - set(named))
            raise ValueError(f"tensor names mismatch: missing {missing}, "
                             f"unexpected {extra}")
        for name, v in named.items():
            arr = np.asarray(values[name], dtype=np.float64)
            if arr.shape != v.value.shape:
                raise ValueError(f"{name}: shape {arr.shape} does not match "
                                 f"expected {v.value.shape}")
            v.value = arr.copy()


@dataclass
class QueryEmbedding:
    """Pooled query vector plus the enriched per-node table."""

    x: Var
    node_vectors: dict[QueryNode, Var]

    @property
    def vector(self) -> np.ndarray:
        return self.x.value


# -- per-piece operations (shared by encode, individually testable) -----------


def qualifier_rep(entity_table: Var, relation_table: Var,
                  pair: QualifierPair) -> Var:
    """hadamard(entity row of the value, relation row of the qualifier)."""
    return ad.mul(ad.row(entity_table, pair.value),
                  ad.row(relation_table, pair.relation))


def _attention_mix(attn: Var, context: Var, candidates: list[Var], d: int) -> Var:
    """GAT-style mix: softmax over LeakyReLU(attn . [context; candidate])."""
    a_ctx = ad.segment(attn, 0, d)
    a_cand = ad.segment(attn, d, 2 * d)
    ctx_score = ad.dot(a_ctx, context)
    scores = ad.stack1d([
        ad.leaky_relu(ad.add(ctx_score, ad.dot(a_cand, c)), ATTENTION_SLOPE)
        for c in candidates
    ])
    weights = ad.softmax(scores)
    return ad.add_n([ad.smul(ad.index(weights, i), c)
                     for i, c in enumerate(candidates)])


def qualified_relation_rep(layer: LayerParams, entity_table: Var,
                           relation_table: Var, relation_row: int,
                           qualifiers: Iterable[QualifierPair],
                           mode: str, d: int) -> Var:
    """Relation row enriched with its statement's qualifier vectors."""
    main = ad.row(relation_table, relation_row)
    reps = [qualifier_rep(entity_table, relation_table, p)
            for p in sorted(qualifiers)]
    if not reps:
        return main
    if mode == "sum":
        return ad.add_n([main] + reps)
    return _attention_mix(layer.attn_rel, main, [main] + reps, d)


def relation_update(relation_table: Var, layer: LayerParams) -> Var:
    """Next layer's relation table: every row linearly transformed."""
    return ad.matmat_rows(relation_table, layer.w_rel)


def aggregate_messages(layer: LayerParams, node_vec: Var,
                       messages: list[Var], mode: str, d: int) -> Var | None:
    """Combine one direction's incoming messages; None when there are none."""
    if not messages:
        return None
    if mode == "symmetric":
        return ad.scale(ad.add_n(messages), 1.0 / np.sqrt(len(messages)))
    return _attention_mix(layer.attn_msg, node_vec, messages, d)


def _activate(hp: HyperParams, layer: LayerParams, x: Var) -> Var:
    if hp.activation == "relu":
        return ad.leaky_relu(x, 0.0)
    if hp.activation == "leakyrelu":
        return ad.leaky_relu(x, LEAKY_SLOPE)
    return ad.prelu(x, layer.prelu_slope)


def _depth(hp: HyperParams, q: QueryGraph) -> int:
    if hp.depth_mode == "fixed":
        return hp.layers
    steps = diameter(q) + (1 if hp.depth_mode == "diameter+1" else 0)
    if steps > hp.layers:
        raise ValueError(f"query needs {steps} message-passing steps but only "
                         f"{hp.layers} layers are allocated")
    return steps


def encode(params: Parameters, q: QueryGraph, *, training: bool = False,
           dropout_rng: np.random.Generator | None = None) -> QueryEmbedding:
    """Encode a VALID query graph into a pooled vector.

    ``training=True`` applies dropout to the per-direction message
    aggregates, drawing masks from ``dropout_rng``. Raises on queries that
    do not validate as VALID (canonicalize first) and on non-finite output.
    """
    hp = params.hp
    v = validate(q)
    if v.status is not ValidityStatus.VALID:
        raise ValueError(f"encode requires a VALID query ({v.status.value}: "
                         f"{v.reason}); canonicalize first")
    if training and hp.dropout > 0.0 and dropout_rng is None:
        raise ValueError("training with dropout needs dropout_rng")

    d = hp.dim
    n_rel = params.n_relations
    steps = _depth(hp, q)
    nodes = q.nodes  # sorted: anchors, vars, target

    def initial_row(n: QueryNode) -> int:
        if n.kind is NodeKind.ANCHOR:
            if not 0 <= n.id < params.n_entities:
                raise KeyError(f"anchor entity id {n.id} out of range")
            return n.id
        if n.kind is NodeKind.VAR:
            return params.var_row
        return params.target_row

    current: dict[QueryNode, Var] = {
        n: ad.row(params.entity_table, initial_row(n)) for n in nodes
    }
    rel_table = params.relation_table

    for step in range(steps):
        layer = params.layers[step]
        fwd_in: dict[QueryNode, list[Var]] = {n: [] for n in nodes}
        bwd_in: dict[QueryNode, list[Var]] = {n: [] for n in nodes}
        for s in q.statements:  # sorted statement order
            for r in (s.relation, *(p.relation for p in s.qualifiers)):
                if not 0 <= r < n_rel:
                    raise KeyError(f"relation id {r} out of range")
            fwd_row = s.relation if s.direction is Direction.FORWARD else s.relation + n_rel
            bwd_row = s.relation + n_rel if s.direction is Direction.FORWARD else s.relation
            h_fwd = qualified_relation_rep(layer, params.entity_table, rel_table,
                                           fwd_row, s.qualifiers,
                                           hp.relation_aggregation, d)
            h_bwd = qualified_relation_rep(layer, params.entity_table, rel_table,
                                           bwd_row, s.qualifiers,
                                           hp.relation_aggregation, d)
            fwd_in[s.tail].append(ad.matvec(layer.w_fwd, ad.mul(current[s.head], h_fwd)))
            bwd_in[s.head].append(ad.matvec(layer.w_bwd, ad.mul(current[s.tail], h_bwd)))

        updated: dict[QueryNode, Var] = {}
        for n in nodes:
            vec = current[n]
            parts = [ad.matvec(layer.w_self, ad.mul(vec, layer.r_self))]
            for incoming in (fwd_in[n], bwd_in[n]):
                agg = aggregate_messages(layer, vec, incoming,
                                         hp.message_weighting, d)
                if agg is None:
                    continue
                if training and hp.dropout > 0.0:
                    agg = ad.dropout(agg, ad.dropout_mask(dropout_rng, (d,),
                                                          hp.dropout))
                parts.append(agg)
            pre = ad.scale(ad.add_n(parts), 1.0 / 3.0)
            if layer.b_node is not None:
                pre = ad.add(pre, layer.b_node)
            updated[n] = _activate(hp, layer, pre)
        current = updated
        if step + 1 < steps:  # the last update would feed nothing
            rel_table = relation_update(rel_table, layer)

    if hp.pooling == "sum":
        x = ad.add_n([current[n] for n in nodes])
    else:
        target = next(n for n in nodes if n.kind is NodeKind.TARGET)
        x = current[target]

    if not np.all(np.isfinite(x.value)):
        raise ArithmeticError("query embedding contains non-finite values")
    return QueryEmbedding(x, current)


def score_all(params: Parameters, embedding: QueryEmbedding,
              similarity: str | None = None) -> Var:
    """Similarity of the query vector against every real entity row."""
    kind = similarity if similarity is not None else params.hp.similarity
    if kind not in SIMILARITIES:
        raise ValueError(f"similarity must be one of {SIMILARITIES}, got {kind!r}")
    return ad.score_table(embedding.x, params.entity_table,
                          params.n_entities, kind)


# -- checkpoints ----------------------------------------------------------------

PARAMS_FORMAT = "hyperq-params"
PARAMS_FORMAT_VERSION = 1


def save_params(params: Parameters, path: str) -> None:
    """Write a checkpoint: JSON manifest plus row-major float64 tensors.

    The container is an uncompressed zip of .npy members (readable by
    np.load) written with fixed member timestamps, so identical parameters
    produce identical bytes.
    """
    meta = {
        "format": PARAMS_FORMAT,
        "version": PARAMS_FORMAT_VERSION,
        "hp": params.hp.to_dict(),
        "n_entities": params.n_entities,
        "n_relations": params.n_relations,
    }
    # note: ascontiguousarray would promote 0-d scalars to 1-d
    arrays = {name: v.value if v.value.flags.c_contiguous
              else np.ascontiguousarray(v.value)
              for name, v in params.named().items()}
    arrays["__meta__"] = np.array(json.dumps(meta, sort_keys=True))
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, arrays[name])
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_params(path: str) -> Parameters:
    """Load a checkpoint, rejecting manifest or tensor-shape mismatches."""
    with np.load(path, allow_pickle=False) as data:
        if "__meta__" not in data:
            raise ValueError(f"{path}: not a {PARAMS_FORMAT} checkpoint")
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != PARAMS_FORMAT:
            raise ValueError(f"{path}: not a {PARAMS_FORMAT} checkpoint")
        if meta.get("version") != PARAMS_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {meta.get('version')}")
        hp = HyperParams.from_dict(meta["hp"])
        params = Parameters(hp, meta["n_entities"], meta["n_relations"], seed=None)
        params.load_values({k: data[k] for k in data.files if k != "__meta__"})
    return params
